#include "ffr/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace ffr {
namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;

// SplitMix64 finalizer: full-avalanche 64-bit mix.
std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

std::uint64_t hash_label(std::string_view s) {
    // FNV-1a 64.
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

} // namespace

Rng Rng::from_seed(std::uint64_t seed) { return Rng(mix64(seed + kGolden)); }

Rng Rng::fork(std::uint64_t label) const { return Rng(mix64(key_ ^ mix64(label + kGolden))); }

Rng Rng::fork(std::string_view label) const { return fork(hash_label(label)); }

std::uint64_t Rng::next_u64() {
    ++counter_;
    return mix64(key_ + counter_ * kGolden);
}

double Rng::uniform() {
    // 53-bit mantissa in [0, 1).
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

std::size_t Rng::below(std::size_t n) {
    if (n == 0) throw std::invalid_argument("rng: below(0)");
    return static_cast<std::size_t>(next_u64() % n);
}

Tensor Rng::normal_tensor(std::vector<std::size_t> shape) {
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = normal();
    return t;
}

Tensor Rng::uniform_tensor(std::vector<std::size_t> shape, double lo, double hi) {
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = lo + (hi - lo) * uniform();
    return t;
}

} // namespace ffr
