#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "ffr/tensor.hpp"

namespace ffr {

/// Counter-based deterministic random stream. Every value is a pure function
/// of (key, counter), and child streams forked by label are independent of the
/// parent's position, so a run can re-derive the stream for any step from the
/// seed alone.
class Rng {
public:
    explicit Rng(std::uint64_t key) : key_(key) {}

    static Rng from_seed(std::uint64_t seed);

    /// Child stream; counter starts at zero.
    Rng fork(std::uint64_t label) const;
    Rng fork(std::string_view label) const;

    std::uint64_t next_u64();
    double uniform();                 // [0, 1)
    double normal();                  // N(0, 1), Box-Muller
    std::size_t below(std::size_t n); // [0, n)

    Tensor normal_tensor(std::vector<std::size_t> shape);
    Tensor uniform_tensor(std::vector<std::size_t> shape, double lo, double hi);

    /// In-place Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = below(i);
            std::swap(v[i - 1], v[j]);
        }
    }

    std::uint64_t key() const { return key_; }
    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

} // namespace ffr
