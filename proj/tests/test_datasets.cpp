#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>

#include "ffr/dataset.hpp"
#include "ffr/rng.hpp"

using namespace ffr;

namespace {

std::string temp_path(const std::string& stem) {
    return "test_scratch_" + stem;
}

std::string read_bytes(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    REQUIRE(bool(f));
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

void write_bytes(const std::string& path, const std::string& bytes) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

// Exact correlation of the binarized (Shape, XPosition) bits under the joint
// weight table, recomputed here from the published formula and the value/index
// orientation, independent of the sampler.
double exact_bit_correlation(const UnfairSamplingParams& p, int n_shape, int n_xpos, int thr_shape,
                             int thr_x) {
    double z = 0.0, e_s = 0.0, e_x = 0.0, e_sx = 0.0;
    for (int s = 0; s < n_shape; ++s) {
        for (int x = 0; x < n_xpos; ++x) {
            const double is = static_cast<double>(s + p.index_base);
            const double ix = static_cast<double>((n_xpos - 1 - x) + p.index_base);
            const double w = std::pow(is / n_shape, p.q_shape) + std::pow(ix / n_xpos, p.q_xpos);
            z += w;
            const double bs = s >= thr_shape ? 1.0 : 0.0;
            const double bx = x >= thr_x ? 1.0 : 0.0;
            e_s += w * bs;
            e_x += w * bx;
            e_sx += w * bs * bx;
        }
    }
    e_s /= z;
    e_x /= z;
    e_sx /= z;
    const double cov = e_sx - e_s * e_x;
    return cov / std::sqrt(e_s * (1 - e_s) * e_x * (1 - e_x));
}

double empirical_bit_correlation(const std::vector<std::int32_t>& factors, std::size_t n, int thr_shape,
                                 int thr_x) {
    double e_s = 0.0, e_x = 0.0, e_sx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double bs = factors[i * 6 + 1] >= thr_shape ? 1.0 : 0.0;
        const double bx = factors[i * 6 + 4] >= thr_x ? 1.0 : 0.0;
        e_s += bs;
        e_x += bx;
        e_sx += bs * bx;
    }
    e_s /= static_cast<double>(n);
    e_x /= static_cast<double>(n);
    e_sx /= static_cast<double>(n);
    return (e_sx - e_s * e_x) / std::sqrt(e_s * (1 - e_s) * e_x * (1 - e_x));
}

} // namespace

TEST_SUITE_BEGIN("datasets");

TEST_CASE("unfair pair weight follows the published formula") {
    UnfairSamplingParams p; // q_shape=1, q_xpos=3
    const double w = unfair_pair_weight(p, 2, 31, 3, 32);
    CHECK(w == doctest::Approx(2.0 / 3.0 + std::pow(31.0 / 32.0, 3)).epsilon(1e-12));
    CHECK(w == doctest::Approx(1.5752).epsilon(1e-3));

    UnfairSamplingParams flat{0.0, 0.0, 1};
    for (int s = 1; s <= 3; ++s) {
        for (int x = 1; x <= 32; ++x) CHECK(unfair_pair_weight(flat, s, x, 3, 32) == 2.0);
    }
}

TEST_CASE("unfair sampling reproduces the exact-table bit correlation") {
    const auto factors = dsprites_factors();
    const std::size_t n = 100000;

    UnfairSamplingParams p;
    auto m = sample_factors_unfair(p, factors, Rng::from_seed(123).fork("factors"), n);
    const double exact = exact_bit_correlation(p, 3, 32, 1, 16);
    const double emp = empirical_bit_correlation(m, n, 1, 16);
    CHECK(exact > 0.05);
    CHECK(emp > 0.05);
    CHECK(std::abs(emp - exact) < 0.01);

    UnfairSamplingParams flat{0.0, 0.0, 1};
    auto m0 = sample_factors_unfair(flat, factors, Rng::from_seed(123).fork("factors"), n);
    CHECK(std::abs(empirical_bit_correlation(m0, n, 1, 16)) < 0.02);
}

TEST_CASE("non-correlated factor marginals are uniform (chi-squared, p > 0.01)") {
    const auto factors = dsprites_factors();
    const std::size_t n = 100000;
    auto m = sample_factors_unfair(UnfairSamplingParams{}, factors, Rng::from_seed(10).fork("factors"), n);
    // Upper 1% chi-squared critical values for dof 5, 39, 31.
    const struct {
        std::size_t col;
        int card;
        double crit;
    } checks[] = {{2, 6, 15.086}, {3, 40, 62.428}, {5, 32, 52.191}};
    for (const auto& c : checks) {
        std::vector<double> counts(static_cast<std::size_t>(c.card), 0.0);
        for (std::size_t i = 0; i < n; ++i) counts[static_cast<std::size_t>(m[i * 6 + c.col])] += 1.0;
        const double expected = static_cast<double>(n) / c.card;
        double stat = 0.0;
        for (double k : counts) stat += (k - expected) * (k - expected) / expected;
        CHECK(stat < c.crit);
    }
}

TEST_CASE("binarization thresholds") {
    const auto factors = dsprites_factors();
    auto bits = binarize_factors({0, 0, 3, 19, 15, 16}, factors);
    CHECK(bits[0] == 0); // Color constant
    CHECK(bits[1] == 0); // Shape index 0
    CHECK(bits[2] == 1); // Scale >= 3
    CHECK(bits[3] == 0); // Orientation < 20
    CHECK(bits[4] == 0); // XPosition 15 < 16
    CHECK(bits[5] == 1); // YPosition >= 16

    // Idempotent when bits are re-read as indices with threshold 1.
    std::vector<FactorSpec> bitspec;
    for (const auto& f : factors) bitspec.push_back({f.name, 2, 1});
    std::vector<std::int32_t> asidx(bits.begin(), bits.end());
    auto again = binarize_factors(asidx, bitspec);
    for (std::size_t i = 0; i < bits.size(); ++i) CHECK(again[i] == bits[i]);
}

TEST_CASE("sprite rendering is binary and deterministic") {
    const auto factors = dsprites_factors();
    for (auto shape : {SpriteShape::Square, SpriteShape::Ellipse, SpriteShape::Heart}) {
        Tensor a = render_sprite(shape, 3, 7, 10, 20, 16, factors);
        Tensor b = render_sprite(shape, 3, 7, 10, 20, 16, factors);
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK((a[i] == 0.0 || a[i] == 1.0));
            CHECK(a[i] == b[i]);
        }
        CHECK(a.size() > 0);
    }
    CHECK_THROWS_AS(render_sprite(SpriteShape::Square, 0, 0, 0, 0, 17, factors), std::invalid_argument);
}

TEST_CASE("centered max-scale square matches an independent scanline rasterizer") {
    // Odd position cardinalities place the exact center on the grid.
    std::vector<FactorSpec> factors = dsprites_factors();
    factors[4].cardinality = 3;
    factors[5].cardinality = 3;
    const int res = 16;
    Tensor img = render_sprite(SpriteShape::Square, 5, 0, 1, 1, res, factors);

    // Scanline oracle: per row, solve the column interval analytically.
    const double h = 0.25; // max scale -> half-extent 0.25
    const double cx = 0.5, cy = 0.5;
    int lit_expected = 0;
    for (int r = 0; r < res; ++r) {
        const double v = (r + 0.5) / res;
        if (std::abs(v - cy) > h) continue;
        const int c0 = static_cast<int>(std::ceil(res * (cx - h) - 0.5));
        const int c1 = static_cast<int>(std::floor(res * (cx + h) - 0.5));
        for (int c = std::max(0, c0); c <= std::min(res - 1, c1); ++c) {
            ++lit_expected;
            CHECK(img.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) == 1.0);
        }
    }
    int lit = 0;
    for (std::size_t i = 0; i < img.size(); ++i) lit += img[i] == 1.0 ? 1 : 0;
    CHECK(lit == lit_expected);
    CHECK(lit > 0);
}

TEST_CASE("generated dataset is seed-deterministic and keeps default attributes") {
    DspritesConfig cfg;
    cfg.n = 100;
    cfg.seed = 7;
    Dataset d = generate_dsprites_unfair(cfg);
    CHECK(d.attr_names == std::vector<std::string>{"Shape", "Scale"});
    CHECK(d.label_names == std::vector<std::string>{"XPosition"});
    CHECK(d.A.cols() == 2);
    CHECK(d.n() == 100);
    CHECK(d.feature_dim() == 256);
    for (std::size_t i = 0; i < d.A.size(); ++i) CHECK((d.A[i] == 0.0 || d.A[i] == 1.0));

    const std::string p1 = temp_path("gen1.ffdset"), p2 = temp_path("gen2.ffdset");
    save_dataset(d, p1);
    save_dataset(generate_dsprites_unfair(cfg), p2);
    CHECK(read_bytes(p1) == read_bytes(p2));
    std::remove(p1.c_str());
    std::remove(p2.c_str());
}

TEST_CASE("attributes and labels are the binarization of their factor columns") {
    DspritesConfig cfg;
    cfg.n = 64;
    cfg.seed = 3;
    Dataset d = generate_dsprites_unfair(cfg);
    const auto factors = dsprites_factors();
    for (std::size_t i = 0; i < d.n(); ++i) {
        std::vector<std::int32_t> row(d.factors.begin() + static_cast<std::ptrdiff_t>(i * 6),
                                      d.factors.begin() + static_cast<std::ptrdiff_t>(i * 6 + 6));
        auto bits = binarize_factors(row, factors);
        CHECK(d.A.at(i, 0) == bits[1]);
        CHECK(d.A.at(i, 1) == bits[2]);
        CHECK(d.Y.at(i, 0) == bits[4]);
    }
}

TEST_CASE("container round trip is bitwise exact and validates") {
    DspritesConfig cfg;
    cfg.n = 10;
    cfg.seed = 1;
    Dataset d = generate_dsprites_unfair(cfg);
    const std::string p = temp_path("roundtrip.ffdset");
    save_dataset(d, p);
    Dataset r = load_dataset(p);
    const std::string p2 = temp_path("roundtrip2.ffdset");
    save_dataset(r, p2);
    CHECK(read_bytes(p) == read_bytes(p2));
    CHECK(r.attr_names == d.attr_names);
    CHECK(r.factors == d.factors);
    for (std::size_t i = 0; i < d.X.size(); ++i) CHECK(r.X[i] == d.X[i]);

    std::string bytes = read_bytes(p);
    SUBCASE("corrupted magic") {
        bytes[0] = 'Z';
        write_bytes(p2, bytes);
        CHECK_THROWS(load_dataset(p2));
    }
    SUBCASE("truncated payload") {
        write_bytes(p2, bytes.substr(0, bytes.size() - 5));
        CHECK_THROWS(load_dataset(p2));
    }
    SUBCASE("header/payload row disagreement") {
        // Header claims the same shapes but the payload holds one fewer X row.
        write_bytes(p2, bytes.substr(0, bytes.size() - d.feature_dim()));
        CHECK_THROWS(load_dataset(p2));
    }
    std::remove(p.c_str());
    std::remove(p2.c_str());
}

TEST_CASE("csv ingestion thresholds, standardization and errors") {
    const std::string p = temp_path("in.csv");
    {
        std::ofstream f(p);
        f << "c1,c2,feat1,feat2\n";
        f << "0.1,1.0,2.0,5.0\n";
        f << "0.9,0.0,4.0,5.0\n";
        f << "0.5,1.0,,5.0\n";
    }
    Dataset d = ingest_csv(p, {{"c1", 0.5}}, {"c2", 0.5});
    CHECK(d.n() == 3);
    CHECK(d.A.at(0, 0) == 0.0);
    CHECK(d.A.at(1, 0) == 1.0);
    CHECK(d.A.at(2, 0) == 1.0);
    CHECK(d.Y.at(0, 0) == 1.0);
    CHECK(d.Y.at(1, 0) == 0.0);
    // feat1: values 2, 4, imputed 3 -> standardized to -r, +r, 0.
    CHECK(d.X.at(2, 0) == 0.0);
    CHECK(d.X.at(0, 0) == doctest::Approx(-d.X.at(1, 0)));
    // feat2 constant -> all zeros.
    for (std::size_t r = 0; r < 3; ++r) CHECK(d.X.at(r, 1) == 0.0);

    CHECK_THROWS_WITH_AS(ingest_csv(p, {{"c9", 0.5}}, {"c2", 0.5}),
                         doctest::Contains("'c9'"), std::runtime_error);
    CHECK_THROWS_WITH_AS(ingest_csv(p, {{"c1", 0.5}}, {"nope", 0.5}),
                         doctest::Contains("'nope'"), std::runtime_error);

    {
        std::ofstream f(p);
        f << "c1,c2,feat1\n";
        f << "0.1,1.0,abc\n";
    }
    CHECK_THROWS_WITH_AS(ingest_csv(p, {{"c1", 0.5}}, {"c2", 0.5}), doctest::Contains("row 2"),
                         std::runtime_error);
    std::remove(p.c_str());
}

TEST_CASE("split is a deterministic 80/10/10 partition") {
    Splits s = split_indices(100, 4);
    CHECK(s.train.size() == 80);
    CHECK(s.val.size() == 10);
    CHECK(s.test.size() == 10);
    Splits t = split_indices(100, 4);
    CHECK(s.train == t.train);
    CHECK(s.test == t.test);
    std::vector<bool> seen(100, false);
    for (auto i : s.train) seen[i] = true;
    for (auto i : s.val) seen[i] = true;
    for (auto i : s.test) seen[i] = true;
    for (bool b : seen) CHECK(b);
}

TEST_SUITE_END();
