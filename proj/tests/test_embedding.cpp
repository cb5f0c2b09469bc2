#include <cmath>
#include <random>
#include <vector>

#include <doctest.h>

#include "qdyn/embedding.hpp"

using namespace qdyn;

namespace {

std::vector<double> grid(double start, double dt, int n) {
    std::vector<double> t(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        t[static_cast<size_t>(i)] = start + i * dt;
    }
    return t;
}

}  // namespace

TEST_CASE("PE at t=0 alternates 0 and 1") {
    const std::vector<double> t = {0.0};
    const Tensor pe = positional_encoding(t, {64, 1000.0});
    for (int k = 0; k < 64; ++k) {
        CHECK(pe.at(0, k) == (k % 2 == 0 ? 0.0 : 1.0));
    }
}

TEST_CASE("PE frequency ladder follows base^(-2k/d_p)") {
    const std::vector<double> t = {0.0, 0.7, 1.3, 5.0};
    const EncodingConfig cfg{64, 1000.0};
    const Tensor pe = positional_encoding(t, cfg);
    for (size_t j = 0; j < t.size(); ++j) {
        // omega_0 = 1 exactly
        CHECK(pe.at(static_cast<int>(j), 0) == doctest::Approx(std::sin(t[j])).epsilon(1e-15));
        // k = 32: omega = 1000^-1
        CHECK(pe.at(static_cast<int>(j), 32) ==
              doctest::Approx(std::sin(1e-3 * t[j])).epsilon(1e-12));
        // odd k uses cosine
        CHECK(pe.at(static_cast<int>(j), 1) ==
              doctest::Approx(std::cos(t[j] * std::pow(1000.0, -2.0 / 64.0))).epsilon(1e-12));
    }
}

TEST_CASE("PE entries stay within [-1, 1]") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> dist(-25.0, 25.0);
    std::vector<double> t(64);
    for (auto& v : t) {
        v = dist(rng);
    }
    const Tensor pe = positional_encoding(t, {64, 1000.0});
    for (int i = 0; i < pe.size(); ++i) {
        CHECK(std::abs(pe.data()[i]) <= 1.0);
    }
}

TEST_CASE("PE rows are pairwise distinct on the full paper grid") {
    const std::vector<double> t = grid(0.0, 0.1, 201);
    const Tensor pe = positional_encoding(t, {64, 1000.0});
    for (int a = 0; a < pe.rows(); ++a) {
        for (int b = a + 1; b < pe.rows(); ++b) {
            double max_diff = 0.0;
            for (int k = 0; k < pe.cols(); ++k) {
                max_diff = std::max(max_diff, std::abs(pe.at(a, k) - pe.at(b, k)));
            }
            CHECK(max_diff > 1e-6);
        }
    }
}

TEST_CASE("upper PE dimensions are near-constant over any 4-unit window") {
    // Spread below 1e-2 for k >= d_p/2 across windows anywhere in |t| <= 20.
    const EncodingConfig cfg{64, 1000.0};
    for (double start : {-20.0, -8.0, 0.0, 7.3, 16.0}) {
        const std::vector<double> t = grid(start, 0.1, 41);
        const Tensor pe = positional_encoding(t, cfg);
        for (int k = 32; k < 64; ++k) {
            double lo = pe.at(0, k);
            double hi = pe.at(0, k);
            for (int j = 1; j < pe.rows(); ++j) {
                lo = std::min(lo, pe.at(j, k));
                hi = std::max(hi, pe.at(j, k));
            }
            CHECK(hi - lo < 1e-2);
        }
    }
}

TEST_CASE("project_values trivial cases") {
    std::mt19937_64 rng(43);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Tensor w(1, 8);
    Tensor b(1, 8);
    for (int i = 0; i < 8; ++i) {
        w.data()[i] = dist(rng);
        b.data()[i] = dist(rng);
    }

    const std::vector<double> zeros(5, 0.0);
    const Tensor p0 = project_values(zeros, w, b);
    for (int j = 0; j < p0.rows(); ++j) {
        for (int k = 0; k < 8; ++k) {
            CHECK(p0.at(j, k) == b.data()[k]);
        }
    }

    const std::vector<double> x = {1.0, 2.0};
    const Tensor linear = project_values(x, w, Tensor(1, 8, 0.0));
    for (int k = 0; k < 8; ++k) {
        CHECK(linear.at(1, k) == doctest::Approx(2.0 * linear.at(0, k)).epsilon(1e-15));
    }

    const Tensor all_zero = project_values(x, Tensor(1, 8, 0.0), Tensor(1, 8, 0.0));
    for (int i = 0; i < all_zero.size(); ++i) {
        CHECK(all_zero.data()[i] == 0.0);
    }
}

TEST_CASE("embed equals PE when the projection is zero") {
    const std::vector<double> x = {0.4, -0.2, 0.9};
    const std::vector<double> t = {0.0, 0.1, 0.2};
    const EncodingConfig cfg{16, 1000.0};
    const Tensor embedded = embed(x, t, Tensor(1, 16, 0.0), Tensor(1, 16, 0.0), cfg);
    const Tensor pe = positional_encoding(t, cfg);
    for (int i = 0; i < embedded.size(); ++i) {
        CHECK(embedded.data()[i] == pe.data()[i]);
    }
}

TEST_CASE("embed with constant times differs only through the projection") {
    const std::vector<double> x = {0.3, -0.5};
    const std::vector<double> t = {1.5, 1.5};
    std::mt19937_64 rng(47);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Tensor w(1, 8);
    Tensor b(1, 8);
    for (int i = 0; i < 8; ++i) {
        w.data()[i] = dist(rng);
        b.data()[i] = dist(rng);
    }
    const Tensor embedded = embed(x, t, w, b, {8, 1000.0});
    const Tensor projected = project_values(x, w, b);
    // Row difference of the embedding equals the row difference of P since
    // the PE rows coincide.
    for (int k = 0; k < 8; ++k) {
        CHECK(embedded.at(0, k) - embedded.at(1, k) ==
              doctest::Approx(projected.at(0, k) - projected.at(1, k)).epsilon(1e-12));
    }
}

TEST_CASE("embed is additive in the values") {
    std::mt19937_64 rng(53);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Tensor w(1, 16);
    Tensor b(1, 16);
    for (int i = 0; i < 16; ++i) {
        w.data()[i] = dist(rng);
        b.data()[i] = dist(rng);
    }
    std::vector<double> x(7);
    for (auto& v : x) {
        v = dist(rng);
    }
    const std::vector<double> t = grid(2.0, 0.1, 7);
    const std::vector<double> zeros(7, 0.0);
    const EncodingConfig cfg{16, 1000.0};

    const Tensor with_x = embed(x, t, w, b, cfg);
    const Tensor without_x = embed(zeros, t, w, b, cfg);
    const Tensor p_x = project_values(x, w, b);
    const Tensor p_0 = project_values(zeros, w, b);
    for (int i = 0; i < with_x.size(); ++i) {
        CHECK(std::abs((with_x.data()[i] - without_x.data()[i]) -
                       (p_x.data()[i] - p_0.data()[i])) < 1e-12);
    }
}

TEST_CASE("paper window shape is 41x64") {
    const std::vector<double> t = grid(0.0, 0.1, 41);
    std::vector<double> x(41, 0.5);
    const Tensor embedded = embed(x, t, Tensor(1, 64, 0.1), Tensor(1, 64, 0.0), {64, 1000.0});
    CHECK(embedded.rows() == 41);
    CHECK(embedded.cols() == 64);
}

TEST_CASE("embed rejects mismatched lengths and odd d_p") {
    const std::vector<double> x = {1.0, 2.0};
    const std::vector<double> t = {0.0};
    CHECK_THROWS_AS(embed(x, t, Tensor(1, 4, 0.0), Tensor(1, 4, 0.0), {4, 1000.0}), ShapeError);
    CHECK_THROWS_AS(positional_encoding(t, {5, 1000.0}), ShapeError);
}
