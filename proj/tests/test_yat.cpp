#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "yatnn/errors.hpp"
#include "yatnn/rng.hpp"
#include "yatnn/yat.hpp"

using namespace yatnn;

TEST_SUITE("yat-math") {

TEST_CASE("yat_product on the reference pairs") {
    const std::vector<double> e1 = {1, 0}, e2 = {0, 1};
    CHECK(yat_product(e1, e2, 1e-6) == 0.0);

    const std::vector<double> a = {6, 6}, b = {5, 5};
    CHECK(yat_product(a, b, 1e-6) == doctest::Approx(3600.0 / (2.0 + 1e-6)).epsilon(1e-12));

    const std::vector<double> c = {1, 1};
    CHECK(yat_product(c, c, 1e-6) == doctest::Approx(4.0e6).epsilon(1e-12));

    CHECK_THROWS_AS(yat_product(std::vector<double>{1.0}, e2), ShapeError);
    CHECK_THROWS_AS(yat_product(e1, e2, 0.0), DomainError);
}

TEST_CASE("posi_yat_product on the reference pairs") {
    const std::vector<double> same = {3, 4};
    CHECK(posi_yat_product(same, same, 1e-6) == 0.0);

    const std::vector<double> e1 = {1, 0}, e2 = {0, 1};
    CHECK(posi_yat_product(e1, e2, 1e-6) == doctest::Approx(2.0e6).epsilon(1e-12));

    const std::vector<double> a = {6, 6}, b = {5, 5};
    CHECK(posi_yat_product(a, b, 1e-6) ==
          doctest::Approx(2.0 / (3600.0 + 1e-6)).epsilon(1e-12));
}

TEST_CASE("scale_theta in both modes") {
    CHECK(scale_theta(7, 0.0, ScaleMode::MainText) == 1.0);
    CHECK(scale_theta(7, 0.0, ScaleMode::AppendixCode) == 1.0);
    CHECK(scale_theta(1, 1.0, ScaleMode::MainText) ==
          doctest::Approx(1.0 / std::log(2.0)).epsilon(1e-12));
    CHECK(scale_theta(100, 1.0, ScaleMode::MainText) ==
          doctest::Approx(100.0 / std::log(101.0)).epsilon(1e-12));
    CHECK(scale_theta(100, 1.0, ScaleMode::AppendixCode) ==
          doctest::Approx(10.0 / std::log(101.0)).epsilon(1e-12));
    CHECK(scale_theta(64, 2.5, ScaleMode::MainText) ==
          doctest::Approx(std::pow(64.0 / std::log(65.0), 2.5)).epsilon(1e-12));
    CHECK_THROWS_AS(scale_theta(0, 1.0), DomainError);
}

TEST_CASE("softermax values and policies") {
    auto uniform = softermax(std::vector<double>{0, 0, 0});
    for (double v : uniform) CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-15));

    auto two = softermax(std::vector<double>{1, 3});
    CHECK(two[0] == doctest::Approx(1.0 / 3).epsilon(1e-15));
    CHECK(two[1] == doctest::Approx(2.0 / 3).epsilon(1e-15));

    auto clamped =
        softermax(std::vector<double>{-2, -3, 0}, SoftermaxPolicy::ClampShift);
    CHECK(clamped[0] == 0.0);
    CHECK(clamped[1] == 0.0);
    CHECK(clamped[2] == 1.0);

    auto all_clamped =
        softermax(std::vector<double>{-5, -2}, SoftermaxPolicy::ClampShift);
    CHECK(all_clamped[0] == 0.5);
    CHECK(all_clamped[1] == 0.5);

    CHECK_THROWS_AS(softermax(std::vector<double>{1, -0.5}), DomainError);
    CHECK_THROWS_AS(softermax(std::vector<double>{}), ShapeError);
}

TEST_CASE("softermax strict preserves ordering and sums to one") {
    RngState rng{31, 0};
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 2 + next_u64(rng) % 8;
        std::vector<double> x(n);
        for (double& v : x) v = 5.0 * next_uniform01(rng);
        auto y = softermax(x);
        double sum = 0;
        for (double v : y) sum += v;
        CHECK(std::abs(sum - 1.0) <= 1e-12);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (x[i] > x[j]) CHECK(y[i] > y[j]);
            }
        }
    }
}

TEST_CASE("softmax reference values") {
    auto p = softmax(std::vector<double>{2.0, 1.0, 0.1});
    CHECK(std::abs(p[0] - 0.665) < 5e-4);
    CHECK(std::abs(p[1] - 0.245) < 5e-4);
    CHECK(std::abs(p[2] - 0.090) < 5e-4);

    for (double c : {-3.0, 0.0, 100.0, 1e6}) {
        auto u = softmax(std::vector<double>{c, c, c});
        for (double v : u) CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-12));
    }

    auto q = softmax(std::vector<double>{0.0, std::log(3.0)});
    CHECK(q[0] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(q[1] == doctest::Approx(0.75).epsilon(1e-12));

    CHECK_THROWS_AS(softmax(std::vector<double>{}), ShapeError);
}

TEST_CASE("pairwise_yat_matrix structure") {
    Matrix orth = Matrix::from_rows({{1, 0}, {0, 1}});
    Matrix s = pairwise_yat_matrix(orth, 1e-6);
    CHECK(s(0, 1) == 0.0);
    CHECK(s(1, 0) == 0.0);
    CHECK(s(0, 0) == doctest::Approx(1.0 / 1e-6).epsilon(1e-12));  // |w|^4 / eps

    Matrix dup = Matrix::from_rows({{1, 1}, {1, 1}});
    CHECK(pairwise_yat_matrix(dup, 1e-6)(0, 1) == doctest::Approx(4.0e6).epsilon(1e-12));

    RngState rng{77, 0};
    Matrix w(6, 4);
    for (double& v : w.data) v = next_normal(rng);
    Matrix sim = pairwise_yat_matrix(w);
    for (std::size_t i = 0; i < 6; ++i) {
        for (std::size_t j = 0; j < 6; ++j) {
            CHECK(sim(i, j) == sim(j, i));  // same arithmetic both sides
            CHECK(sim(i, j) >= 0.0);
        }
    }
}

TEST_CASE("flop_model reference points") {
    FlopCounts one = flop_model(1);
    CHECK(one.traditional == 3);
    CHECK(one.yat == 4);
    CHECK(one.ratio == doctest::Approx(4.0 / 3.0).epsilon(1e-15));

    CHECK(flop_model(100).ratio == doctest::Approx(499.0 / 201.0).epsilon(1e-12));
    CHECK(std::abs(flop_model(1000000).ratio - 2.5) < 1e-5);
    CHECK_THROWS_AS(flop_model(0), DomainError);
}

TEST_CASE("product symmetry over random pairs") {
    RngState rng{101, 0};
    for (int trial = 0; trial < 10000; ++trial) {
        const std::size_t n = 2 + next_u64(rng) % 6;
        std::vector<double> a(n), b(n);
        for (double& v : a) v = next_normal(rng);
        for (double& v : b) v = next_normal(rng);
        const double ab = yat_product(a, b);
        const double ba = yat_product(b, a);
        CHECK(std::abs(ab - ba) <= 1e-9 * std::max(1.0, ab));
        const double pab = posi_yat_product(a, b);
        const double pba = posi_yat_product(b, a);
        CHECK(std::abs(pab - pba) <= 1e-9 * std::max(1.0, pab));
        CHECK(ab >= 0.0);
        CHECK(pab >= 0.0);
    }
}

TEST_CASE("yat and posi_yat are near-reciprocal at tiny epsilon") {
    RngState rng{103, 0};
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> a(3), b(3);
        for (double& v : a) v = next_normal(rng);
        for (double& v : b) v = next_normal(rng);
        // Skip degenerate pairs where either quadratic form is tiny.
        const double s = dot(a, b);
        if (std::abs(s) < 0.1 || squared_distance(a, b) < 0.1) continue;
        const double product = yat_product(a, b, 1e-12) * posi_yat_product(a, b, 1e-12);
        CHECK(product <= 1.0 + 1e-12);
        CHECK(std::abs(product - 1.0) < 1e-6);
    }
}

TEST_CASE("yat scales quadratically with joint vector scaling at tiny epsilon") {
    RngState rng{107, 0};
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<double> a(4), b(4);
        for (double& v : a) v = next_normal(rng);
        for (double& v : b) v = next_normal(rng);
        double na = std::sqrt(squared_norm(a)), nb = std::sqrt(squared_norm(b));
        if (na < 0.2 || nb < 0.2) continue;
        for (double& v : a) v /= na;
        for (double& v : b) v /= nb;
        if (squared_distance(a, b) < 0.05 || std::abs(dot(a, b)) < 0.05) continue;

        const double c = 3.0;
        std::vector<double> ca = a, cb = b;
        for (double& v : ca) v *= c;
        for (double& v : cb) v *= c;
        const double base = yat_product(a, b, 1e-12);
        const double scaled = yat_product(ca, cb, 1e-12);
        CHECK(std::abs(scaled - c * c * base) <= 1e-6 * std::abs(scaled));
    }
}

TEST_CASE("angular profile at unit magnitudes") {
    // f(theta) = cos^2(theta) / (2 - 2cos(theta)) at epsilon -> 0. The profile
    // falls to zero at theta = pi/2 and then rises again toward 1/4 at pi, so
    // monotonicity holds on (0, pi/2] only; both halves are asserted.
    auto f = [](double theta) {
        const std::vector<double> a = {1.0, 0.0};
        const std::vector<double> b = {std::cos(theta), std::sin(theta)};
        return yat_product(a, b, 1e-15);
    };
    const int steps = 200;
    for (int i = 1; i < steps; ++i) {
        const double t0 = std::numbers::pi / 2 * i / steps;
        const double t1 = std::numbers::pi / 2 * (i + 1) / steps;
        CHECK(f(t0) >= f(t1));
    }
    for (int i = 1; i < steps; ++i) {
        const double t0 = std::numbers::pi / 2 * (1.0 + double(i) / steps);
        const double t1 = std::numbers::pi / 2 * (1.0 + double(i + 1) / steps);
        CHECK(f(t0) <= f(t1));
    }
    CHECK(f(std::numbers::pi * 0.999) < 0.2501);
    CHECK(f(std::numbers::pi * 0.999) > 0.24);
}

}  // TEST_SUITE
