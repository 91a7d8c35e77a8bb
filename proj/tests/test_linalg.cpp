#include <cmath>

#include "doctest.h"
#include "yatnn/errors.hpp"
#include "yatnn/matrix.hpp"
#include "yatnn/pca.hpp"
#include "yatnn/rng.hpp"

using namespace yatnn;

namespace {

// Independent eigensolver for the PCA cross-check: power iteration with
// deflation on an explicitly accumulated covariance matrix.
struct PowerIterationPca {
    std::vector<double> axis1, axis2;
    double lambda1 = 0, lambda2 = 0, total = 0;

    explicit PowerIterationPca(const Matrix& x) {
        const std::size_t m = x.rows, n = x.cols;
        std::vector<double> mean(n, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j) mean[j] += x(i, j) / double(m);
        }
        std::vector<std::vector<double>> cov(n, std::vector<double>(n, 0.0));
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t a = 0; a < n; ++a) {
                for (std::size_t b = 0; b < n; ++b) {
                    cov[a][b] += (x(i, a) - mean[a]) * (x(i, b) - mean[b]) / double(m - 1);
                }
            }
        }
        for (std::size_t a = 0; a < n; ++a) total += cov[a][a];

        auto power = [&](const std::vector<std::vector<double>>& mat, double& lambda) {
            std::vector<double> v(n, 1.0 / std::sqrt(double(n)));
            for (int iter = 0; iter < 100000; ++iter) {
                std::vector<double> next(n, 0.0);
                for (std::size_t a = 0; a < n; ++a) {
                    for (std::size_t b = 0; b < n; ++b) next[a] += mat[a][b] * v[b];
                }
                double norm = 0;
                for (double t : next) norm += t * t;
                norm = std::sqrt(norm);
                if (norm == 0) break;
                double diff = 0;
                for (std::size_t a = 0; a < n; ++a) {
                    next[a] /= norm;
                    diff += std::abs(next[a] - v[a]);
                }
                // Sign can flip each iteration for negative eigenvalues; track
                // the aligned difference.
                double diff_neg = 0;
                for (std::size_t a = 0; a < n; ++a) diff_neg += std::abs(next[a] + v[a]);
                v = next;
                if (std::min(diff, diff_neg) < 1e-12) break;
            }
            lambda = 0;
            for (std::size_t a = 0; a < n; ++a) {
                double row = 0;
                for (std::size_t b = 0; b < n; ++b) row += mat[a][b] * v[b];
                lambda += v[a] * row;
            }
            return v;
        };

        axis1 = power(cov, lambda1);
        auto deflated = cov;
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t b = 0; b < n; ++b) {
                deflated[a][b] -= lambda1 * axis1[a] * axis1[b];
            }
        }
        axis2 = power(deflated, lambda2);
    }
};

}  // namespace

TEST_SUITE("linalg") {

TEST_CASE("mat_mul identity and hand-computed products") {
    const Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
    CHECK(mat_mul(Matrix::identity(2), a) == a);
    CHECK(mat_mul(a, Matrix::identity(2)) == a);

    const Matrix b = Matrix::from_rows({{0}, {1}});
    const Matrix ab = mat_mul(a, b);
    CHECK(ab.rows == 2);
    CHECK(ab.cols == 1);
    CHECK(ab(0, 0) == 2.0);
    CHECK(ab(1, 0) == 4.0);

    const Matrix z = mat_mul(Matrix(2, 3), Matrix(3, 2, 7.0));
    for (double v : z.data) CHECK(v == 0.0);

    CHECK_THROWS_AS(mat_mul(Matrix(2, 3), Matrix(2, 3)), ShapeError);
}

TEST_CASE("mat_mul agrees with the naive triple loop on random integers") {
    RngState rng{11, 0};
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t k = 1 + next_u64(rng) % 5;
        const std::size_t n = 1 + next_u64(rng) % 5;
        const std::size_t m = 1 + next_u64(rng) % 5;
        Matrix a(k, n), b(n, m);
        for (double& v : a.data) v = double(int(next_u64(rng) % 19) - 9);
        for (double& v : b.data) v = double(int(next_u64(rng) % 19) - 9);
        Matrix c = mat_mul(a, b);
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                double s = 0;
                for (std::size_t t = 0; t < n; ++t) s += a(i, t) * b(t, j);
                CHECK(c(i, j) == s);  // integer-valued, exact
            }
        }
        // Transposed variants agree with the plain product.
        CHECK(mat_mul_bt(a, transpose(b)) == c);
        CHECK(mat_mul_at(transpose(a), b) == c);
    }
}

TEST_CASE("rng bernoulli edge cases and statistics") {
    RngState rng{42, 0};
    auto zeros = rng_draw(rng, RngKind::Bernoulli, 100, 0.0);
    for (double v : zeros) CHECK(v == 0.0);
    auto ones = rng_draw(rng, RngKind::Bernoulli, 100, 1.0);
    for (double v : ones) CHECK(v == 1.0);

    const std::size_t n = 100000;
    auto draws = rng_draw(rng, RngKind::Bernoulli, n, 0.5);
    double mean = 0;
    for (double v : draws) mean += v / double(n);
    CHECK(std::abs(mean - 0.5) < 3.0 * std::sqrt(0.25 / double(n)));

    CHECK_THROWS_AS(rng_draw(rng, RngKind::Bernoulli, 1, 1.5), DomainError);
    CHECK_THROWS_AS(rng_draw(rng, RngKind::Bernoulli, 1, -0.1), DomainError);
}

TEST_CASE("rng streams are pure functions of (seed, counter)") {
    RngState a{7, 0}, b{7, 0};
    for (int i = 0; i < 1000; ++i) CHECK(next_u64(a) == next_u64(b));
    CHECK(a == b);

    RngState c{7, 500};
    RngState d{7, 0};
    for (int i = 0; i < 500; ++i) next_u64(d);
    CHECK(next_u64(c) == next_u64(d));

    // Normal draws: sane first moments.
    RngState e{123, 0};
    double mean = 0, var = 0;
    const int n = 50000;
    std::vector<double> xs(n);
    for (auto& x : xs) x = next_normal(e);
    for (double x : xs) mean += x / n;
    for (double x : xs) var += (x - mean) * (x - mean) / n;
    CHECK(std::abs(mean) < 0.02);
    CHECK(std::abs(var - 1.0) < 0.03);
}

TEST_CASE("orthogonal_init produces orthonormal rows or columns") {
    RngState rng{3, 0};
    Matrix sq = orthogonal_init(4, 4, rng);
    Matrix g = mat_mul_bt(sq, sq);
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
            CHECK(std::abs(g(i, j) - (i == j ? 1.0 : 0.0)) < 1e-9);
        }
    }

    Matrix wide = orthogonal_init(2, 5, rng);
    Matrix gw = mat_mul_bt(wide, wide);
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
            CHECK(std::abs(gw(i, j) - (i == j ? 1.0 : 0.0)) < 1e-9);
        }
    }

    Matrix tall = orthogonal_init(5, 2, rng);
    Matrix gt = mat_mul_at(tall, tall);
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
            CHECK(std::abs(gt(i, j) - (i == j ? 1.0 : 0.0)) < 1e-9);
        }
    }

    RngState r1{99, 0}, r2{99, 0};
    CHECK(orthogonal_init(6, 3, r1) == orthogonal_init(6, 3, r2));
}

TEST_CASE("pca_2d on rank-1 data explains all variance in one component") {
    Matrix x(3, 5);
    const double dir[5] = {1, -2, 0.5, 3, -1};
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 5; ++j) x(i, j) = double(i) * dir[j] + 4.0;
    }
    Pca2d p = pca_2d(x);
    CHECK(std::abs(p.variance_explained[0] - 1.0) < 1e-9);
    CHECK(p.variance_explained[1] <= p.variance_explained[0]);
    CHECK_THROWS_AS(pca_2d(Matrix(1, 3)), DomainError);
}

TEST_CASE("pca_2d of 2-D data preserves pairwise distances") {
    RngState rng{5, 0};
    Matrix x(8, 2);
    for (double& v : x.data) v = next_normal(rng);
    Pca2d p = pca_2d(x);
    for (std::size_t i = 0; i < x.rows; ++i) {
        for (std::size_t j = i + 1; j < x.rows; ++j) {
            const double orig = squared_distance(x.row(i), x.row(j));
            const double proj = squared_distance(p.points.row(i), p.points.row(j));
            CHECK(std::abs(orig - proj) < 1e-9);
        }
    }
}

TEST_CASE("pca_2d matches the power-iteration oracle on random data") {
    RngState rng{17, 0};
    Matrix x(10, 5);
    for (double& v : x.data) v = next_normal(rng);
    Pca2d p = pca_2d(x);
    PowerIterationPca oracle(x);

    CHECK(std::abs(p.variance_explained[0] - oracle.lambda1 / oracle.total) < 1e-8);
    CHECK(std::abs(p.variance_explained[1] - oracle.lambda2 / oracle.total) < 1e-8);

    // Projections agree with the oracle axes up to per-component sign.
    std::vector<double> mean(5, 0.0);
    for (std::size_t i = 0; i < x.rows; ++i) {
        for (std::size_t j = 0; j < 5; ++j) mean[j] += x(i, j) / double(x.rows);
    }
    for (int comp = 0; comp < 2; ++comp) {
        const auto& axis = comp == 0 ? oracle.axis1 : oracle.axis2;
        double sign = 0.0;
        for (std::size_t i = 0; i < x.rows; ++i) {
            double proj = 0;
            for (std::size_t j = 0; j < 5; ++j) proj += (x(i, j) - mean[j]) * axis[j];
            if (sign == 0.0 && std::abs(proj) > 1e-6) {
                sign = proj / p.points(i, std::size_t(comp));
            }
        }
        CHECK(std::abs(std::abs(sign) - 1.0) < 1e-6);
        for (std::size_t i = 0; i < x.rows; ++i) {
            double proj = 0;
            for (std::size_t j = 0; j < 5; ++j) proj += (x(i, j) - mean[j]) * axis[j];
            CHECK(std::abs(proj - sign * p.points(i, std::size_t(comp))) < 1e-8);
        }
    }
}

TEST_CASE("pca_2d is invariant to row order up to component sign") {
    RngState rng{23, 0};
    Matrix x(7, 4);
    for (double& v : x.data) v = next_normal(rng);
    Matrix reversed(7, 4);
    for (std::size_t i = 0; i < 7; ++i) {
        for (std::size_t j = 0; j < 4; ++j) reversed(i, j) = x(6 - i, j);
    }
    Pca2d a = pca_2d(x);
    Pca2d b = pca_2d(reversed);
    for (int comp = 0; comp < 2; ++comp) {
        for (std::size_t i = 0; i < 7; ++i) {
            // The shared sign convention makes the projections line up exactly.
            CHECK(std::abs(a.points(i, std::size_t(comp)) -
                           b.points(6 - i, std::size_t(comp))) < 1e-9);
        }
    }
}

}  // TEST_SUITE
