#include "yatnn/pca.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "yatnn/errors.hpp"

namespace yatnn {

namespace {

double off_diagonal_norm(const Matrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t j = 0; j < a.cols; ++j) {
            if (i != j) s += a(i, j) * a(i, j);
        }
    }
    return std::sqrt(s);
}

}  // namespace

SymEigen jacobi_eigen(const Matrix& sym, double off_tol, int max_sweeps) {
    if (sym.rows != sym.cols) throw ShapeError("jacobi_eigen: matrix must be square");
    const std::size_t n = sym.rows;
    Matrix a = sym;
    Matrix v = Matrix::identity(n);

    for (int sweep = 0; sweep < max_sweeps && off_diagonal_norm(a) >= off_tol; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double app = a(p, p);
                const double aqq = a(q, q);
                const double tau = (aqq - app) / (2.0 * apq);
                const double t = (tau >= 0.0)
                                     ? 1.0 / (tau + std::sqrt(1.0 + tau * tau))
                                     : -1.0 / (-tau + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;

                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    SymEigen out;
    out.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.values[i] = a(i, i);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return out.values[i] > out.values[j]; });

    SymEigen sorted;
    sorted.values.resize(n);
    sorted.vectors = Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        sorted.values[j] = out.values[order[j]];
        for (std::size_t i = 0; i < n; ++i) sorted.vectors(i, j) = v(i, order[j]);
    }
    return sorted;
}

namespace {

// Flip a direction vector so its largest-magnitude entry is positive;
// ties resolve to the first such index.
void sign_fix(std::vector<double>& axis) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < axis.size(); ++i) {
        if (std::abs(axis[i]) > std::abs(axis[best])) best = i;
    }
    if (axis[best] < 0.0) {
        for (double& x : axis) x = -x;
    }
}

}  // namespace

Pca2d pca_2d(const Matrix& x) {
    if (x.rows < 2) throw DomainError("pca_2d: need at least 2 samples");
    const std::size_t m = x.rows;
    const std::size_t n = x.cols;

    Matrix centered = x;
    for (std::size_t j = 0; j < n; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < m; ++i) mean += x(i, j);
        mean /= static_cast<double>(m);
        for (std::size_t i = 0; i < m; ++i) centered(i, j) -= mean;
    }

    const double denom = static_cast<double>(m - 1);
    double total_variance = 0.0;
    for (double v : centered.data) total_variance += v * v;
    total_variance /= denom;

    // Feature-space axes of the top-2 components, unit length.
    std::array<std::vector<double>, 2> axes;
    std::array<double, 2> eigenvalues{0.0, 0.0};

    if (n <= m) {
        Matrix cov = mat_mul_at(centered, centered);
        for (double& v : cov.data) v /= denom;
        SymEigen eig = jacobi_eigen(cov);
        for (int comp = 0; comp < 2; ++comp) {
            axes[comp].assign(n, 0.0);
            if (static_cast<std::size_t>(comp) < eig.values.size()) {
                eigenvalues[comp] = std::max(0.0, eig.values[comp]);
                for (std::size_t i = 0; i < n; ++i) axes[comp][i] = eig.vectors(i, comp);
            }
        }
    } else {
        // Row-Gram route: eigenvectors u of (C C^T)/(m-1) map to feature axes
        // C^T u (normalized), with identical nonzero eigenvalues.
        Matrix gram = mat_mul_bt(centered, centered);
        for (double& v : gram.data) v /= denom;
        SymEigen eig = jacobi_eigen(gram);
        for (int comp = 0; comp < 2; ++comp) {
            axes[comp].assign(n, 0.0);
            if (static_cast<std::size_t>(comp) >= eig.values.size()) continue;
            eigenvalues[comp] = std::max(0.0, eig.values[comp]);
            for (std::size_t j = 0; j < n; ++j) {
                double s = 0.0;
                for (std::size_t i = 0; i < m; ++i) {
                    s += centered(i, j) * eig.vectors(i, comp);
                }
                axes[comp][j] = s;
            }
            const double len = std::sqrt(squared_norm(axes[comp]));
            if (len > 0.0) {
                for (double& v : axes[comp]) v /= len;
            }
        }
    }

    for (auto& axis : axes) sign_fix(axis);

    Pca2d out;
    out.points = Matrix(m, 2);
    for (std::size_t i = 0; i < m; ++i) {
        out.points(i, 0) = dot(centered.row(i), axes[0]);
        out.points(i, 1) = dot(centered.row(i), axes[1]);
    }
    for (int comp = 0; comp < 2; ++comp) {
        out.variance_explained[comp] =
            total_variance > 0.0 ? eigenvalues[comp] / total_variance : 0.0;
        out.variance_explained[comp] = std::clamp(out.variance_explained[comp], 0.0, 1.0);
    }
    return out;
}

Matrix orthogonal_init(std::size_t rows, std::size_t cols, RngState& rng) {
    if (rows == 0 || cols == 0) throw DomainError("orthogonal_init: empty shape");
    const std::size_t big = std::max(rows, cols);
    const std::size_t small = std::min(rows, cols);

    Matrix g(big, small);
    for (double& v : g.data) v = next_normal(rng);

    // Modified Gram-Schmidt, two passes, on the columns of g.
    for (std::size_t j = 0; j < small; ++j) {
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t k = 0; k < j; ++k) {
                double proj = 0.0;
                for (std::size_t i = 0; i < big; ++i) proj += g(i, k) * g(i, j);
                for (std::size_t i = 0; i < big; ++i) g(i, j) -= proj * g(i, k);
            }
        }
        double norm = 0.0;
        for (std::size_t i = 0; i < big; ++i) norm += g(i, j) * g(i, j);
        norm = std::sqrt(norm);
        if (norm == 0.0) {
            // Degenerate draw; replace with a unit basis column and redo.
            for (std::size_t i = 0; i < big; ++i) g(i, j) = (i == j) ? 1.0 : 0.0;
            j -= 1;
            continue;
        }
        for (std::size_t i = 0; i < big; ++i) g(i, j) /= norm;
    }

    Matrix w(rows, cols);
    if (rows >= cols) {
        w = g;  // orthonormal columns
    } else {
        for (std::size_t i = 0; i < rows; ++i) {
            for (std::size_t j = 0; j < cols; ++j) w(i, j) = g(j, i);
        }
    }
    return w;
}

}  // namespace yatnn
