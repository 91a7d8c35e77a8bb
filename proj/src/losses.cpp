#include "yatnn/losses.hpp"

#include <cmath>

#include "yatnn/errors.hpp"
#include "yatnn/yat.hpp"

namespace yatnn {

namespace {
constexpr double kProbFloor = 1e-12;
}

double cross_entropy(const Matrix& probs, std::span<const int> labels) {
    if (labels.size() != probs.rows) {
        throw ShapeError("cross_entropy: label count does not match batch size");
    }
    double loss = 0.0;
    for (std::size_t i = 0; i < probs.rows; ++i) {
        const int label = labels[i];
        if (label < 0 || static_cast<std::size_t>(label) >= probs.cols) {
            throw DomainError("cross_entropy: label " + std::to_string(label) +
                              " out of range for " + std::to_string(probs.cols) +
                              " classes");
        }
        loss -= std::log(std::max(probs(i, static_cast<std::size_t>(label)), kProbFloor));
    }
    return loss / static_cast<double>(probs.rows);
}

Matrix cross_entropy_backward(const Matrix& probs, std::span<const int> labels) {
    Matrix g(probs.rows, probs.cols);
    const double inv_k = 1.0 / static_cast<double>(probs.rows);
    for (std::size_t i = 0; i < probs.rows; ++i) {
        const auto label = static_cast<std::size_t>(labels[i]);
        const double p = probs(i, label);
        if (p > kProbFloor) g(i, label) = -inv_k / p;
    }
    return g;
}

double e_regularizer_penalty(const Matrix& kernel, double epsilon) {
    const std::size_t m = kernel.rows;
    if (m < 2) return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            sum += yat_product(kernel.row(i), kernel.row(j), epsilon);
        }
    }
    return sum / (static_cast<double>(m) * (m - 1) / 2.0);
}

Matrix e_regularizer_grad(const Matrix& kernel, double epsilon) {
    const std::size_t m = kernel.rows;
    const std::size_t n = kernel.cols;
    Matrix g(m, n);
    if (m < 2) return g;
    const double inv_pairs = 1.0 / (static_cast<double>(m) * (m - 1) / 2.0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            const auto wi = kernel.row(i);
            const auto wj = kernel.row(j);
            const double s = dot(wi, wj);
            const double d = epsilon + squared_distance(wi, wj);
            // d(s^2/D)/dw_i = 2 s w_j / D - s^2 * 2 (w_i - w_j) / D^2.
            const double c_dot = 2.0 * s / d * inv_pairs;
            const double c_dist = 2.0 * s * s / (d * d) * inv_pairs;
            for (std::size_t t = 0; t < n; ++t) {
                const double diff = wi[t] - wj[t];
                g(i, t) += c_dot * wj[t] - c_dist * diff;
                g(j, t) += c_dot * wi[t] + c_dist * diff;
            }
        }
    }
    return g;
}

}  // namespace yatnn
