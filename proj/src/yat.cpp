#include "yatnn/yat.hpp"

#include <cmath>

#include "yatnn/errors.hpp"

namespace yatnn {

namespace {

void require_same_length(std::span<const double> a, std::span<const double> b,
                         const char* who) {
    if (a.size() != b.size()) {
        throw ShapeError(std::string(who) + ": vector lengths disagree");
    }
    if (a.empty()) {
        throw ShapeError(std::string(who) + ": empty vectors");
    }
}

}  // namespace

double yat_product(std::span<const double> e1, std::span<const double> e2,
                   double epsilon) {
    require_same_length(e1, e2, "yat_product");
    if (!(epsilon > 0.0)) throw DomainError("yat_product: epsilon must be positive");
    const double s = dot(e1, e2);
    return (s * s) / (epsilon + squared_distance(e1, e2));
}

double posi_yat_product(std::span<const double> e1, std::span<const double> e2,
                        double epsilon) {
    require_same_length(e1, e2, "posi_yat_product");
    if (!(epsilon > 0.0)) throw DomainError("posi_yat_product: epsilon must be positive");
    const double s = dot(e1, e2);
    return squared_distance(e1, e2) / (s * s + epsilon);
}

double scale_log_base(std::size_t n, ScaleMode mode) {
    if (n == 0) throw DomainError("scale_theta: dimension must be >= 1");
    const double nd = static_cast<double>(n);
    const double base = (mode == ScaleMode::MainText)
                            ? nd / std::log1p(nd)
                            : std::sqrt(nd) / std::log1p(nd);
    return std::log(base);
}

double scale_theta(std::size_t n, double alpha, ScaleMode mode) {
    return std::exp(alpha * scale_log_base(n, mode));
}

std::vector<double> softermax(std::span<const double> x, SoftermaxPolicy policy) {
    if (x.empty()) throw ShapeError("softermax: empty input");
    std::vector<double> terms(x.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (policy == SoftermaxPolicy::Strict) {
            if (!(x[i] >= 0.0)) {
                throw DomainError("softermax: strict policy requires non-negative inputs");
            }
            terms[i] = 1.0 + x[i];
        } else {
            terms[i] = std::max(0.0, 1.0 + x[i]);
        }
        sum += terms[i];
    }
    if (sum == 0.0) {  // every term clamped away
        return std::vector<double>(x.size(), 1.0 / static_cast<double>(x.size()));
    }
    for (double& t : terms) t /= sum;
    return terms;
}

std::vector<double> softmax(std::span<const double> x) {
    if (x.empty()) throw ShapeError("softmax: empty input");
    double max_x = x[0];
    for (double v : x) max_x = std::max(max_x, v);
    std::vector<double> out(x.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = std::exp(x[i] - max_x);
        sum += out[i];
    }
    for (double& v : out) v /= sum;
    return out;
}

Matrix pairwise_yat_matrix(const Matrix& w, double epsilon) {
    Matrix sim(w.rows, w.rows);
    for (std::size_t i = 0; i < w.rows; ++i) {
        for (std::size_t j = i; j < w.rows; ++j) {
            const double v = yat_product(w.row(i), w.row(j), epsilon);
            sim(i, j) = v;
            sim(j, i) = v;
        }
    }
    return sim;
}

FlopCounts flop_model(std::size_t d) {
    if (d == 0) throw DomainError("flop_model: dimension must be >= 1");
    FlopCounts f;
    f.d = d;
    f.traditional = 2 * static_cast<std::uint64_t>(d) + 1;
    f.yat = 5 * static_cast<std::uint64_t>(d) - 1;
    f.ratio = static_cast<double>(f.yat) / static_cast<double>(f.traditional);
    return f;
}

}  // namespace yatnn
