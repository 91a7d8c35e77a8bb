#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "yatnn/matrix.hpp"

namespace yatnn {

inline constexpr double kDefaultEpsilon = 1e-6;

// Which base the layer scale is raised to. MainText uses the input dimension
// n with base n/ln(1+n); AppendixCode uses the output feature count m with
// base sqrt(m)/ln(1+m). Both are implemented; MainText is the default.
enum class ScaleMode { MainText, AppendixCode };

enum class SoftermaxPolicy {
    Strict,      // inputs must be >= 0; violation is a domain error
    ClampShift,  // max(0, 1+x) terms; all-clamped rows fall back to uniform
};

// E-product: squared dot over stabilized squared distance.
double yat_product(std::span<const double> e1, std::span<const double> e2,
                   double epsilon = kDefaultEpsilon);

// Ebar-product: squared distance over stabilized squared dot.
double posi_yat_product(std::span<const double> e1, std::span<const double> e2,
                        double epsilon = kDefaultEpsilon);

// Layer scale Theta = base^alpha. `n` is the input dimension in MainText mode
// and the output feature count in AppendixCode mode.
double scale_theta(std::size_t n, double alpha, ScaleMode mode = ScaleMode::MainText);

// ln of the scale base, the alpha-derivative factor of Theta.
double scale_log_base(std::size_t n, ScaleMode mode = ScaleMode::MainText);

std::vector<double> softermax(std::span<const double> x,
                              SoftermaxPolicy policy = SoftermaxPolicy::Strict);

std::vector<double> softmax(std::span<const double> x);

// Symmetric m x m matrix of yat products between the rows of w.
Matrix pairwise_yat_matrix(const Matrix& w, double epsilon = kDefaultEpsilon);

struct FlopCounts {
    std::size_t d = 0;
    std::uint64_t traditional = 0;  // dot + bias + activation: 2d + 1
    std::uint64_t yat = 0;          // squared dot + squared distance: 5d - 1
    double ratio = 0.0;
};

FlopCounts flop_model(std::size_t d);

}  // namespace yatnn
