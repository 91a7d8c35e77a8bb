#pragma once

#include <span>

#include "yatnn/matrix.hpp"

namespace yatnn {

// Mean negative log-likelihood. Probabilities are clamped below at 1e-12
// before the log so one-hot-correct rows cost ~0 instead of -ln(0).
double cross_entropy(const Matrix& probs, std::span<const int> labels);

// d(cross_entropy)/d(probs); zero where the clamp was active.
Matrix cross_entropy_backward(const Matrix& probs, std::span<const int> labels);

// Mean yat similarity over unordered row pairs of a kernel; the
// intra-orthogonality penalty. Returns 0 for fewer than two rows.
double e_regularizer_penalty(const Matrix& kernel, double epsilon);

Matrix e_regularizer_grad(const Matrix& kernel, double epsilon);

}  // namespace yatnn
