#pragma once

#include <vector>

#include "yatnn/layers.hpp"
#include "yatnn/matrix.hpp"
#include "yatnn/yat.hpp"

namespace yatnn {

// Multi-head attention built from E-neuron projections. Logits are
// Theta_attn * Q K^T per head with Theta_attn = (n/ln(1+n))^attn_alpha and
// n the per-head key dimension; rows are normalized by softermax.
struct AttentionParams {
    YatDenseParams proj_q, proj_k, proj_v, proj_out;
    std::size_t heads = 1;
    double attn_alpha = 1.0;
    SoftermaxPolicy policy = SoftermaxPolicy::ClampShift;

    std::size_t width() const { return proj_q.kernel.rows; }
    std::size_t head_dim() const { return width() / heads; }
    double theta_attn() const;
    double attn_log_base() const;
};

struct EMhaCache {
    Matrix q, k, v;                     // t x width
    std::vector<Matrix> logits;        // per head, t x t (already scaled)
    std::vector<Matrix> weights;       // per head, t x t
    Matrix concat;                      // t x width, heads merged
};

Matrix e_mha_forward(const Matrix& x, const AttentionParams& p, EMhaCache* cache);

inline Matrix e_mha(const Matrix& x, const AttentionParams& p) {
    return e_mha_forward(x, p, nullptr);
}

struct EMhaGrads {
    YatDenseGrads q, k, v, out;
    double d_attn_alpha = 0.0;
    Matrix d_input;
};

EMhaGrads e_mha_backward(const Matrix& x, const AttentionParams& p,
                         const EMhaCache& cache, const Matrix& upstream);

// Row-wise softermax over a matrix of logits.
Matrix softermax_rows(const Matrix& logits, SoftermaxPolicy policy);

// Backward through one softermax row; `y` is the forward output row.
void softermax_row_backward(std::span<const double> logit_row, std::span<const double> y,
                            std::span<const double> upstream, SoftermaxPolicy policy,
                            std::span<double> d_logits);

}  // namespace yatnn
