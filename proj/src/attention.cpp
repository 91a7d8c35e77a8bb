#include "yatnn/attention.hpp"

#include <cmath>

#include "yatnn/errors.hpp"

namespace yatnn {

double AttentionParams::theta_attn() const {
    return scale_theta(head_dim(), attn_alpha, ScaleMode::MainText);
}

double AttentionParams::attn_log_base() const {
    return scale_log_base(head_dim(), ScaleMode::MainText);
}

Matrix softermax_rows(const Matrix& logits, SoftermaxPolicy policy) {
    Matrix out(logits.rows, logits.cols);
    for (std::size_t i = 0; i < logits.rows; ++i) {
        auto row = softermax(logits.row(i), policy);
        for (std::size_t j = 0; j < logits.cols; ++j) out(i, j) = row[j];
    }
    return out;
}

void softermax_row_backward(std::span<const double> logit_row, std::span<const double> y,
                            std::span<const double> upstream, SoftermaxPolicy policy,
                            std::span<double> d_logits) {
    double sum = 0.0;
    bool any_alive = false;
    for (std::size_t j = 0; j < logit_row.size(); ++j) {
        const double term = policy == SoftermaxPolicy::Strict
                                ? 1.0 + logit_row[j]
                                : std::max(0.0, 1.0 + logit_row[j]);
        sum += term;
        any_alive = any_alive || term > 0.0;
    }
    if (!any_alive) {  // uniform fallback region; flat almost everywhere
        for (std::size_t j = 0; j < logit_row.size(); ++j) d_logits[j] = 0.0;
        return;
    }
    double up_dot_y = 0.0;
    for (std::size_t j = 0; j < y.size(); ++j) up_dot_y += upstream[j] * y[j];
    for (std::size_t j = 0; j < logit_row.size(); ++j) {
        const bool alive =
            policy == SoftermaxPolicy::Strict || logit_row[j] > -1.0;
        d_logits[j] = alive ? (upstream[j] - up_dot_y) / sum : 0.0;
    }
}

namespace {

void require_attention_shapes(const Matrix& x, const AttentionParams& p) {
    const std::size_t w = p.width();
    if (p.heads == 0 || w % p.heads != 0) {
        throw ShapeError("e_mha: model width must be divisible by head count");
    }
    if (x.cols != p.proj_q.kernel.cols || x.cols != w) {
        throw ShapeError("e_mha: input width does not match projection width");
    }
    if (p.proj_k.kernel.rows != w || p.proj_v.kernel.rows != w ||
        p.proj_out.kernel.rows != w || p.proj_out.kernel.cols != w) {
        throw ShapeError("e_mha: projection shapes disagree with model width");
    }
}

Matrix head_slice(const Matrix& m, std::size_t head, std::size_t head_dim) {
    Matrix s(m.rows, head_dim);
    for (std::size_t i = 0; i < m.rows; ++i) {
        for (std::size_t j = 0; j < head_dim; ++j) {
            s(i, j) = m(i, head * head_dim + j);
        }
    }
    return s;
}

void head_accumulate(Matrix& dest, const Matrix& part, std::size_t head,
                     std::size_t head_dim) {
    for (std::size_t i = 0; i < part.rows; ++i) {
        for (std::size_t j = 0; j < head_dim; ++j) {
            dest(i, head * head_dim + j) += part(i, j);
        }
    }
}

}  // namespace

Matrix e_mha_forward(const Matrix& x, const AttentionParams& p, EMhaCache* cache) {
    require_attention_shapes(x, p);
    const std::size_t t = x.rows;
    const std::size_t hd = p.head_dim();
    const double theta = p.theta_attn();

    EMhaCache local;
    EMhaCache& c = cache ? *cache : local;
    c.q = yat_dense_forward(x, p.proj_q);
    c.k = yat_dense_forward(x, p.proj_k);
    c.v = yat_dense_forward(x, p.proj_v);
    c.logits.clear();
    c.weights.clear();
    c.concat = Matrix(t, p.width());

    for (std::size_t h = 0; h < p.heads; ++h) {
        Matrix qh = head_slice(c.q, h, hd);
        Matrix kh = head_slice(c.k, h, hd);
        Matrix vh = head_slice(c.v, h, hd);
        Matrix logits = mat_mul_bt(qh, kh);
        for (double& v : logits.data) v *= theta;
        Matrix weights = softermax_rows(logits, p.policy);
        Matrix oh = mat_mul(weights, vh);
        head_accumulate(c.concat, oh, h, hd);
        c.logits.push_back(std::move(logits));
        c.weights.push_back(std::move(weights));
    }
    return yat_dense_forward(c.concat, p.proj_out);
}

EMhaGrads e_mha_backward(const Matrix& x, const AttentionParams& p,
                         const EMhaCache& cache, const Matrix& upstream) {
    require_attention_shapes(x, p);
    const std::size_t t = x.rows;
    const std::size_t hd = p.head_dim();
    const double theta = p.theta_attn();

    EMhaGrads g;
    g.out = yat_dense_backward(cache.concat, p.proj_out, upstream);
    const Matrix& d_concat = g.out.d_input;

    Matrix dq(t, p.width()), dk(t, p.width()), dv(t, p.width());
    double d_theta = 0.0;

    for (std::size_t h = 0; h < p.heads; ++h) {
        Matrix qh = head_slice(cache.q, h, hd);
        Matrix kh = head_slice(cache.k, h, hd);
        Matrix vh = head_slice(cache.v, h, hd);
        Matrix d_oh = head_slice(d_concat, h, hd);

        Matrix d_weights = mat_mul_bt(d_oh, vh);             // t x t
        Matrix d_vh = mat_mul_at(cache.weights[h], d_oh);    // t x hd

        Matrix d_logits(t, t);
        for (std::size_t i = 0; i < t; ++i) {
            softermax_row_backward(cache.logits[h].row(i), cache.weights[h].row(i),
                                   d_weights.row(i), p.policy, d_logits.row(i));
        }
        // logits = theta * qh kh^T; accumulate the theta path before scaling.
        for (std::size_t i = 0; i < t; ++i) {
            for (std::size_t j = 0; j < t; ++j) {
                d_theta += d_logits(i, j) * cache.logits[h](i, j) / theta;
            }
        }
        Matrix d_qh = mat_mul(d_logits, kh);
        Matrix d_kh = mat_mul_at(d_logits, qh);
        for (double& v : d_qh.data) v *= theta;
        for (double& v : d_kh.data) v *= theta;

        head_accumulate(dq, d_qh, h, hd);
        head_accumulate(dk, d_kh, h, hd);
        head_accumulate(dv, d_vh, h, hd);
    }

    g.q = yat_dense_backward(x, p.proj_q, dq);
    g.k = yat_dense_backward(x, p.proj_k, dk);
    g.v = yat_dense_backward(x, p.proj_v, dv);
    g.d_attn_alpha = d_theta * theta * p.attn_log_base();
    g.d_input = g.q.d_input;
    g.d_input = add(g.d_input, g.k.d_input);
    g.d_input = add(g.d_input, g.v.d_input);
    return g;
}

}  // namespace yatnn
