#include "yatnn/layers.hpp"

#include <cmath>
#include <numbers>

#include "yatnn/errors.hpp"

namespace yatnn {

double YatDenseParams::theta() const {
    const std::size_t n =
        scale_mode == ScaleMode::MainText ? in_features() : out_features();
    return scale_theta(n, alpha, scale_mode);
}

double YatDenseParams::log_base() const {
    const std::size_t n =
        scale_mode == ScaleMode::MainText ? in_features() : out_features();
    return scale_log_base(n, scale_mode);
}

Matrix yat_dense_forward(const Matrix& x, const YatDenseParams& p) {
    if (x.cols != p.kernel.cols) {
        throw ShapeError("yat_dense_forward: input width " + std::to_string(x.cols) +
                         " does not match kernel width " + std::to_string(p.kernel.cols));
    }
    const std::size_t k = x.rows;
    const std::size_t m = p.kernel.rows;
    const double theta = p.theta();

    // Distances via |x|^2 + |w|^2 - 2 (w.x); only the dot matrix is k x m.
    Matrix s = mat_mul_bt(x, p.kernel);
    std::vector<double> x_sq(k), w_sq(m);
    for (std::size_t i = 0; i < k; ++i) x_sq[i] = squared_norm(x.row(i));
    for (std::size_t j = 0; j < m; ++j) w_sq[j] = squared_norm(p.kernel.row(j));

    Matrix y(k, m);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            const double sij = s(i, j);
            const double dist2 = x_sq[i] + w_sq[j] - 2.0 * sij;
            const double denom = p.epsilon + std::max(dist2, 0.0);
            double out = theta * (sij * sij) / denom;
            if (p.has_bias) out += p.bias[j];
            y(i, j) = out;
        }
    }
    return y;
}

YatDenseGrads yat_dense_backward(const Matrix& x, const YatDenseParams& p,
                                 const Matrix& upstream) {
    if (x.cols != p.kernel.cols) {
        throw ShapeError("yat_dense_backward: input/kernel width mismatch");
    }
    if (upstream.rows != x.rows || upstream.cols != p.kernel.rows) {
        throw ShapeError("yat_dense_backward: upstream shape mismatch");
    }
    const std::size_t k = x.rows;
    const std::size_t m = p.kernel.rows;
    const double theta = p.theta();
    const double log_base = p.log_base();

    Matrix s = mat_mul_bt(x, p.kernel);
    std::vector<double> x_sq(k), w_sq(m);
    for (std::size_t i = 0; i < k; ++i) x_sq[i] = squared_norm(x.row(i));
    for (std::size_t j = 0; j < m; ++j) w_sq[j] = squared_norm(p.kernel.row(j));

    // f = s^2 / D with D = eps + |x|^2 + |w|^2 - 2s. Writing f's partials in
    // terms of s and the two squared norms keeps everything as rank-1 updates:
    //   df/ds       = 2s/D + 2s^2/D^2       (the -2 in dD/ds folded in)
    //   df/d|x|^2   = df/d|w|^2 = -s^2/D^2
    Matrix g_s(k, m);    // upstream * theta * df/ds
    Matrix g_q(k, m);    // upstream * theta * df/dq, q either squared norm
    double d_alpha = 0.0;

    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            const double sij = s(i, j);
            const double d = p.epsilon + std::max(x_sq[i] + w_sq[j] - 2.0 * sij, 0.0);
            const double f = sij * sij / d;
            const double u = upstream(i, j);
            g_s(i, j) = u * theta * (2.0 * sij / d + 2.0 * sij * sij / (d * d));
            g_q(i, j) = u * theta * (-(sij * sij) / (d * d));
            d_alpha += u * log_base * theta * f;
        }
    }

    YatDenseGrads grads;
    grads.d_kernel = mat_mul_at(g_s, x);  // m x n
    grads.d_input = mat_mul(g_s, p.kernel);
    // Rank-1 parts from the squared norms.
    for (std::size_t j = 0; j < m; ++j) {
        double col_sum = 0.0;
        for (std::size_t i = 0; i < k; ++i) col_sum += g_q(i, j);
        const double* wrow = p.kernel.data.data() + j * p.kernel.cols;
        double* grow = grads.d_kernel.data.data() + j * p.kernel.cols;
        for (std::size_t c = 0; c < p.kernel.cols; ++c) grow[c] += 2.0 * col_sum * wrow[c];
    }
    for (std::size_t i = 0; i < k; ++i) {
        double row_sum = 0.0;
        for (std::size_t j = 0; j < m; ++j) row_sum += g_q(i, j);
        const double* xrow = x.data.data() + i * x.cols;
        double* grow = grads.d_input.data.data() + i * x.cols;
        for (std::size_t c = 0; c < x.cols; ++c) grow[c] += 2.0 * row_sum * xrow[c];
    }
    grads.d_alpha = d_alpha;
    if (p.has_bias) {
        grads.d_bias.assign(m, 0.0);
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t j = 0; j < m; ++j) grads.d_bias[j] += upstream(i, j);
        }
    }
    return grads;
}

double gelu(double x) {
    return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2));
}

double gelu_grad(double x) {
    const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    return cdf + x * pdf;
}

namespace {

double activate(double z, Activation a) {
    switch (a) {
        case Activation::None: return z;
        case Activation::ReLU: return z > 0.0 ? z : 0.0;
        case Activation::GeLU: return gelu(z);
    }
    return z;
}

double activate_grad(double z, Activation a) {
    switch (a) {
        case Activation::None: return 1.0;
        case Activation::ReLU: return z > 0.0 ? 1.0 : 0.0;
        case Activation::GeLU: return gelu_grad(z);
    }
    return 1.0;
}

}  // namespace

Matrix dense_forward(const Matrix& x, const DenseParams& p) {
    if (x.cols != p.weight.cols) {
        throw ShapeError("dense_forward: input width " + std::to_string(x.cols) +
                         " does not match weight width " + std::to_string(p.weight.cols));
    }
    Matrix z = mat_mul_bt(x, p.weight);
    for (std::size_t i = 0; i < z.rows; ++i) {
        for (std::size_t j = 0; j < z.cols; ++j) {
            double v = z(i, j);
            if (!p.bias.empty()) v += p.bias[j];
            z(i, j) = activate(v, p.activation);
        }
    }
    return z;
}

DenseGrads dense_backward(const Matrix& x, const DenseParams& p, const Matrix& upstream) {
    if (x.cols != p.weight.cols) throw ShapeError("dense_backward: shape mismatch");
    if (upstream.rows != x.rows || upstream.cols != p.weight.rows) {
        throw ShapeError("dense_backward: upstream shape mismatch");
    }
    Matrix z = mat_mul_bt(x, p.weight);
    Matrix dz(upstream.rows, upstream.cols);
    for (std::size_t i = 0; i < z.rows; ++i) {
        for (std::size_t j = 0; j < z.cols; ++j) {
            double pre = z(i, j);
            if (!p.bias.empty()) pre += p.bias[j];
            dz(i, j) = upstream(i, j) * activate_grad(pre, p.activation);
        }
    }
    DenseGrads g;
    g.d_weight = mat_mul_at(dz, x);
    g.d_input = mat_mul(dz, p.weight);
    if (!p.bias.empty()) {
        g.d_bias.assign(p.bias.size(), 0.0);
        for (std::size_t i = 0; i < dz.rows; ++i) {
            for (std::size_t j = 0; j < dz.cols; ++j) g.d_bias[j] += dz(i, j);
        }
    }
    return g;
}

DropoutResult dropout(const Matrix& a, double rate, RngState& rng, bool training) {
    if (!(rate >= 0.0 && rate < 1.0)) {
        throw DomainError("dropout: rate must lie in [0, 1)");
    }
    DropoutResult r;
    r.output = a;
    r.kept.assign(a.size(), 1);
    if (!training || rate == 0.0) return r;
    const double keep_scale = 1.0 / (1.0 - rate);
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (next_uniform01(rng) < rate) {
            r.output.data[i] = 0.0;
            r.kept[i] = 0;
        } else {
            r.output.data[i] *= keep_scale;
        }
    }
    return r;
}

Matrix dropout_backward(const DropoutResult& fwd, double rate, const Matrix& upstream) {
    Matrix g = upstream;
    const double keep_scale = 1.0 / (1.0 - rate);
    for (std::size_t i = 0; i < g.size(); ++i) {
        g.data[i] = fwd.kept[i] ? g.data[i] * keep_scale : 0.0;
    }
    return g;
}

Matrix extract_patches(const Matrix& image, std::size_t patch, std::size_t channels) {
    if (patch == 0) throw DomainError("extract_patches: patch must be >= 1");
    if (image.cols % channels != 0) {
        throw ShapeError("extract_patches: column count not divisible by channels");
    }
    const std::size_t h = image.rows;
    const std::size_t w = image.cols / channels;
    if (h % patch != 0 || w % patch != 0) {
        throw ShapeError("extract_patches: image " + std::to_string(h) + "x" +
                         std::to_string(w) + " not divisible by patch " +
                         std::to_string(patch));
    }
    const std::size_t ph = h / patch;
    const std::size_t pw = w / patch;
    Matrix tokens(ph * pw, patch * patch * channels);
    for (std::size_t pr = 0; pr < ph; ++pr) {
        for (std::size_t pc = 0; pc < pw; ++pc) {
            const std::size_t tok = pr * pw + pc;
            std::size_t out = 0;
            for (std::size_t r = 0; r < patch; ++r) {
                for (std::size_t c = 0; c < patch; ++c) {
                    for (std::size_t ch = 0; ch < channels; ++ch) {
                        tokens(tok, out++) =
                            image(pr * patch + r, (pc * patch + c) * channels + ch);
                    }
                }
            }
        }
    }
    return tokens;
}

Matrix scatter_patches(const Matrix& d_tokens, std::size_t image_h, std::size_t image_w,
                       std::size_t patch, std::size_t channels) {
    Matrix img(image_h, image_w * channels);
    const std::size_t ph = image_h / patch;
    const std::size_t pw = image_w / patch;
    for (std::size_t pr = 0; pr < ph; ++pr) {
        for (std::size_t pc = 0; pc < pw; ++pc) {
            const std::size_t tok = pr * pw + pc;
            std::size_t in = 0;
            for (std::size_t r = 0; r < patch; ++r) {
                for (std::size_t c = 0; c < patch; ++c) {
                    for (std::size_t ch = 0; ch < channels; ++ch) {
                        img(pr * patch + r, (pc * patch + c) * channels + ch) =
                            d_tokens(tok, in++);
                    }
                }
            }
        }
    }
    return img;
}

Matrix patch_embed(const Matrix& image, std::size_t patch, const YatDenseParams& proj,
                   std::size_t channels) {
    return yat_dense_forward(extract_patches(image, patch, channels), proj);
}

Matrix patch_embed(const Matrix& image, std::size_t patch, const DenseParams& proj,
                   std::size_t channels) {
    return dense_forward(extract_patches(image, patch, channels), proj);
}

std::vector<double> global_avg_pool(const Matrix& tokens) {
    if (tokens.rows == 0) throw ShapeError("global_avg_pool: empty token set");
    std::vector<double> mean(tokens.cols, 0.0);
    for (std::size_t i = 0; i < tokens.rows; ++i) {
        for (std::size_t j = 0; j < tokens.cols; ++j) mean[j] += tokens(i, j);
    }
    for (double& v : mean) v /= static_cast<double>(tokens.rows);
    return mean;
}

Matrix global_avg_pool_backward(std::span<const double> upstream, std::size_t tokens) {
    Matrix g(tokens, upstream.size());
    const double inv = 1.0 / static_cast<double>(tokens);
    for (std::size_t i = 0; i < tokens; ++i) {
        for (std::size_t j = 0; j < upstream.size(); ++j) g(i, j) = upstream[j] * inv;
    }
    return g;
}

TokenMaskResult token_mask(const Matrix& x, const MaskingConfig& cfg, RngState& rng,
                           bool training) {
    if (cfg.mask_token.size() != x.cols) {
        throw ShapeError("token_mask: mask token width does not match input width");
    }
    if (!(cfg.p >= 0.0 && cfg.p <= 1.0)) {
        throw DomainError("token_mask: p must lie in [0, 1]");
    }
    TokenMaskResult r;
    r.output = x;
    r.masked.assign(x.rows, 0);
    if (!training || cfg.p == 0.0) return r;
    for (std::size_t t = 0; t < x.rows; ++t) {
        if (next_uniform01(rng) < cfg.p) {
            r.masked[t] = 1;
            for (std::size_t j = 0; j < x.cols; ++j) r.output(t, j) = cfg.mask_token[j];
        }
    }
    return r;
}

TokenMaskGrads token_mask_backward(const TokenMaskResult& fwd, const Matrix& upstream) {
    TokenMaskGrads g;
    g.d_input = Matrix(upstream.rows, upstream.cols);
    g.d_mask_token.assign(upstream.cols, 0.0);
    for (std::size_t t = 0; t < upstream.rows; ++t) {
        if (fwd.masked[t]) {
            for (std::size_t j = 0; j < upstream.cols; ++j) {
                g.d_mask_token[j] += upstream(t, j);
            }
        } else {
            for (std::size_t j = 0; j < upstream.cols; ++j) {
                g.d_input(t, j) = upstream(t, j);
            }
        }
    }
    return g;
}

}  // namespace yatnn
