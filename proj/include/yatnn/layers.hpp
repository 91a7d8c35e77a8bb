#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "yatnn/matrix.hpp"
#include "yatnn/rng.hpp"
#include "yatnn/yat.hpp"

namespace yatnn {

// One layer of E-neurons: row i of `kernel` is neuron i's position in input
// space. Output (k,i) = Theta * (w_i . x_k)^2 / (eps + |x_k - w_i|^2) [+ b_i].
struct YatDenseParams {
    Matrix kernel;  // m x n
    double alpha = 1.0;
    bool has_bias = false;
    std::vector<double> bias;  // length m when has_bias
    double epsilon = kDefaultEpsilon;
    ScaleMode scale_mode = ScaleMode::MainText;

    std::size_t out_features() const { return kernel.rows; }
    std::size_t in_features() const { return kernel.cols; }
    // Theta for this layer under its scale mode.
    double theta() const;
    double log_base() const;
};

Matrix yat_dense_forward(const Matrix& x, const YatDenseParams& p);

struct YatDenseGrads {
    Matrix d_kernel;
    double d_alpha = 0.0;
    std::vector<double> d_bias;  // empty when bias disabled
    Matrix d_input;
};

YatDenseGrads yat_dense_backward(const Matrix& x, const YatDenseParams& p,
                                 const Matrix& upstream);

enum class Activation { None, ReLU, GeLU };

struct DenseParams {
    Matrix weight;  // m x n
    std::vector<double> bias;
    Activation activation = Activation::None;
};

Matrix dense_forward(const Matrix& x, const DenseParams& p);

struct DenseGrads {
    Matrix d_weight;
    std::vector<double> d_bias;
    Matrix d_input;
};

DenseGrads dense_backward(const Matrix& x, const DenseParams& p, const Matrix& upstream);

double gelu(double x);
double gelu_grad(double x);

struct DropoutResult {
    Matrix output;
    std::vector<std::uint8_t> kept;  // per entry, 1 when the unit survived
};

// Inverted dropout: survivors are scaled by 1/(1-rate) so inference is the
// identity map.
DropoutResult dropout(const Matrix& a, double rate, RngState& rng, bool training);

Matrix dropout_backward(const DropoutResult& fwd, double rate, const Matrix& upstream);

// Non-overlapping patch flattening: image is h x (w*channels) row-major with
// channels adjacent per pixel; each output row is one patch, scanned
// row-major within the patch, channels innermost.
Matrix extract_patches(const Matrix& image, std::size_t patch, std::size_t channels = 1);

// Adjoint of extract_patches: scatters token grads back onto the image.
Matrix scatter_patches(const Matrix& d_tokens, std::size_t image_h, std::size_t image_w,
                       std::size_t patch, std::size_t channels = 1);

Matrix patch_embed(const Matrix& image, std::size_t patch, const YatDenseParams& proj,
                   std::size_t channels = 1);
Matrix patch_embed(const Matrix& image, std::size_t patch, const DenseParams& proj,
                   std::size_t channels = 1);

std::vector<double> global_avg_pool(const Matrix& tokens);
Matrix global_avg_pool_backward(std::span<const double> upstream, std::size_t tokens);

struct MaskingConfig {
    double p = 0.0;
    std::vector<double> mask_token;  // learnable, length = model width
};

struct TokenMaskResult {
    Matrix output;
    std::vector<std::uint8_t> masked;  // per token
};

// Each token row is independently replaced by the mask token with
// probability p during training; inference is the identity.
TokenMaskResult token_mask(const Matrix& x, const MaskingConfig& cfg, RngState& rng,
                           bool training);

struct TokenMaskGrads {
    Matrix d_input;
    std::vector<double> d_mask_token;
};

TokenMaskGrads token_mask_backward(const TokenMaskResult& fwd, const Matrix& upstream);

}  // namespace yatnn
