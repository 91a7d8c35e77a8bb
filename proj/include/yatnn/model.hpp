#pragma once

#include <memory>
#include <string>
#include <vector>

#include "yatnn/attention.hpp"
#include "yatnn/layers.hpp"
#include "yatnn/matrix.hpp"
#include "yatnn/rng.hpp"

namespace yatnn {

enum class Arch { EMlp, Mlp, Linear, EVit };
enum class HeadKind { Softmax, Softermax };

const char* arch_name(Arch a);
Arch arch_from_name(const std::string& name);
const char* head_name(HeadKind h);
HeadKind head_from_name(const std::string& name);

struct ModelConfig {
    Arch arch = Arch::EMlp;
    // MLP family.
    std::size_t input_dim = 0;
    std::vector<std::size_t> hidden = {128, 64};
    std::size_t classes = 10;
    double epsilon = kDefaultEpsilon;
    ScaleMode scale_mode = ScaleMode::MainText;
    // ViT family.
    std::size_t image_h = 0, image_w = 0, channels = 1;
    std::size_t patch = 4;
    std::size_t width = 128, heads = 2, mlp_width = 512, blocks = 1;
    double mask_ratio = 0.1;
    SoftermaxPolicy attn_policy = SoftermaxPolicy::ClampShift;
};

std::string model_config_to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const std::string& text);

// Flat view over one parameter tensor and its gradient buffer. Pointers stay
// valid for the model's lifetime.
struct ParamTensor {
    std::string name;
    double* value = nullptr;
    double* grad = nullptr;
    std::size_t size = 0;
    std::size_t rows = 0, cols = 0;  // matrix shape; 0x0 for scalars/vectors
    bool is_yat_kernel = false;
};

class Model {
  public:
    virtual ~Model() = default;

    // Mean cross-entropy of the batch; caches activations for backward().
    virtual double forward_loss(const Matrix& x, std::span<const int> labels,
                                bool training, RngState& rng) = 0;
    // Fills gradient buffers (overwrites) from the last forward_loss call.
    virtual void backward() = 0;
    virtual Matrix predict_probs(const Matrix& x) = 0;
    virtual std::vector<ParamTensor> params() = 0;
    virtual const ModelConfig& config() const = 0;
    virtual HeadKind head() const = 0;
    virtual bool bias_in_head() const = 0;
    virtual double dropout_rate() const = 0;

    void zero_grads();
    std::vector<ParamTensor> yat_kernels();
};

std::unique_ptr<Model> make_model(const ModelConfig& config, HeadKind head,
                                  bool bias_in_head, double dropout_rate,
                                  RngState& rng);

// Head normalization shared by every model: probabilities from logits.
std::vector<double> head_probs(std::span<const double> logits, HeadKind head);
// d(loss)/d(logits) given upstream d(loss)/d(probs).
void head_backward(std::span<const double> logits, std::span<const double> probs,
                   std::span<const double> d_probs, HeadKind head,
                   std::span<double> d_logits);

}  // namespace yatnn
