#include "yatnn/model.hpp"

#include <algorithm>
#include <cstring>

#include "json.hpp"
#include "yatnn/errors.hpp"
#include "yatnn/losses.hpp"
#include "yatnn/pca.hpp"

namespace yatnn {

const char* arch_name(Arch a) {
    switch (a) {
        case Arch::EMlp: return "e-mlp";
        case Arch::Mlp: return "mlp";
        case Arch::Linear: return "linear";
        case Arch::EVit: return "e-vit";
    }
    return "?";
}

Arch arch_from_name(const std::string& name) {
    if (name == "e-mlp") return Arch::EMlp;
    if (name == "mlp") return Arch::Mlp;
    if (name == "linear") return Arch::Linear;
    if (name == "e-vit") return Arch::EVit;
    throw ConfigError("unknown architecture '" + name + "'");
}

const char* head_name(HeadKind h) {
    return h == HeadKind::Softmax ? "softmax" : "softermax";
}

HeadKind head_from_name(const std::string& name) {
    if (name == "softmax") return HeadKind::Softmax;
    if (name == "softermax") return HeadKind::Softermax;
    throw ConfigError("unknown head '" + name + "'");
}

std::string model_config_to_json(const ModelConfig& c) {
    nlohmann::json j;
    j["arch"] = arch_name(c.arch);
    j["input_dim"] = c.input_dim;
    j["hidden"] = c.hidden;
    j["classes"] = c.classes;
    j["epsilon"] = c.epsilon;
    j["scale_mode"] = c.scale_mode == ScaleMode::MainText ? "main_text" : "appendix_code";
    j["image_h"] = c.image_h;
    j["image_w"] = c.image_w;
    j["channels"] = c.channels;
    j["patch"] = c.patch;
    j["width"] = c.width;
    j["heads"] = c.heads;
    j["mlp_width"] = c.mlp_width;
    j["blocks"] = c.blocks;
    j["mask_ratio"] = c.mask_ratio;
    j["attn_policy"] =
        c.attn_policy == SoftermaxPolicy::Strict ? "strict" : "clamp_shift";
    return j.dump();
}

ModelConfig model_config_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    ModelConfig c;
    c.arch = arch_from_name(j.at("arch").get<std::string>());
    c.input_dim = j.at("input_dim").get<std::size_t>();
    c.hidden = j.at("hidden").get<std::vector<std::size_t>>();
    c.classes = j.at("classes").get<std::size_t>();
    c.epsilon = j.at("epsilon").get<double>();
    c.scale_mode = j.at("scale_mode").get<std::string>() == "main_text"
                       ? ScaleMode::MainText
                       : ScaleMode::AppendixCode;
    c.image_h = j.at("image_h").get<std::size_t>();
    c.image_w = j.at("image_w").get<std::size_t>();
    c.channels = j.at("channels").get<std::size_t>();
    c.patch = j.at("patch").get<std::size_t>();
    c.width = j.at("width").get<std::size_t>();
    c.heads = j.at("heads").get<std::size_t>();
    c.mlp_width = j.at("mlp_width").get<std::size_t>();
    c.blocks = j.at("blocks").get<std::size_t>();
    c.mask_ratio = j.at("mask_ratio").get<double>();
    c.attn_policy = j.at("attn_policy").get<std::string>() == "strict"
                        ? SoftermaxPolicy::Strict
                        : SoftermaxPolicy::ClampShift;
    return c;
}

void Model::zero_grads() {
    for (auto& t : params()) {
        std::fill(t.grad, t.grad + t.size, 0.0);
    }
}

std::vector<ParamTensor> Model::yat_kernels() {
    std::vector<ParamTensor> out;
    for (auto& t : params()) {
        if (t.is_yat_kernel) out.push_back(t);
    }
    return out;
}

std::vector<double> head_probs(std::span<const double> logits, HeadKind head) {
    return head == HeadKind::Softmax ? softmax(logits)
                                     : softermax(logits, SoftermaxPolicy::Strict);
}

void head_backward(std::span<const double> logits, std::span<const double> probs,
                   std::span<const double> d_probs, HeadKind head,
                   std::span<double> d_logits) {
    if (head == HeadKind::Softmax) {
        double dp_dot_p = 0.0;
        for (std::size_t j = 0; j < probs.size(); ++j) dp_dot_p += d_probs[j] * probs[j];
        for (std::size_t j = 0; j < probs.size(); ++j) {
            d_logits[j] = probs[j] * (d_probs[j] - dp_dot_p);
        }
    } else {
        softermax_row_backward(logits, probs, d_probs, SoftermaxPolicy::Strict, d_logits);
    }
}

namespace {

void validate_head(HeadKind head, bool bias_in_head) {
    if (head == HeadKind::Softermax && bias_in_head) {
        throw ConfigError(
            "softermax head requires a bias-free output layer (non-negative logits)");
    }
}

// ------------------------------------------------------------------
// MLP family
// ------------------------------------------------------------------

struct MlpLayer {
    bool is_yat = false;
    YatDenseParams yat;
    DenseParams dense;
    // gradient buffers
    Matrix g_kernel;
    std::vector<double> g_bias;
    double g_alpha = 0.0;
    // forward caches
    Matrix input;
    DropoutResult drop;
    bool drop_applied = false;

    std::size_t out_features() const {
        return is_yat ? yat.kernel.rows : dense.weight.rows;
    }
};

class MlpModel final : public Model {
  public:
    MlpModel(const ModelConfig& cfg, HeadKind head, bool bias_in_head,
             double dropout_rate, RngState& rng)
        : cfg_(cfg), head_(head), bias_in_head_(bias_in_head), dropout_(dropout_rate) {
        validate_head(head, bias_in_head);
        if (cfg.input_dim == 0) throw ConfigError("mlp model: input_dim must be set");
        if (cfg.classes < 2) throw ConfigError("mlp model: need at least 2 classes");

        std::vector<std::size_t> dims;
        dims.push_back(cfg.input_dim);
        dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
        dims.push_back(cfg.classes);

        layers_.resize(dims.size() - 1);
        for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
            MlpLayer& l = layers_[i];
            const bool is_output = (i + 2 == dims.size());
            const bool with_bias = is_output ? bias_in_head : cfg.arch != Arch::EMlp;
            if (cfg.arch == Arch::EMlp) {
                l.is_yat = true;
                l.yat.kernel = orthogonal_init(dims[i + 1], dims[i], rng);
                l.yat.alpha = 1.0;
                l.yat.has_bias = with_bias;
                if (with_bias) l.yat.bias.assign(dims[i + 1], 0.0);
                l.yat.epsilon = cfg.epsilon;
                l.yat.scale_mode = cfg.scale_mode;
            } else {
                l.dense.weight = orthogonal_init(dims[i + 1], dims[i], rng);
                if (with_bias) l.dense.bias.assign(dims[i + 1], 0.0);
                if (cfg.arch == Arch::Mlp && !is_output) {
                    l.dense.activation = Activation::ReLU;
                } else {
                    l.dense.activation = Activation::None;
                }
            }
            l.g_kernel = Matrix(dims[i + 1], dims[i]);
            l.g_bias.assign(with_bias ? dims[i + 1] : 0, 0.0);
        }
    }

    double forward_loss(const Matrix& x, std::span<const int> labels, bool training,
                        RngState& rng) override {
        run_forward(x, training, &rng);
        labels_.assign(labels.begin(), labels.end());
        return cross_entropy(probs_, labels_);
    }

    void backward() override {
        zero_grads();
        Matrix d_probs = cross_entropy_backward(probs_, labels_);
        Matrix up(d_probs.rows, d_probs.cols);
        for (std::size_t i = 0; i < d_probs.rows; ++i) {
            head_backward(logits_.row(i), probs_.row(i), d_probs.row(i), head_,
                          up.row(i));
        }
        for (std::size_t li = layers_.size(); li-- > 0;) {
            MlpLayer& l = layers_[li];
            if (l.drop_applied) {
                up = dropout_backward(l.drop, dropout_, up);
            }
            if (l.is_yat) {
                YatDenseGrads g = yat_dense_backward(l.input, l.yat, up);
                l.g_kernel = std::move(g.d_kernel);
                l.g_alpha = g.d_alpha;
                if (l.yat.has_bias) l.g_bias = std::move(g.d_bias);
                up = std::move(g.d_input);
            } else {
                DenseGrads g = dense_backward(l.input, l.dense, up);
                l.g_kernel = std::move(g.d_weight);
                if (!l.dense.bias.empty()) l.g_bias = std::move(g.d_bias);
                up = std::move(g.d_input);
            }
        }
    }

    Matrix predict_probs(const Matrix& x) override {
        RngState unused{0, 0};
        run_forward(x, /*training=*/false, &unused);
        return probs_;
    }

    std::vector<ParamTensor> params() override {
        std::vector<ParamTensor> out;
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            MlpLayer& l = layers_[i];
            const std::string base = "layer" + std::to_string(i);
            Matrix& kernel = l.is_yat ? l.yat.kernel : l.dense.weight;
            out.push_back({base + ".kernel", kernel.data.data(), l.g_kernel.data.data(),
                           kernel.size(), kernel.rows, kernel.cols, l.is_yat});
            if (l.is_yat) {
                out.push_back({base + ".alpha", &l.yat.alpha, &l.g_alpha, 1, 0, 0, false});
                if (l.yat.has_bias) {
                    out.push_back({base + ".bias", l.yat.bias.data(), l.g_bias.data(),
                                   l.yat.bias.size(), 0, 0, false});
                }
            } else if (!l.dense.bias.empty()) {
                out.push_back({base + ".bias", l.dense.bias.data(), l.g_bias.data(),
                               l.dense.bias.size(), 0, 0, false});
            }
        }
        return out;
    }

    const ModelConfig& config() const override { return cfg_; }
    HeadKind head() const override { return head_; }
    bool bias_in_head() const override { return bias_in_head_; }
    double dropout_rate() const override { return dropout_; }

  private:
    void run_forward(const Matrix& x, bool training, RngState* rng) {
        if (x.cols != cfg_.input_dim) {
            throw ShapeError("mlp forward: input width " + std::to_string(x.cols) +
                             " does not match model input_dim " +
                             std::to_string(cfg_.input_dim));
        }
        Matrix h = x;
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            MlpLayer& l = layers_[i];
            l.input = h;
            h = l.is_yat ? yat_dense_forward(h, l.yat) : dense_forward(h, l.dense);
            l.drop_applied = false;
            if (training && dropout_ > 0.0 && i + 1 < layers_.size()) {
                l.drop = dropout(h, dropout_, *rng, true);
                h = l.drop.output;
                l.drop_applied = true;
            }
        }
        logits_ = std::move(h);
        probs_ = Matrix(logits_.rows, logits_.cols);
        for (std::size_t i = 0; i < logits_.rows; ++i) {
            auto p = head_probs(logits_.row(i), head_);
            std::copy(p.begin(), p.end(), probs_.row(i).begin());
        }
    }

    ModelConfig cfg_;
    HeadKind head_;
    bool bias_in_head_;
    double dropout_;
    std::vector<MlpLayer> layers_;
    Matrix logits_, probs_;
    std::vector<int> labels_;
};

// ------------------------------------------------------------------
// E-ViT
// ------------------------------------------------------------------

struct VitBlock {
    AttentionParams attn;
    YatDenseParams ff1, ff2;
    // gradient buffers
    Matrix g_q, g_k, g_v, g_out, g_ff1, g_ff2;
    double ga_q = 0, ga_k = 0, ga_v = 0, ga_out = 0, g_attn_alpha = 0;
    double ga_ff1 = 0, ga_ff2 = 0;
};

struct VitSampleCache {
    Matrix patches;
    struct BlockCache {
        TokenMaskResult mask;
        EMhaCache mha;
        Matrix attn_in;   // mask output
        Matrix res1;      // attn residual sum
        Matrix ff1_out;
    };
    std::vector<BlockCache> blocks;
    Matrix final_tokens;
    Matrix cls_in;  // 1 x width
};

class VitModel final : public Model {
  public:
    VitModel(const ModelConfig& cfg, HeadKind head, bool bias_in_head,
             double dropout_rate, RngState& rng)
        : cfg_(cfg), head_(head), bias_in_head_(bias_in_head), dropout_(dropout_rate) {
        validate_head(head, bias_in_head);
        if (cfg.image_h == 0 || cfg.image_w == 0) {
            throw ConfigError("e-vit model: image dimensions must be set");
        }
        if (cfg.patch == 0 || cfg.image_h % cfg.patch != 0 ||
            cfg.image_w % cfg.patch != 0) {
            throw ConfigError("e-vit model: image dimensions must be divisible by patch");
        }
        if (cfg.heads == 0 || cfg.width % cfg.heads != 0) {
            throw ConfigError("e-vit model: width must be divisible by heads");
        }
        tokens_ = (cfg.image_h / cfg.patch) * (cfg.image_w / cfg.patch);
        const std::size_t patch_dim = cfg.patch * cfg.patch * cfg.channels;

        auto make_yat = [&](std::size_t out, std::size_t in) {
            YatDenseParams p;
            p.kernel = orthogonal_init(out, in, rng);
            p.alpha = 1.0;
            p.epsilon = cfg.epsilon;
            p.scale_mode = cfg.scale_mode;
            return p;
        };

        proj_ = make_yat(cfg.width, patch_dim);
        g_proj_ = Matrix(cfg.width, patch_dim);
        pos_ = Matrix(tokens_, cfg.width);
        for (double& v : pos_.data) v = 0.02 * next_normal(rng);
        g_pos_ = Matrix(tokens_, cfg.width);
        mask_cfg_.p = cfg.mask_ratio;
        mask_cfg_.mask_token.assign(cfg.width, 0.0);
        g_mask_token_.assign(cfg.width, 0.0);

        blocks_.resize(cfg.blocks);
        for (auto& b : blocks_) {
            b.attn.proj_q = make_yat(cfg.width, cfg.width);
            b.attn.proj_k = make_yat(cfg.width, cfg.width);
            b.attn.proj_v = make_yat(cfg.width, cfg.width);
            b.attn.proj_out = make_yat(cfg.width, cfg.width);
            b.attn.heads = cfg.heads;
            b.attn.attn_alpha = 1.0;
            b.attn.policy = cfg.attn_policy;
            b.ff1 = make_yat(cfg.mlp_width, cfg.width);
            b.ff2 = make_yat(cfg.width, cfg.mlp_width);
            b.g_q = Matrix(cfg.width, cfg.width);
            b.g_k = Matrix(cfg.width, cfg.width);
            b.g_v = Matrix(cfg.width, cfg.width);
            b.g_out = Matrix(cfg.width, cfg.width);
            b.g_ff1 = Matrix(cfg.mlp_width, cfg.width);
            b.g_ff2 = Matrix(cfg.width, cfg.mlp_width);
        }
        cls_ = make_yat(cfg.classes, cfg.width);
        g_cls_ = Matrix(cfg.classes, cfg.width);
    }

    double forward_loss(const Matrix& x, std::span<const int> labels, bool training,
                        RngState& rng) override {
        const std::size_t k = x.rows;
        caches_.assign(k, {});
        logits_ = Matrix(k, cfg_.classes);
        probs_ = Matrix(k, cfg_.classes);
        for (std::size_t s = 0; s < k; ++s) {
            forward_sample(x.row(s), training, rng, caches_[s], logits_.row(s));
            auto p = head_probs(logits_.row(s), head_);
            std::copy(p.begin(), p.end(), probs_.row(s).begin());
        }
        labels_.assign(labels.begin(), labels.end());
        return cross_entropy(probs_, labels_);
    }

    void backward() override {
        zero_grads();
        Matrix d_probs = cross_entropy_backward(probs_, labels_);
        for (std::size_t s = 0; s < caches_.size(); ++s) {
            std::vector<double> d_logits(cfg_.classes);
            head_backward(logits_.row(s), probs_.row(s), d_probs.row(s), head_, d_logits);
            backward_sample(caches_[s], d_logits);
        }
    }

    Matrix predict_probs(const Matrix& x) override {
        RngState unused{0, 0};
        Matrix probs(x.rows, cfg_.classes);
        VitSampleCache cache;
        std::vector<double> logits(cfg_.classes);
        for (std::size_t s = 0; s < x.rows; ++s) {
            forward_sample(x.row(s), /*training=*/false, unused, cache, logits);
            auto p = head_probs(logits, head_);
            std::copy(p.begin(), p.end(), probs.row(s).begin());
        }
        return probs;
    }

    std::vector<ParamTensor> params() override {
        std::vector<ParamTensor> out;
        auto push_yat = [&](const std::string& base, YatDenseParams& p, Matrix& gk,
                            double& ga) {
            out.push_back({base + ".kernel", p.kernel.data.data(), gk.data.data(),
                           p.kernel.size(), p.kernel.rows, p.kernel.cols, true});
            out.push_back({base + ".alpha", &p.alpha, &ga, 1, 0, 0, false});
        };
        push_yat("patch_proj", proj_, g_proj_, ga_proj_);
        out.push_back({"pos_table", pos_.data.data(), g_pos_.data.data(), pos_.size(),
                       pos_.rows, pos_.cols, false});
        out.push_back({"mask_token", mask_cfg_.mask_token.data(), g_mask_token_.data(),
                       mask_cfg_.mask_token.size(), 0, 0, false});
        for (std::size_t b = 0; b < blocks_.size(); ++b) {
            VitBlock& blk = blocks_[b];
            const std::string base = "block" + std::to_string(b);
            push_yat(base + ".attn.q", blk.attn.proj_q, blk.g_q, blk.ga_q);
            push_yat(base + ".attn.k", blk.attn.proj_k, blk.g_k, blk.ga_k);
            push_yat(base + ".attn.v", blk.attn.proj_v, blk.g_v, blk.ga_v);
            push_yat(base + ".attn.out", blk.attn.proj_out, blk.g_out, blk.ga_out);
            out.push_back({base + ".attn.attn_alpha", &blk.attn.attn_alpha,
                           &blk.g_attn_alpha, 1, 0, 0, false});
            push_yat(base + ".ff1", blk.ff1, blk.g_ff1, blk.ga_ff1);
            push_yat(base + ".ff2", blk.ff2, blk.g_ff2, blk.ga_ff2);
        }
        push_yat("classifier", cls_, g_cls_, ga_cls_);
        return out;
    }

    const ModelConfig& config() const override { return cfg_; }
    HeadKind head() const override { return head_; }
    bool bias_in_head() const override { return bias_in_head_; }
    double dropout_rate() const override { return dropout_; }

  private:
    void forward_sample(std::span<const double> features, bool training, RngState& rng,
                        VitSampleCache& cache, std::span<double> logits_out) {
        const std::size_t pixel_cols = cfg_.image_w * cfg_.channels;
        if (features.size() != cfg_.image_h * pixel_cols) {
            throw ShapeError("e-vit forward: sample width does not match image shape");
        }
        Matrix image(cfg_.image_h, pixel_cols);
        std::copy(features.begin(), features.end(), image.data.begin());

        cache.patches = extract_patches(image, cfg_.patch, cfg_.channels);
        Matrix h = yat_dense_forward(cache.patches, proj_);
        h = add(h, pos_);

        cache.blocks.resize(blocks_.size());
        for (std::size_t b = 0; b < blocks_.size(); ++b) {
            auto& bc = cache.blocks[b];
            bc.mask = token_mask(h, mask_cfg_, rng, training);
            bc.attn_in = bc.mask.output;
            Matrix attn_out = e_mha_forward(bc.attn_in, blocks_[b].attn, &bc.mha);
            bc.res1 = add(bc.attn_in, attn_out);
            bc.ff1_out = yat_dense_forward(bc.res1, blocks_[b].ff1);
            Matrix ff2_out = yat_dense_forward(bc.ff1_out, blocks_[b].ff2);
            h = add(bc.res1, ff2_out);
        }
        cache.final_tokens = h;
        auto pooled = global_avg_pool(h);
        cache.cls_in = Matrix(1, cfg_.width);
        std::copy(pooled.begin(), pooled.end(), cache.cls_in.data.begin());
        Matrix logits = yat_dense_forward(cache.cls_in, cls_);
        std::copy(logits.data.begin(), logits.data.end(), logits_out.begin());
    }

    void backward_sample(VitSampleCache& cache, std::span<const double> d_logits) {
        Matrix up(1, cfg_.classes);
        std::copy(d_logits.begin(), d_logits.end(), up.data.begin());

        YatDenseGrads g_cls = yat_dense_backward(cache.cls_in, cls_, up);
        accumulate(g_cls_, g_cls.d_kernel);
        ga_cls_ += g_cls.d_alpha;

        Matrix d_tokens =
            global_avg_pool_backward(g_cls.d_input.row(0), cache.final_tokens.rows);

        for (std::size_t b = blocks_.size(); b-- > 0;) {
            auto& bc = cache.blocks[b];
            VitBlock& blk = blocks_[b];

            // h = res1 + ff2(ff1(res1))
            YatDenseGrads g2 = yat_dense_backward(bc.ff1_out, blk.ff2, d_tokens);
            accumulate(blk.g_ff2, g2.d_kernel);
            blk.ga_ff2 += g2.d_alpha;
            YatDenseGrads g1 = yat_dense_backward(bc.res1, blk.ff1, g2.d_input);
            accumulate(blk.g_ff1, g1.d_kernel);
            blk.ga_ff1 += g1.d_alpha;
            Matrix d_res1 = add(d_tokens, g1.d_input);

            // res1 = attn_in + e_mha(attn_in)
            EMhaGrads ga = e_mha_backward(bc.attn_in, blk.attn, bc.mha, d_res1);
            accumulate(blk.g_q, ga.q.d_kernel);
            accumulate(blk.g_k, ga.k.d_kernel);
            accumulate(blk.g_v, ga.v.d_kernel);
            accumulate(blk.g_out, ga.out.d_kernel);
            blk.ga_q += ga.q.d_alpha;
            blk.ga_k += ga.k.d_alpha;
            blk.ga_v += ga.v.d_alpha;
            blk.ga_out += ga.out.d_alpha;
            blk.g_attn_alpha += ga.d_attn_alpha;
            Matrix d_mask_out = add(d_res1, ga.d_input);

            TokenMaskGrads gm = token_mask_backward(bc.mask, d_mask_out);
            for (std::size_t j = 0; j < cfg_.width; ++j) {
                g_mask_token_[j] += gm.d_mask_token[j];
            }
            d_tokens = std::move(gm.d_input);
        }

        accumulate(g_pos_, d_tokens);
        YatDenseGrads gp = yat_dense_backward(cache.patches, proj_, d_tokens);
        accumulate(g_proj_, gp.d_kernel);
        ga_proj_ += gp.d_alpha;
    }

    static void accumulate(Matrix& dest, const Matrix& src) {
        for (std::size_t i = 0; i < dest.size(); ++i) dest.data[i] += src.data[i];
    }

    ModelConfig cfg_;
    HeadKind head_;
    bool bias_in_head_;
    double dropout_;
    std::size_t tokens_ = 0;

    YatDenseParams proj_;
    Matrix g_proj_;
    double ga_proj_ = 0.0;
    Matrix pos_, g_pos_;
    MaskingConfig mask_cfg_;
    std::vector<double> g_mask_token_;
    std::vector<VitBlock> blocks_;
    YatDenseParams cls_;
    Matrix g_cls_;
    double ga_cls_ = 0.0;

    std::vector<VitSampleCache> caches_;
    Matrix logits_, probs_;
    std::vector<int> labels_;
};

}  // namespace

std::unique_ptr<Model> make_model(const ModelConfig& config, HeadKind head,
                                  bool bias_in_head, double dropout_rate,
                                  RngState& rng) {
    if (config.arch == Arch::EVit) {
        return std::make_unique<VitModel>(config, head, bias_in_head, dropout_rate, rng);
    }
    return std::make_unique<MlpModel>(config, head, bias_in_head, dropout_rate, rng);
}

}  // namespace yatnn
