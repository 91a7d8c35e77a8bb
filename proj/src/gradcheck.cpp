#include "yatnn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "yatnn/attention.hpp"
#include "yatnn/layers.hpp"
#include "yatnn/losses.hpp"
#include "yatnn/pca.hpp"
#include "yatnn/train.hpp"

namespace yatnn {

GradCheckReport check_gradients(const std::function<double()>& loss,
                                const std::function<void()>& compute_grads,
                                std::vector<ParamTensor> tensors,
                                const GradCheckSpec& spec, RngState* coord_rng) {
    compute_grads();
    // Snapshot the analytic gradients before finite differencing mutates state.
    std::vector<std::vector<double>> analytic(tensors.size());
    std::size_t total_coords = 0;
    for (std::size_t t = 0; t < tensors.size(); ++t) {
        analytic[t].assign(tensors[t].grad, tensors[t].grad + tensors[t].size);
        total_coords += tensors[t].size;
    }

    GradCheckReport report;
    report.configs = 1;

    auto check_coord = [&](std::size_t t, std::size_t i) {
        double* slot = tensors[t].value + i;
        const double original = *slot;
        *slot = original + spec.h;
        const double plus = loss();
        *slot = original - spec.h;
        const double minus = loss();
        *slot = original;
        const double fd = (plus - minus) / (2.0 * spec.h);
        const double a = analytic[t][i];
        const double rel = std::abs(a - fd) /
                           std::max({1e-8, std::abs(a), std::abs(fd)});
        report.coords_checked += 1;
        if (rel > report.max_rel_err) {
            report.max_rel_err = rel;
            report.worst_coord = tensors[t].name + "[" + std::to_string(i) + "]";
        }
        if (rel > spec.tol) report.failures += 1;
    };

    if (total_coords <= spec.max_coords) {
        for (std::size_t t = 0; t < tensors.size(); ++t) {
            for (std::size_t i = 0; i < tensors[t].size; ++i) check_coord(t, i);
        }
    } else {
        RngState fallback{0x5eed, 0};
        RngState& rng = coord_rng ? *coord_rng : fallback;
        for (std::size_t probe = 0; probe < spec.max_coords; ++probe) {
            std::size_t flat = next_u64(rng) % total_coords;
            std::size_t t = 0;
            while (flat >= tensors[t].size) {
                flat -= tensors[t].size;
                t += 1;
            }
            check_coord(t, flat);
        }
    }
    return report;
}

void merge(GradCheckReport& into, const GradCheckReport& part) {
    if (part.max_rel_err > into.max_rel_err) {
        into.max_rel_err = part.max_rel_err;
        into.worst_coord = part.worst_coord;
    }
    into.failures += part.failures;
    into.coords_checked += part.coords_checked;
    into.configs += part.configs;
}

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, RngState& rng, double scale = 1.0) {
    Matrix m(r, c);
    for (double& v : m.data) v = scale * next_normal(rng);
    return m;
}

double min_pair_dist2(const Matrix& x, const Matrix& kernel) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < x.rows; ++i) {
        for (std::size_t j = 0; j < kernel.rows; ++j) {
            best = std::min(best, squared_distance(x.row(i), kernel.row(j)));
        }
    }
    return best;
}

// Finite differences sit on a smooth patch only if no input is near a kernel
// row (yat curvature spike) and, for attention, no logit is near the clamp.
constexpr double kMinDist2 = 0.05;
constexpr double kClampMargin = 1e-2;

struct TensorRefs {
    std::vector<ParamTensor> tensors;

    void add(const std::string& name, Matrix& value, Matrix& grad) {
        tensors.push_back({name, value.data.data(), grad.data.data(), value.size(),
                           value.rows, value.cols, false});
    }
    void add(const std::string& name, std::vector<double>& value,
             std::vector<double>& grad) {
        tensors.push_back({name, value.data(), grad.data(), value.size(), 0, 0, false});
    }
    void add(const std::string& name, double& value, double& grad) {
        tensors.push_back({name, &value, &grad, 1, 0, 0, false});
    }
};

}  // namespace

GradCheckReport grad_check_yat_dense(int trials, RngState& rng) {
    GradCheckReport report;
    for (int trial = 0; trial < trials; ++trial) {
        const std::size_t k = 1 + next_u64(rng) % 4;
        const std::size_t n = 2 + next_u64(rng) % 7;
        const std::size_t m = 1 + next_u64(rng) % 8;

        Matrix x, kernel;
        do {
            x = random_matrix(k, n, rng);
            kernel = random_matrix(m, n, rng);
        } while (min_pair_dist2(x, kernel) < kMinDist2);

        YatDenseParams p;
        p.kernel = kernel;
        p.alpha = 0.5 + next_uniform01(rng);
        p.has_bias = (next_u64(rng) % 2) == 0;
        if (p.has_bias) {
            p.bias.resize(m);
            for (double& b : p.bias) b = next_normal(rng);
        }
        p.scale_mode =
            (next_u64(rng) % 2) ? ScaleMode::MainText : ScaleMode::AppendixCode;
        Matrix upstream = random_matrix(k, m, rng);

        Matrix g_kernel(m, n), g_input(k, n);
        double g_alpha = 0.0;
        std::vector<double> g_bias(p.has_bias ? m : 0, 0.0);

        auto loss = [&] {
            Matrix y = yat_dense_forward(x, p);
            double s = 0.0;
            for (std::size_t i = 0; i < y.size(); ++i) s += y.data[i] * upstream.data[i];
            return s;
        };
        auto grads = [&] {
            YatDenseGrads g = yat_dense_backward(x, p, upstream);
            g_kernel = g.d_kernel;
            g_input = g.d_input;
            g_alpha = g.d_alpha;
            if (p.has_bias) g_bias = g.d_bias;
        };

        TensorRefs refs;
        refs.add("kernel", p.kernel, g_kernel);
        refs.add("alpha", p.alpha, g_alpha);
        if (p.has_bias) refs.add("bias", p.bias, g_bias);
        refs.add("input", x, g_input);
        merge(report, check_gradients(loss, grads, refs.tensors));
    }
    return report;
}

GradCheckReport grad_check_dense(int trials, RngState& rng) {
    GradCheckReport report;
    for (int trial = 0; trial < trials; ++trial) {
        const std::size_t k = 1 + next_u64(rng) % 4;
        const std::size_t n = 1 + next_u64(rng) % 8;
        const std::size_t m = 1 + next_u64(rng) % 8;
        DenseParams p;
        p.weight = random_matrix(m, n, rng);
        p.bias.resize(m);
        for (double& b : p.bias) b = next_normal(rng);
        p.activation = static_cast<Activation>(next_u64(rng) % 3);
        Matrix x = random_matrix(k, n, rng);
        // Keep pre-activations away from the ReLU kink.
        if (p.activation == Activation::ReLU) {
            bool ok = false;
            while (!ok) {
                Matrix z = mat_mul_bt(x, p.weight);
                ok = true;
                for (std::size_t i = 0; i < z.rows && ok; ++i) {
                    for (std::size_t j = 0; j < z.cols; ++j) {
                        if (std::abs(z(i, j) + p.bias[j]) < 1e-3) {
                            ok = false;
                            break;
                        }
                    }
                }
                if (!ok) x = random_matrix(k, n, rng);
            }
        }
        Matrix upstream = random_matrix(k, m, rng);
        Matrix g_weight(m, n), g_input(k, n);
        std::vector<double> g_bias(m, 0.0);
        auto loss = [&] {
            Matrix y = dense_forward(x, p);
            double s = 0.0;
            for (std::size_t i = 0; i < y.size(); ++i) s += y.data[i] * upstream.data[i];
            return s;
        };
        auto grads = [&] {
            DenseGrads g = dense_backward(x, p, upstream);
            g_weight = g.d_weight;
            g_input = g.d_input;
            g_bias = g.d_bias;
        };
        TensorRefs refs;
        refs.add("weight", p.weight, g_weight);
        refs.add("bias", p.bias, g_bias);
        refs.add("input", x, g_input);
        merge(report, check_gradients(loss, grads, refs.tensors));
    }
    return report;
}

GradCheckReport grad_check_softermax_head(int trials, RngState& rng) {
    GradCheckReport report;
    for (int trial = 0; trial < trials; ++trial) {
        const std::size_t k = 1 + next_u64(rng) % 4;
        const std::size_t c = 2 + next_u64(rng) % 7;
        Matrix logits(k, c);
        for (double& v : logits.data) v = 0.05 + 2.0 * next_uniform01(rng);
        std::vector<int> labels(k);
        for (auto& l : labels) l = static_cast<int>(next_u64(rng) % c);

        Matrix g_logits(k, c);
        auto probs_of = [&] {
            Matrix probs(k, c);
            for (std::size_t i = 0; i < k; ++i) {
                auto p = softermax(logits.row(i), SoftermaxPolicy::Strict);
                std::copy(p.begin(), p.end(), probs.row(i).begin());
            }
            return probs;
        };
        auto loss = [&] { return cross_entropy(probs_of(), labels); };
        auto grads = [&] {
            Matrix probs = probs_of();
            Matrix d_probs = cross_entropy_backward(probs, labels);
            for (std::size_t i = 0; i < k; ++i) {
                softermax_row_backward(logits.row(i), probs.row(i), d_probs.row(i),
                                       SoftermaxPolicy::Strict, g_logits.row(i));
            }
        };
        TensorRefs refs;
        refs.add("logits", logits, g_logits);
        merge(report, check_gradients(loss, grads, refs.tensors));
    }
    return report;
}

namespace {

bool attention_config_smooth(const Matrix& x, const AttentionParams& p) {
    if (min_pair_dist2(x, p.proj_q.kernel) < kMinDist2) return false;
    if (min_pair_dist2(x, p.proj_k.kernel) < kMinDist2) return false;
    if (min_pair_dist2(x, p.proj_v.kernel) < kMinDist2) return false;
    EMhaCache cache;
    e_mha_forward(x, p, &cache);
    if (min_pair_dist2(cache.concat, p.proj_out.kernel) < kMinDist2) return false;
    if (p.policy == SoftermaxPolicy::ClampShift) {
        for (const auto& logits : cache.logits) {
            for (double v : logits.data) {
                if (std::abs(v + 1.0) < kClampMargin) return false;
            }
        }
    }
    return true;
}

}  // namespace

GradCheckReport grad_check_e_mha(int trials, RngState& rng) {
    GradCheckReport report;
    for (int trial = 0; trial < trials; ++trial) {
        const std::size_t heads = 1 + next_u64(rng) % 2;
        const std::size_t head_dim = 2 + next_u64(rng) % 3;
        const std::size_t width = heads * head_dim;
        const std::size_t t = 1 + next_u64(rng) % 3;

        AttentionParams p;
        p.heads = heads;
        p.attn_alpha = 0.5 + next_uniform01(rng);
        p.policy = SoftermaxPolicy::ClampShift;
        Matrix x;
        do {
            auto make = [&](std::size_t out, std::size_t in) {
                YatDenseParams yp;
                yp.kernel = random_matrix(out, in, rng);
                yp.alpha = 0.5 + next_uniform01(rng);
                return yp;
            };
            p.proj_q = make(width, width);
            p.proj_k = make(width, width);
            p.proj_v = make(width, width);
            p.proj_out = make(width, width);
            x = random_matrix(t, width, rng);
        } while (!attention_config_smooth(x, p));

        Matrix upstream = random_matrix(t, width, rng);
        EMhaCache cache;
        Matrix gq(width, width), gk(width, width), gv(width, width), go(width, width);
        Matrix g_input(t, width);
        double gaq = 0, gak = 0, gav = 0, gao = 0, g_attn_alpha = 0;

        auto loss = [&] {
            Matrix y = e_mha(x, p);
            double s = 0.0;
            for (std::size_t i = 0; i < y.size(); ++i) s += y.data[i] * upstream.data[i];
            return s;
        };
        auto grads = [&] {
            e_mha_forward(x, p, &cache);
            EMhaGrads g = e_mha_backward(x, p, cache, upstream);
            gq = g.q.d_kernel;
            gk = g.k.d_kernel;
            gv = g.v.d_kernel;
            go = g.out.d_kernel;
            gaq = g.q.d_alpha;
            gak = g.k.d_alpha;
            gav = g.v.d_alpha;
            gao = g.out.d_alpha;
            g_attn_alpha = g.d_attn_alpha;
            g_input = g.d_input;
        };
        TensorRefs refs;
        refs.add("q.kernel", p.proj_q.kernel, gq);
        refs.add("k.kernel", p.proj_k.kernel, gk);
        refs.add("v.kernel", p.proj_v.kernel, gv);
        refs.add("out.kernel", p.proj_out.kernel, go);
        refs.add("q.alpha", p.proj_q.alpha, gaq);
        refs.add("k.alpha", p.proj_k.alpha, gak);
        refs.add("v.alpha", p.proj_v.alpha, gav);
        refs.add("out.alpha", p.proj_out.alpha, gao);
        refs.add("attn_alpha", p.attn_alpha, g_attn_alpha);
        refs.add("input", x, g_input);
        merge(report, check_gradients(loss, grads, refs.tensors));
    }
    return report;
}

GradCheckReport grad_check_patch_embed(int trials, RngState& rng) {
    GradCheckReport report;
    for (int trial = 0; trial < trials; ++trial) {
        const std::size_t patch = 2;
        const std::size_t h = patch * (1 + next_u64(rng) % 2);
        const std::size_t w = patch * (1 + next_u64(rng) % 2);
        const std::size_t m = 2 + next_u64(rng) % 4;

        Matrix image;
        YatDenseParams p;
        do {
            image = random_matrix(h, w, rng);
            p.kernel = random_matrix(m, patch * patch, rng);
        } while (min_pair_dist2(extract_patches(image, patch), p.kernel) < kMinDist2);
        p.alpha = 0.5 + next_uniform01(rng);

        const std::size_t tokens = (h / patch) * (w / patch);
        Matrix upstream = random_matrix(tokens, m, rng);
        Matrix g_kernel(m, patch * patch), g_image(h, w);
        double g_alpha = 0.0;

        auto loss = [&] {
            Matrix y = patch_embed(image, patch, p);
            double s = 0.0;
            for (std::size_t i = 0; i < y.size(); ++i) s += y.data[i] * upstream.data[i];
            return s;
        };
        auto grads = [&] {
            Matrix patches = extract_patches(image, patch);
            YatDenseGrads g = yat_dense_backward(patches, p, upstream);
            g_kernel = g.d_kernel;
            g_alpha = g.d_alpha;
            g_image = scatter_patches(g.d_input, h, w, patch);
        };
        TensorRefs refs;
        refs.add("kernel", p.kernel, g_kernel);
        refs.add("alpha", p.alpha, g_alpha);
        refs.add("image", image, g_image);
        merge(report, check_gradients(loss, grads, refs.tensors));
    }
    return report;
}

GradCheckReport grad_check_pool(int trials, RngState& rng) {
    GradCheckReport report;
    for (int trial = 0; trial < trials; ++trial) {
        const std::size_t t = 1 + next_u64(rng) % 6;
        const std::size_t w = 1 + next_u64(rng) % 8;
        Matrix tokens = random_matrix(t, w, rng);
        std::vector<double> upstream(w);
        for (double& v : upstream) v = next_normal(rng);
        Matrix g_tokens(t, w);
        auto loss = [&] {
            auto pooled = global_avg_pool(tokens);
            return dot(pooled, upstream);
        };
        auto grads = [&] { g_tokens = global_avg_pool_backward(upstream, t); };
        TensorRefs refs;
        refs.add("tokens", tokens, g_tokens);
        merge(report, check_gradients(loss, grads, refs.tensors));
    }
    return report;
}

GradCheckReport grad_check_regularizer(int trials, RngState& rng) {
    GradCheckReport report;
    for (int trial = 0; trial < trials; ++trial) {
        const std::size_t m = 2 + next_u64(rng) % 6;
        const std::size_t n = 2 + next_u64(rng) % 7;
        Matrix kernel;
        bool ok = false;
        while (!ok) {
            kernel = random_matrix(m, n, rng);
            ok = true;
            for (std::size_t i = 0; i < m && ok; ++i) {
                for (std::size_t j = i + 1; j < m; ++j) {
                    if (squared_distance(kernel.row(i), kernel.row(j)) < kMinDist2) {
                        ok = false;
                        break;
                    }
                }
            }
        }
        Matrix g_kernel(m, n);
        auto loss = [&] { return e_regularizer_penalty(kernel, kDefaultEpsilon); };
        auto grads = [&] { g_kernel = e_regularizer_grad(kernel, kDefaultEpsilon); };
        TensorRefs refs;
        refs.add("kernel", kernel, g_kernel);
        merge(report, check_gradients(loss, grads, refs.tensors));
    }
    return report;
}

GradCheckReport grad_check_emlp(int trials, RngState& rng) {
    GradCheckReport report;
    for (int trial = 0; trial < trials; ++trial) {
        ModelConfig mc;
        mc.arch = Arch::EMlp;
        mc.input_dim = 3 + next_u64(rng) % 4;
        mc.hidden = {3 + next_u64(rng) % 3, 2 + next_u64(rng) % 3};
        mc.classes = 2 + next_u64(rng) % 3;
        auto model = make_model(mc, HeadKind::Softermax, /*bias_in_head=*/false,
                                /*dropout_rate=*/0.0, rng);
        const std::size_t k = 1 + next_u64(rng) % 3;
        Matrix x = random_matrix(k, mc.input_dim, rng);
        std::vector<int> labels(k);
        for (auto& l : labels) l = static_cast<int>(next_u64(rng) % mc.classes);
        const double lambda = 1e-3;

        RngState unused{0, 0};
        auto loss = [&] {
            return composed_loss(*model, x, labels, lambda, /*training=*/false, unused);
        };
        auto grads = [&] {
            composed_loss_and_grad(*model, x, labels, lambda, /*training=*/false,
                                   unused);
        };
        auto tensors = model->params();
        // The batch input participates as a checked tensor too.
        Matrix g_input(k, mc.input_dim);  // unused buffer; input grads not exposed
        merge(report, check_gradients(loss, grads, tensors));
    }
    return report;
}

GradCheckReport grad_check_evit_block(std::size_t width, std::size_t heads,
                                      std::size_t mlp_width, std::size_t max_coords,
                                      RngState& rng) {
    ModelConfig mc;
    mc.arch = Arch::EVit;
    mc.image_h = 8;
    mc.image_w = 8;
    mc.patch = 4;
    mc.width = width;
    mc.heads = heads;
    mc.mlp_width = mlp_width;
    mc.blocks = 1;
    mc.classes = 3;
    mc.mask_ratio = 0.0;  // deterministic forward for finite differencing
    auto model = make_model(mc, HeadKind::Softermax, false, 0.0, rng);

    const std::size_t k = 2;
    Matrix x(k, mc.image_h * mc.image_w);
    for (double& v : x.data) v = next_uniform01(rng);
    std::vector<int> labels = {0, 2};

    RngState unused{0, 0};
    auto loss = [&] {
        return composed_loss(*model, x, labels, 0.0, /*training=*/false, unused);
    };
    auto grads = [&] {
        composed_loss_and_grad(*model, x, labels, 0.0, /*training=*/false, unused);
    };
    GradCheckSpec spec;
    spec.max_coords = max_coords;
    return check_gradients(loss, grads, model->params(), spec, &rng);
}

GradSuiteReport run_grad_suite(int trials_per_family, RngState& rng) {
    GradSuiteReport suite;
    suite.families["yat_dense"] = grad_check_yat_dense(trials_per_family, rng);
    suite.families["dense"] = grad_check_dense(trials_per_family, rng);
    suite.families["softermax_head"] = grad_check_softermax_head(trials_per_family, rng);
    suite.families["e_mha"] = grad_check_e_mha(trials_per_family, rng);
    suite.families["patch_embed"] = grad_check_patch_embed(trials_per_family, rng);
    suite.families["global_avg_pool"] = grad_check_pool(trials_per_family, rng);
    suite.families["e_regularizer"] = grad_check_regularizer(trials_per_family, rng);
    suite.families["emlp_composed"] = grad_check_emlp(trials_per_family, rng);
    for (const auto& [name, r] : suite.families) {
        suite.max_rel_err = std::max(suite.max_rel_err, r.max_rel_err);
        suite.failures += r.failures;
        suite.configs += r.configs;
    }
    return suite;
}

}  // namespace yatnn
