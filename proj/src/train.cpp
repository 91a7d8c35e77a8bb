#include "yatnn/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "json.hpp"
#include "yatnn/errors.hpp"

namespace yatnn {

void TrainConfig::validate() const {
    if (head == HeadKind::Softermax && bias_in_head) {
        throw ConfigError("softermax head requires bias_in_head = false");
    }
    if (epochs < 0) throw ConfigError("epochs must be >= 0");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
        throw ConfigError("dropout_rate must lie in [0, 1)");
    }
    if (lambda_reg < 0.0) throw ConfigError("lambda_reg must be >= 0");
    if (!(lr > 0.0)) throw ConfigError("lr must be positive");
}

std::string train_config_to_json(const TrainConfig& c) {
    nlohmann::json j;
    j["optimizer"] = c.optimizer == OptimizerKind::Sgd ? "sgd" : "adam";
    j["lr"] = c.lr;
    j["momentum"] = c.momentum;
    j["beta1"] = c.beta1;
    j["beta2"] = c.beta2;
    j["eps_opt"] = c.eps_opt;
    j["epochs"] = c.epochs;
    j["batch_size"] = c.batch_size;
    j["seed"] = c.seed;
    j["dropout_rate"] = c.dropout_rate;
    j["lambda_reg"] = c.lambda_reg;
    j["head"] = head_name(c.head);
    j["bias_in_head"] = c.bias_in_head;
    return j.dump(2);
}

TrainConfig train_config_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    TrainConfig c;
    if (j.contains("optimizer")) {
        const auto name = j["optimizer"].get<std::string>();
        if (name == "sgd") {
            c.optimizer = OptimizerKind::Sgd;
        } else if (name == "adam") {
            c.optimizer = OptimizerKind::Adam;
        } else {
            throw ConfigError("unknown optimizer '" + name + "'");
        }
    }
    if (j.contains("lr")) c.lr = j["lr"].get<double>();
    if (j.contains("momentum")) c.momentum = j["momentum"].get<double>();
    if (j.contains("beta1")) c.beta1 = j["beta1"].get<double>();
    if (j.contains("beta2")) c.beta2 = j["beta2"].get<double>();
    if (j.contains("eps_opt")) c.eps_opt = j["eps_opt"].get<double>();
    if (j.contains("epochs")) c.epochs = j["epochs"].get<int>();
    if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<int>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("dropout_rate")) c.dropout_rate = j["dropout_rate"].get<double>();
    if (j.contains("lambda_reg")) c.lambda_reg = j["lambda_reg"].get<double>();
    if (j.contains("head")) c.head = head_from_name(j["head"].get<std::string>());
    if (j.contains("bias_in_head")) c.bias_in_head = j["bias_in_head"].get<bool>();
    c.validate();
    return c;
}

namespace {

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

std::string train_report_to_json(const TrainReport& r) {
    nlohmann::json j;
    j["epoch_loss"] = r.epoch_loss;
    j["train_accuracy"] = r.train_accuracy;
    j["test_accuracy"] = r.test_accuracy;
    j["final_train_accuracy"] = r.final_train_accuracy;
    j["final_test_accuracy"] = r.final_test_accuracy;
    j["wall_clock_seconds"] = r.wall_clock_seconds;
    j["seed"] = r.seed;
    return j.dump(2);
}

std::string train_report_to_csv(const TrainReport& r) {
    std::string out = "epoch,loss,train_acc,test_acc\n";
    for (std::size_t e = 0; e < r.epoch_loss.size(); ++e) {
        out += std::to_string(e) + "," + fmt_double(r.epoch_loss[e]) + "," +
               fmt_double(r.train_accuracy[e]) + "," + fmt_double(r.test_accuracy[e]) +
               "\n";
    }
    return out;
}

void sgd_update(std::span<double> value, std::span<const double> grad,
                std::span<double> velocity, double lr, double momentum) {
    if (value.size() != grad.size() || value.size() != velocity.size()) {
        throw ShapeError("sgd_update: buffer sizes disagree");
    }
    for (std::size_t i = 0; i < value.size(); ++i) {
        velocity[i] = momentum * velocity[i] + grad[i];
        value[i] -= lr * velocity[i];
    }
}

void adam_update(std::span<double> value, std::span<const double> grad,
                 std::span<double> m, std::span<double> v, std::uint64_t step,
                 double lr, double beta1, double beta2, double eps) {
    if (value.size() != grad.size() || value.size() != m.size() ||
        value.size() != v.size()) {
        throw ShapeError("adam_update: buffer sizes disagree");
    }
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
    for (std::size_t i = 0; i < value.size(); ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
        const double m_hat = m[i] / bc1;
        const double v_hat = v[i] / bc2;
        value[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
}

void optimizer_step(std::vector<ParamTensor>& params, OptimizerState& state,
                    const TrainConfig& config) {
    if (state.slot1.empty()) {
        state.slot1.resize(params.size());
        state.slot2.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            state.slot1[i].assign(params[i].size, 0.0);
            state.slot2[i].assign(params[i].size, 0.0);
        }
    }
    if (state.slot1.size() != params.size()) {
        throw ShapeError("optimizer_step: state does not match parameter list");
    }
    state.step += 1;
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& t = params[i];
        std::span<double> value{t.value, t.size};
        std::span<const double> grad{t.grad, t.size};
        if (config.optimizer == OptimizerKind::Sgd) {
            sgd_update(value, grad, state.slot1[i], config.lr, config.momentum);
        } else {
            adam_update(value, grad, state.slot1[i], state.slot2[i], state.step,
                        config.lr, config.beta1, config.beta2, config.eps_opt);
        }
    }
}

namespace {

double regularizer_total(Model& model, double lambda) {
    if (lambda == 0.0) return 0.0;
    double total = 0.0;
    for (auto& t : model.yat_kernels()) {
        Matrix kernel(t.rows, t.cols);
        std::copy(t.value, t.value + t.size, kernel.data.begin());
        total += e_regularizer_penalty(kernel, model.config().epsilon);
    }
    return lambda * total;
}

void regularizer_accumulate_grads(Model& model, double lambda) {
    if (lambda == 0.0) return;
    for (auto& t : model.yat_kernels()) {
        Matrix kernel(t.rows, t.cols);
        std::copy(t.value, t.value + t.size, kernel.data.begin());
        Matrix g = e_regularizer_grad(kernel, model.config().epsilon);
        for (std::size_t i = 0; i < g.size(); ++i) t.grad[i] += lambda * g.data[i];
    }
}

}  // namespace

double composed_loss(Model& model, const Matrix& x, std::span<const int> labels,
                     double lambda, bool training, RngState& rng) {
    return model.forward_loss(x, labels, training, rng) +
           regularizer_total(model, lambda);
}

double composed_loss_and_grad(Model& model, const Matrix& x,
                              std::span<const int> labels, double lambda,
                              bool training, RngState& rng) {
    const double loss = composed_loss(model, x, labels, lambda, training, rng);
    model.backward();
    regularizer_accumulate_grads(model, lambda);
    return loss;
}

double accuracy(Model& model, const Dataset& ds, std::size_t eval_batch) {
    if (ds.size() == 0) return 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < ds.size(); start += eval_batch) {
        const std::size_t count = std::min(eval_batch, ds.size() - start);
        Matrix batch(count, ds.features.cols);
        std::copy_n(ds.features.data.begin() + start * ds.features.cols,
                    count * ds.features.cols, batch.data.begin());
        Matrix probs = model.predict_probs(batch);
        for (std::size_t i = 0; i < count; ++i) {
            std::size_t best = 0;
            for (std::size_t j = 1; j < probs.cols; ++j) {
                if (probs(i, j) > probs(i, best)) best = j;
            }
            if (static_cast<int>(best) == ds.labels[start + i]) correct += 1;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(ds.size());
}

namespace {

// Fisher-Yates driven by the run RNG; deterministic per seed.
void shuffle_indices(std::vector<std::size_t>& idx, RngState& rng) {
    for (std::size_t i = idx.size(); i > 1; --i) {
        const std::size_t j = next_u64(rng) % i;
        std::swap(idx[i - 1], idx[j]);
    }
}

// Names the first non-finite tensor for the divergence diagnostic.
void check_model_finite(Model& model, int epoch, std::size_t batch) {
    for (auto& t : model.params()) {
        const auto where = " at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch);
        if (!all_finite({t.grad, t.size})) {
            throw NumericError("training aborted" + where +
                               ": non-finite value in tensor '" + t.name + ".grad'");
        }
        if (!all_finite({t.value, t.size})) {
            throw NumericError("training aborted" + where +
                               ": non-finite value in tensor '" + t.name + "'");
        }
    }
}

double full_loss(Model& model, const Dataset& ds, double lambda,
                 std::size_t eval_batch = 256) {
    RngState unused{0, 0};
    double total = 0.0;
    for (std::size_t start = 0; start < ds.size(); start += eval_batch) {
        const std::size_t count = std::min(eval_batch, ds.size() - start);
        Matrix batch(count, ds.features.cols);
        std::copy_n(ds.features.data.begin() + start * ds.features.cols,
                    count * ds.features.cols, batch.data.begin());
        std::span<const int> labels{ds.labels.data() + start, count};
        total += model.forward_loss(batch, labels, /*training=*/false, unused) *
                 static_cast<double>(count);
    }
    return total / static_cast<double>(ds.size()) + regularizer_total(model, lambda);
}

}  // namespace

TrainOutput train_model(const ModelConfig& model_config, const Dataset& train_set,
                        const Dataset& test_set, const TrainConfig& config) {
    config.validate();
    const auto t0 = std::chrono::steady_clock::now();

    RngState rng{config.seed, 0};
    TrainOutput out;
    out.model = make_model(model_config, config.head, config.bias_in_head,
                           config.dropout_rate, rng);
    Model& model = *out.model;
    out.report.seed = config.seed;

    out.report.epoch_loss.push_back(full_loss(model, train_set, config.lambda_reg));
    out.report.train_accuracy.push_back(accuracy(model, train_set));
    out.report.test_accuracy.push_back(accuracy(model, test_set));

    OptimizerState opt;
    std::vector<std::size_t> order(train_set.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        shuffle_indices(order, rng);
        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t count =
                std::min<std::size_t>(config.batch_size, order.size() - start);
            Matrix batch(count, train_set.features.cols);
            std::vector<int> labels(count);
            for (std::size_t i = 0; i < count; ++i) {
                const std::size_t src = order[start + i];
                std::copy_n(train_set.features.data.begin() + src * train_set.features.cols,
                            train_set.features.cols,
                            batch.data.begin() + i * train_set.features.cols);
                labels[i] = train_set.labels[src];
            }
            const double loss = composed_loss_and_grad(model, batch, labels,
                                                       config.lambda_reg,
                                                       /*training=*/true, rng);
            if (!std::isfinite(loss)) {
                check_model_finite(model, epoch, batches);
                throw NumericError("training aborted at epoch " + std::to_string(epoch) +
                                   ", batch " + std::to_string(batches) +
                                   ": non-finite value in tensor 'loss'");
            }
            auto params = model.params();
            optimizer_step(params, opt, config);
            check_model_finite(model, epoch, batches);
            loss_sum += loss;
            batches += 1;
        }
        out.report.epoch_loss.push_back(batches ? loss_sum / static_cast<double>(batches)
                                                : 0.0);
        out.report.train_accuracy.push_back(accuracy(model, train_set));
        out.report.test_accuracy.push_back(accuracy(model, test_set));
    }

    out.report.final_train_accuracy = out.report.train_accuracy.back();
    out.report.final_test_accuracy = out.report.test_accuracy.back();
    out.report.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

XorSolution solve_xor(int restarts, RngState& rng, bool with_grid) {
    if (restarts < 1) throw DomainError("solve_xor: restarts must be >= 1");
    const Dataset xord = xor_dataset();
    const Matrix& x = xord.features;
    const std::array<double, 4> target = {0.0, 1.0, 1.0, 0.0};

    constexpr double kLr = 0.05;
    constexpr int kSteps = 5000;

    XorSolution best;
    best.mse = std::numeric_limits<double>::infinity();

    for (int r = 0; r < restarts; ++r) {
        // One E-neuron without scale: alpha = 0 pins Theta to 1.
        YatDenseParams p;
        p.kernel = Matrix(1, 2);
        p.kernel(0, 0) = next_normal(rng);
        p.kernel(0, 1) = next_normal(rng);
        p.alpha = 0.0;
        p.has_bias = true;
        p.bias = {next_normal(rng)};

        for (int step = 0; step < kSteps; ++step) {
            Matrix y = yat_dense_forward(x, p);
            Matrix up(4, 1);
            for (std::size_t i = 0; i < 4; ++i) {
                up(i, 0) = 2.0 * (y(i, 0) - target[i]) / 4.0;
            }
            YatDenseGrads g = yat_dense_backward(x, p, up);
            if (!all_finite(g.d_kernel) || !std::isfinite(g.d_bias[0])) break;
            for (std::size_t c = 0; c < 2; ++c) p.kernel(0, c) -= kLr * g.d_kernel(0, c);
            p.bias[0] -= kLr * g.d_bias[0];
        }

        Matrix y = yat_dense_forward(x, p);
        double mse = 0.0;
        for (std::size_t i = 0; i < 4; ++i) {
            const double e = y(i, 0) - target[i];
            mse += e * e / 4.0;
        }
        if (std::isfinite(mse) && mse < best.mse) {
            best.mse = mse;
            best.weights = {p.kernel(0, 0), p.kernel(0, 1)};
            best.bias = p.bias[0];
            for (std::size_t i = 0; i < 4; ++i) best.outputs[i] = y(i, 0);
        }
    }

    int correct = 0;
    for (std::size_t i = 0; i < 4; ++i) {
        const bool predicted = best.outputs[i] > 0.5;
        if (predicted == (target[i] > 0.5)) correct += 1;
    }
    best.accuracy = correct / 4.0;

    if (with_grid) {
        YatDenseParams p;
        p.kernel = Matrix(1, 2);
        p.kernel(0, 0) = best.weights[0];
        p.kernel(0, 1) = best.weights[1];
        p.alpha = 0.0;
        p.has_bias = true;
        p.bias = {best.bias};
        best.decision_grid = Matrix(kXorGridSize, kXorGridSize);
        const double step = (kXorGridHigh - kXorGridLow) / (kXorGridSize - 1);
        Matrix row_points(kXorGridSize, 2);
        for (std::size_t gy = 0; gy < kXorGridSize; ++gy) {
            for (std::size_t gx = 0; gx < kXorGridSize; ++gx) {
                row_points(gx, 0) = kXorGridLow + step * static_cast<double>(gx);
                row_points(gx, 1) = kXorGridLow + step * static_cast<double>(gy);
            }
            Matrix vals = yat_dense_forward(row_points, p);
            for (std::size_t gx = 0; gx < kXorGridSize; ++gx) {
                best.decision_grid(gy, gx) = vals(gx, 0);
            }
        }
    }
    return best;
}

}  // namespace yatnn
