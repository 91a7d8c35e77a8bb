#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "yatnn/dataset.hpp"
#include "yatnn/losses.hpp"
#include "yatnn/model.hpp"

namespace yatnn {

enum class OptimizerKind { Sgd, Adam };

struct TrainConfig {
    OptimizerKind optimizer = OptimizerKind::Adam;
    double lr = 1e-3;
    double momentum = 0.0;  // SGD only
    double beta1 = 0.9, beta2 = 0.999, eps_opt = 1e-8;
    int epochs = 10;
    int batch_size = 32;
    std::uint64_t seed = 0;
    double dropout_rate = 0.0;
    double lambda_reg = 0.0;
    HeadKind head = HeadKind::Softermax;
    bool bias_in_head = false;

    void validate() const;
};

std::string train_config_to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const std::string& text);

struct TrainReport {
    // Index 0 is the initial-state evaluation; entry e is after epoch e.
    std::vector<double> epoch_loss;
    std::vector<double> train_accuracy;
    std::vector<double> test_accuracy;
    double final_train_accuracy = 0.0;
    double final_test_accuracy = 0.0;
    double wall_clock_seconds = 0.0;
    std::uint64_t seed = 0;
};

std::string train_report_to_json(const TrainReport& r);
// CSV stream: epoch,loss,train_acc,test_acc
std::string train_report_to_csv(const TrainReport& r);

// In-place update kernels shared by the trainer and the standalone op.
void sgd_update(std::span<double> value, std::span<const double> grad,
                std::span<double> velocity, double lr, double momentum);
void adam_update(std::span<double> value, std::span<const double> grad,
                 std::span<double> m, std::span<double> v, std::uint64_t step,
                 double lr, double beta1, double beta2, double eps);

struct OptimizerState {
    std::vector<std::vector<double>> slot1;  // velocity (SGD) or m (Adam)
    std::vector<std::vector<double>> slot2;  // v (Adam)
    std::uint64_t step = 0;
};

// One update over a model's parameter tensors. The state is sized lazily on
// first use and must stay paired with the same tensor list.
void optimizer_step(std::vector<ParamTensor>& params, OptimizerState& state,
                    const TrainConfig& config);

// Total objective for a batch: cross-entropy plus lambda * sum of
// e_regularizer penalties over yat kernels. Forward only.
double composed_loss(Model& model, const Matrix& x, std::span<const int> labels,
                     double lambda, bool training, RngState& rng);
// Same, and fills gradient buffers.
double composed_loss_and_grad(Model& model, const Matrix& x,
                              std::span<const int> labels, double lambda,
                              bool training, RngState& rng);

double accuracy(Model& model, const Dataset& ds, std::size_t eval_batch = 256);

struct TrainOutput {
    std::unique_ptr<Model> model;
    TrainReport report;
};

// Deterministic training loop driven entirely by config.seed. Aborts with
// NumericError naming the first non-finite tensor if the loss diverges.
TrainOutput train_model(const ModelConfig& model_config, const Dataset& train_set,
                        const Dataset& test_set, const TrainConfig& config);

struct XorSolution {
    std::vector<double> weights;       // 2 entries
    double bias = 0.0;
    double mse = 0.0;
    double accuracy = 0.0;             // threshold 0.5 over the 4 points
    std::array<double, 4> outputs{};   // neuron outputs on the XOR points
    Matrix decision_grid;              // 400 x 400 outputs over [-0.5,1.5]^2
};

// Fits one E-neuron (2 weights + bias, no scale) to XOR under MSE by plain
// gradient descent (lr 0.05, 5000 steps) with random restarts.
XorSolution solve_xor(int restarts, RngState& rng, bool with_grid = true);

inline constexpr double kXorGridLow = -0.5;
inline constexpr double kXorGridHigh = 1.5;
inline constexpr std::size_t kXorGridSize = 400;

}  // namespace yatnn
