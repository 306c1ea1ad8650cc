#pragma once

// Loss functions, per-sample SGD with l1/l2 penalties, the epoch loop, and
// stratified k-fold cross-validation.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "flowpat/data.hpp"
#include "flowpat/eval.hpp"
#include "flowpat/mlp.hpp"

namespace flowpat {

enum class LossKind : std::uint8_t { MeanSquaredError, CrossEntropySoftmax };

struct TrainConfig {
    double learning_rate = 0.01;
    std::size_t epochs = 500;
    double l1_weight = 1e-5;
    double l2_weight = 1e-5;
    LossKind loss = LossKind::MeanSquaredError;
    std::uint64_t seed = 0;
    std::size_t nfolds = 10;
    bool shuffle_each_epoch = true;
    /// When set, epoch e uses learning_rate / (1 + e/epochs).
    bool lr_time_decay = false;
    /// Hidden layout used when a topology is built from this config.
    std::vector<std::size_t> hidden_topology = {25, 25, 25};

    void validate() const; // throws ValidationError
};

/// Parses the flat "key = value" configuration format. Unknown keys are
/// rejected; all keys are optional. Keys: learning_rate, epochs, l1, l2,
/// loss (mse | cross_entropy), seed, nfolds, hidden_topology (comma list).
TrainConfig parse_config_text(std::string_view content);
TrainConfig load_config(const std::filesystem::path& path);

/// Unit basis vector of the label's class index.
std::vector<double> one_hot(FlowLabel label, const LabelScheme& scheme);

/// loss = (1/k) sum (output - target)^2; gradient (2/k)(output - target)
/// written to grad. Returns the loss.
double mse_loss(std::span<const double> output, std::span<const double> target,
                std::span<double> grad);

/// Softmax cross-entropy against a one-hot target, log-sum-exp stabilized;
/// gradient is softmax(output) - target.
double cross_entropy_softmax_loss(std::span<const double> output,
                                  std::span<const double> target,
                                  std::span<double> grad);

/// w <- w - lr*(g + l1*sign(w) + 2*l2*w) for weights; b <- b - lr*g for
/// biases (penalties apply to weights only; sign(0) = 0).
void sgd_step(Model& model, const Gradients& grads, const TrainConfig& config);

struct TrainReport {
    Model model;
    std::vector<double> epoch_loss;          // mean per-sample data loss
    std::vector<double> validation_accuracy; // empty without a validation set
};

/// Runs config.epochs passes of per-sample SGD over the (standardized)
/// training set in seeded-shuffled order. Throws DivergenceError on the
/// first non-finite loss.
TrainReport train(Model model, const Dataset& train_set, const TrainConfig& config,
                  const Dataset* validation_set = nullptr);

struct CvResult {
    std::vector<ConfusionMatrix> per_fold;
    ConfusionMatrix pooled; // cell-wise sum; total equals the dataset size
};

/// Stratified k-fold cross-validation on a raw (unstandardized) dataset.
/// Each fold standardizes on its training part only, trains a fresh model
/// with seed config.seed + fold, and evaluates the held-out fold. Folds run
/// in parallel; results are identical to serial execution.
CvResult k_fold_cv(const Dataset& ds, const Topology& topology,
                   const TrainConfig& config);

} // namespace flowpat
