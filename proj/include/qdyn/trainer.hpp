#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qdyn/dataset.hpp"
#include "qdyn/model.hpp"

namespace qdyn {

// Adam optimizer state. Only the learning rate was published; the moment
// decay constants and epsilon follow the algorithm's standard presentation
// and are stored in checkpoints so resumed runs see the same values.
struct AdamState {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps_hat = 1e-8;
    std::int64_t step = 0;
    std::map<std::string, Tensor> m;
    std::map<std::string, Tensor> v;

    // Zero moments shaped like the model's parameter registry.
    static AdamState for_model(const TransformerForecaster& model, double lr = 1e-4);
};

struct TrainPlan {
    int batch_size = 128;
    int max_epochs = 0;
    std::uint64_t shuffle_seed = 0;
    double lr = 1e-4;
    bool deterministic = false;
    int jobs = 1;
    // Best checkpoint is persisted here on every validation improvement;
    // empty disables persistence.
    std::filesystem::path checkpoint_path;
    // Per-epoch CSV log (epoch,train_mse,val_mse,seconds); empty disables.
    std::filesystem::path log_path;
};

struct Checkpoint {
    ModelConfig cfg;
    std::map<std::string, Tensor> params;
    std::optional<AdamState> adam;
    double best_val_mse = std::numeric_limits<double>::infinity();
    int epoch = 0;

    TransformerForecaster to_model() const { return {cfg, params}; }
};

struct EpochRecord {
    int epoch = 0;
    double train_mse = 0.0;
    double val_mse = 0.0;
    double seconds = 0.0;
};

struct TrainResult {
    Checkpoint best;
    std::vector<EpochRecord> trace;
    // Total optimizer updates applied: ceil(N_train/batch) per epoch.
    std::int64_t adam_steps = 0;
};

double mse_loss(std::span<const double> preds, std::span<const double> labels);

// One bias-corrected Adam update applied in place.
void adam_step(std::map<std::string, Tensor>& weights, const GradMap& grads, AdamState& state);

// Seeded-shuffle minibatch training with one Adam step per batch (batch
// gradient = mean over its samples). Validation MSE is evaluated at epoch 0
// and after every epoch; the best weights seen are returned and persisted.
TrainResult train(TransformerForecaster model, const std::vector<WindowedSample>& train_set,
                  const std::vector<WindowedSample>& val_set, const TrainPlan& plan);

// train() warm-started from checkpoint weights with fresh Adam moments.
// Refuses a checkpoint whose config differs from the expected one.
TrainResult transfer_retrain(const Checkpoint& checkpoint, const ModelConfig& expected_cfg,
                             const std::vector<WindowedSample>& train_set,
                             const std::vector<WindowedSample>& val_set, const TrainPlan& plan);

// Model predictions for a set of windows (no gradients kept).
std::vector<double> predict_batch(const TransformerForecaster& model,
                                  const std::vector<WindowedSample>& samples);

std::string describe(const ModelConfig& cfg);

}  // namespace qdyn
