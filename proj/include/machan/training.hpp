#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "machan/autodiff.hpp"
#include "machan/kernels.hpp"
#include "machan/model.hpp"

namespace machan {

struct TrainConfig {
    double learning_rate = 1e-3;
    double rmsprop_decay = 0.9;
    double epsilon = 1e-8;
    double clip_norm = 5.0;
    std::size_t epochs = 50;
    std::size_t batch_size = 16;
    std::size_t patience = 10;  // epochs without val improvement; 0 disables early stopping
    std::uint64_t seed = 0;     // parameter init and batch order
    bool shuffle = true;
    std::size_t soft_warmup_epochs = 0;  // hard fusion only: extra leading epochs trained in soft mode
    Execution execution = Execution::parallel;

    void validate() const;
};

nlohmann::json train_config_to_json(const TrainConfig &cfg);
/// Unknown keys are rejected.
TrainConfig train_config_from_json(const nlohmann::json &j);

/// Running second moment per parameter.
struct OptState {
    std::vector<Tensor> second_moment;
    static OptState zeros_like(const ad::ParamSet &params);
};

/// v' = decay v + (1 - decay) g^2;  p' = p - lr g / (sqrt(v') + eps).
void rmsprop_update(Tensor &param, const Tensor &grad, Tensor &v, const TrainConfig &cfg);
void rmsprop_update(ad::ParamSet &params, const ad::Gradients &grads, OptState &state, const TrainConfig &cfg);

/// Rescales every gradient by max_norm / |g| when the global L2 norm
/// exceeds max_norm. Returns the norm before clipping.
double clip_gradients(ad::Gradients &grads, double max_norm);

struct EpochStats {
    std::size_t epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;
    std::optional<double> val_rho;
    bool warmup = false;
};

struct TrainReport {
    std::vector<EpochStats> epochs;
    std::size_t best_epoch = 0;
    double best_val_loss = 0.0;
    std::size_t updates = 0;
    double wall_seconds = 0.0;

    nlohmann::json to_json() const;
};

class TrainingDiverged : public std::runtime_error {
public:
    TrainingDiverged(const std::string &what, TrainReport report)
        : std::runtime_error(what), report_(std::move(report)) {}
    const TrainReport &report() const noexcept { return report_; }

private:
    TrainReport report_;
};

struct TrainResult {
    ModelParams params;  // from the epoch with the lowest val MSE
    TrainReport report;
};

using EpochCallback = std::function<void(const EpochStats &)>;

/// Minibatch RMSProp on squared error. Labels are used as given, so
/// normalize them first. Throws TrainingDiverged on a non-finite loss.
TrainResult train(std::span<const VolumeSequence> train_set, std::span<const VolumeSequence> val_set,
                  const ModelConfig &model_cfg, const TrainConfig &cfg, const EpochCallback &on_epoch = {});

/// Same, starting from the given parameters.
TrainResult train_from(ModelParams initial, std::span<const VolumeSequence> train_set,
                       std::span<const VolumeSequence> val_set, const TrainConfig &cfg,
                       const EpochCallback &on_epoch = {});

}  // namespace machan
