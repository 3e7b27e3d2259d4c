#include "machan/training.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "machan/evaluation.hpp"

namespace machan {

using nlohmann::json;

void TrainConfig::validate() const {
    if (!(learning_rate >= 0.0)) throw std::invalid_argument("learning_rate must be non-negative");
    if (!(rmsprop_decay > 0.0 && rmsprop_decay < 1.0)) throw std::invalid_argument("rmsprop_decay must be in (0, 1)");
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
    if (!(clip_norm > 0.0)) throw std::invalid_argument("clip_norm must be positive");
    if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
}

json train_config_to_json(const TrainConfig &cfg) {
    return {
        {"learning_rate", cfg.learning_rate}, {"rmsprop_decay", cfg.rmsprop_decay},
        {"epsilon", cfg.epsilon},             {"clip_norm", cfg.clip_norm},
        {"epochs", cfg.epochs},               {"batch_size", cfg.batch_size},
        {"patience", cfg.patience},           {"seed", cfg.seed},
        {"shuffle", cfg.shuffle},             {"soft_warmup_epochs", cfg.soft_warmup_epochs},
    };
}

TrainConfig train_config_from_json(const json &j) {
    if (!j.is_object()) throw std::invalid_argument("training config must be a JSON object");
    TrainConfig cfg;
    for (const auto &[key, value] : j.items()) {
        if (key == "learning_rate") cfg.learning_rate = value.get<double>();
        else if (key == "rmsprop_decay") cfg.rmsprop_decay = value.get<double>();
        else if (key == "epsilon") cfg.epsilon = value.get<double>();
        else if (key == "clip_norm") cfg.clip_norm = value.get<double>();
        else if (key == "epochs") cfg.epochs = value.get<std::size_t>();
        else if (key == "batch_size") cfg.batch_size = value.get<std::size_t>();
        else if (key == "patience") cfg.patience = value.get<std::size_t>();
        else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
        else if (key == "shuffle") cfg.shuffle = value.get<bool>();
        else if (key == "soft_warmup_epochs") cfg.soft_warmup_epochs = value.get<std::size_t>();
        else throw std::invalid_argument("unknown training config key " + key);
    }
    cfg.validate();
    return cfg;
}

OptState OptState::zeros_like(const ad::ParamSet &params) {
    OptState s;
    for (std::size_t i = 0; i < params.size(); ++i) s.second_moment.emplace_back(params[i].shape());
    return s;
}

void rmsprop_update(Tensor &param, const Tensor &grad, Tensor &v, const TrainConfig &cfg) {
    if (param.shape() != grad.shape() || param.shape() != v.shape())
        throw DimensionError("rmsprop_update: shapes differ " + to_string(param.shape()) + ", " +
                             to_string(grad.shape()) + ", " + to_string(v.shape()));
    auto p = param.values();
    auto g = grad.values();
    auto m = v.values();
    for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] = cfg.rmsprop_decay * m[i] + (1.0 - cfg.rmsprop_decay) * g[i] * g[i];
        p[i] -= cfg.learning_rate * g[i] / (std::sqrt(m[i]) + cfg.epsilon);
    }
    param.check_finite("rmsprop_update");
}

void rmsprop_update(ad::ParamSet &params, const ad::Gradients &grads, OptState &state, const TrainConfig &cfg) {
    if (grads.size() != params.size() || state.second_moment.size() != params.size())
        throw DimensionError("rmsprop_update: parameter, gradient and state counts differ");
    for (std::size_t i = 0; i < params.size(); ++i) rmsprop_update(params[i], grads[i], state.second_moment[i], cfg);
}

double clip_gradients(ad::Gradients &grads, double max_norm) {
    if (!(max_norm > 0.0)) throw std::invalid_argument("clip norm must be positive");
    const double norm = grads.l2_norm();
    if (norm > max_norm) grads.scale(max_norm / norm);
    return norm;
}

json TrainReport::to_json() const {
    json epochs_json = json::array();
    for (const auto &e : epochs) {
        json row = {{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_loss", e.val_loss}, {"warmup", e.warmup}};
        row["val_rho"] = e.val_rho ? json(*e.val_rho) : json(nullptr);
        epochs_json.push_back(row);
    }
    return {{"epochs", epochs_json},
            {"best_epoch", best_epoch},
            {"best_val_loss", best_val_loss},
            {"updates", updates},
            {"wall_seconds", wall_seconds}};
}

namespace {

double mean_squared_error(std::span<const VolumeSequence> data, const ModelParams &params, Execution exec,
                          std::optional<double> *rho = nullptr) {
    auto report = evaluate(params, data, "", "", 0, exec);
    if (rho) *rho = report.rho;
    return report.mse;
}

}  // namespace

TrainResult train(std::span<const VolumeSequence> train_set, std::span<const VolumeSequence> val_set,
                  const ModelConfig &model_cfg, const TrainConfig &cfg, const EpochCallback &on_epoch) {
    return train_from(init_params(model_cfg, cfg.seed), train_set, val_set, cfg, on_epoch);
}

TrainResult train_from(ModelParams initial, std::span<const VolumeSequence> train_set,
                       std::span<const VolumeSequence> val_set, const TrainConfig &cfg,
                       const EpochCallback &on_epoch) {
    cfg.validate();
    if (train_set.empty() || val_set.empty()) throw std::invalid_argument("train and val splits must be non-empty");

    const auto started = std::chrono::steady_clock::now();
    TrainResult result{initial, {}};
    ModelParams current = std::move(initial);
    OptState opt = OptState::zeros_like(current.set);
    auto &report = result.report;
    report.best_val_loss = std::numeric_limits<double>::infinity();

    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<VolumeSequence> batch;

    auto finish = [&] {
        report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    };

    const FusionMode target = current.config.fusion;
    const bool hard = target == FusionMode::hard || target == FusionMode::hard_surrogate;
    const std::size_t warmup = hard ? cfg.soft_warmup_epochs : 0;
    result.params.config.fusion = target;

    try {
        for (std::size_t epoch = 1; epoch <= warmup + cfg.epochs; ++epoch) {
            const bool warming = epoch <= warmup;
            current.config.fusion = warming ? FusionMode::soft : target;
            if (cfg.shuffle) {
                for (std::size_t i = order.size() - 1; i > 0; --i) {
                    std::uniform_int_distribution<std::size_t> pick(0, i);
                    std::swap(order[i], order[pick(rng)]);
                }
            }
            for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
                batch.clear();
                for (std::size_t k = start; k < std::min(start + cfg.batch_size, order.size()); ++k)
                    batch.push_back(train_set[order[k]]);
                auto bg = batch_gradients(batch, current, cfg.execution);
                if (!std::isfinite(bg.mean_loss)) throw NonFiniteError("non-finite batch loss");
                clip_gradients(bg.grads, cfg.clip_norm);
                rmsprop_update(current.set, bg.grads, opt, cfg);
                ++report.updates;
            }

            EpochStats stats;
            stats.epoch = epoch;
            stats.warmup = warming;
            stats.train_loss = mean_squared_error(train_set, current, cfg.execution);
            stats.val_loss = mean_squared_error(val_set, current, cfg.execution, &stats.val_rho);
            if (!std::isfinite(stats.train_loss) || !std::isfinite(stats.val_loss))
                throw NonFiniteError("non-finite epoch loss");
            report.epochs.push_back(stats);
            if (on_epoch) on_epoch(stats);

            if (warming) {
                result.params = current;
                result.params.config.fusion = target;
            } else if (stats.val_loss < report.best_val_loss) {
                report.best_val_loss = stats.val_loss;
                report.best_epoch = epoch;
                result.params = current;
            } else if (cfg.patience > 0 && epoch - report.best_epoch >= cfg.patience) {
                break;
            }
        }
    } catch (const NonFiniteError &e) {
        finish();
        throw TrainingDiverged(std::string("training diverged: ") + e.what(), report);
    }
    finish();
    return result;
}

}  // namespace machan
