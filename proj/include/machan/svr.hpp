#pragma once

// Linear epsilon-insensitive support vector regression trained by
// stochastic subgradient descent on
//   (lambda/2)|w|^2 + (1/N) sum_i max(0, |y_i - w.x_i - b| - epsilon).

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace machan {

struct SvrConfig {
    double epsilon = 0.1;
    double lambda = 1e-4;
    std::size_t steps = 2000;
    double learning_rate = 0.1;  // step t uses learning_rate / sqrt(t + 1)
    std::size_t batch_size = 0;  // 0 = full batch
    std::uint64_t seed = 0;

    void validate() const;
};

struct SvrParams {
    std::vector<double> w;
    double b = 0.0;
};

using FeatureMatrix = std::vector<std::vector<double>>;

double svr_predict(const SvrParams &params, std::span<const double> x);

double svr_objective(const SvrParams &params, const FeatureMatrix &x, std::span<const double> y,
                     const SvrConfig &cfg);

/// Returns the running average of the iterates. The bias starts at the
/// median target. If `trajectory` is given, the averaged iterate's
/// objective is appended every `record_every` steps.
SvrParams svr_train(const FeatureMatrix &x, std::span<const double> y, const SvrConfig &cfg,
                    std::vector<double> *trajectory = nullptr, std::size_t record_every = 100);

void save_svr(const std::filesystem::path &path, const SvrParams &params);
SvrParams load_svr(const std::filesystem::path &path);

}  // namespace machan
