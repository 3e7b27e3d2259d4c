#pragma once

// Data-parallel kernels over independent sequences/records.
//
// Each kernel has a serial reference and an OpenMP path. Per-item results
// are written to fixed slots and reduced in index order, so both paths
// produce bit-identical output.

#include <span>
#include <vector>

#include "machan/autodiff.hpp"
#include "machan/model.hpp"
#include "machan/pooling.hpp"
#include "machan/records.hpp"

namespace machan {

enum class Execution { serial, parallel };

/// Caps OpenMP threads at MACHAN_THREADS when that variable is set to a
/// positive integer. Returns the resulting limit.
int apply_thread_limit_from_env();

struct BatchGradient {
    std::vector<double> losses;  // per sequence, (prediction - y)^2
    double mean_loss = 0.0;
    ad::Gradients grads;         // mean over the batch
};

BatchGradient batch_gradients(std::span<const VolumeSequence> batch, const ModelParams &params, Execution exec);

std::vector<Prediction> predict_all(std::span<const VolumeSequence> sequences, const ModelParams &params,
                                    Execution exec);

/// Downsample to target_fps, then volume-pool every record.
std::vector<VolumeSequence> pool_all(std::span<const RawVideoRecord> records, double target_fps,
                                     const VolumeConfig &cfg, Execution exec);

}  // namespace machan
