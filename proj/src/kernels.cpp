#include "machan/kernels.hpp"

#include <cstdlib>
#include <exception>
#include <string>

#include <omp.h>

namespace machan {

int apply_thread_limit_from_env() {
    if (const char *env = std::getenv("MACHAN_THREADS")) {
        char *end = nullptr;
        long n = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && n > 0) omp_set_num_threads(static_cast<int>(n));
    }
    return omp_get_max_threads();
}

namespace {

// Runs f(i) for i in [0, n); the first exception (by index) is rethrown.
template <typename F>
void for_each_index(std::size_t n, Execution exec, F f) {
    if (exec == Execution::serial) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::vector<std::exception_ptr> errors(n);
    const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
        try {
            f(static_cast<std::size_t>(i));
        } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
    }
    for (auto &e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace

BatchGradient batch_gradients(std::span<const VolumeSequence> batch, const ModelParams &params, Execution exec) {
    if (batch.empty()) throw std::invalid_argument("empty batch");
    std::vector<SequenceGradient> slots(batch.size());
    for_each_index(batch.size(), exec, [&](std::size_t i) { slots[i] = loss_and_gradients(batch[i], params); });

    BatchGradient out;
    out.grads = ad::Gradients::zeros_like(params.set);
    out.losses.reserve(batch.size());
    double total = 0.0;
    for (auto &s : slots) {
        out.grads.add(s.grads);
        out.losses.push_back(s.loss);
        total += s.loss;
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    out.grads.scale(inv);
    out.mean_loss = total * inv;
    return out;
}

std::vector<Prediction> predict_all(std::span<const VolumeSequence> sequences, const ModelParams &params,
                                    Execution exec) {
    std::vector<Prediction> out(sequences.size());
    for_each_index(sequences.size(), exec, [&](std::size_t i) { out[i] = forward(sequences[i], params); });
    return out;
}

std::vector<VolumeSequence> pool_all(std::span<const RawVideoRecord> records, double target_fps,
                                     const VolumeConfig &cfg, Execution exec) {
    std::vector<VolumeSequence> out(records.size());
    for_each_index(records.size(), exec,
                   [&](std::size_t i) { out[i] = pool_volumes(downsample(records[i], target_fps), cfg); });
    return out;
}

}  // namespace machan
