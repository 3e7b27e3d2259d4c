// Serial reference vs OpenMP path for the per-sequence kernels.

#include <benchmark/benchmark.h>

#include <random>

#include "machan/kernels.hpp"
#include "machan/synth.hpp"

using namespace machan;

namespace {

const std::vector<VolumeSequence> &dataset() {
    static const auto data = [] {
        SynthConfig cfg;
        cfg.videos = 64;
        cfg.seed = 1;
        return generate(cfg).sequences;
    }();
    return data;
}

ModelParams params(FusionMode mode) {
    ModelConfig cfg;
    cfg.input_dims = {8, 4, 4};
    cfg.align_dim = 32;
    cfg.attention_dim = 16;
    cfg.state_dim = 32;
    cfg.fusion = mode;
    return init_params(cfg, 7);
}

const std::vector<RawVideoRecord> &records() {
    static const auto recs = [] {
        std::mt19937_64 rng(3);
        std::normal_distribution<double> n(0.0, 1.0);
        std::vector<RawVideoRecord> out(32);
        for (std::size_t r = 0; r < out.size(); ++r) {
            out[r].id = "r" + std::to_string(r);
            out[r].fps = 25.0;
            for (auto &ch : out[r].channels) {
                ch.dim = 64;
                std::vector<double> v(64);
                for (int f = 0; f < 2000; ++f) {
                    for (auto &x : v) x = n(rng);
                    ch.push(v);
                }
            }
        }
        return out;
    }();
    return recs;
}

Execution exec_of(const benchmark::State &state) {
    return state.range(0) ? Execution::parallel : Execution::serial;
}

}  // namespace

static void BM_BatchGradients(benchmark::State &state) {
    auto p = params(FusionMode::hard);
    const auto exec = exec_of(state);
    for (auto _ : state) benchmark::DoNotOptimize(batch_gradients(dataset(), p, exec).mean_loss);
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(dataset().size()));
}
BENCHMARK(BM_BatchGradients)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

static void BM_PredictAll(benchmark::State &state) {
    auto p = params(FusionMode::soft);
    const auto exec = exec_of(state);
    for (auto _ : state) benchmark::DoNotOptimize(predict_all(dataset(), p, exec).size());
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(dataset().size()));
}
BENCHMARK(BM_PredictAll)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

static void BM_PoolAll(benchmark::State &state) {
    const auto exec = exec_of(state);
    for (auto _ : state) benchmark::DoNotOptimize(pool_all(records(), 5.0, {}, exec).size());
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(records().size()));
}
BENCHMARK(BM_PoolAll)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

int main(int argc, char **argv) {
    apply_thread_limit_from_env();
    dataset();
    records();
    benchmark::Initialize(&argc, argv);
    if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
    benchmark::RunSpecifiedBenchmarks();
    benchmark::Shutdown();
    return 0;
}
