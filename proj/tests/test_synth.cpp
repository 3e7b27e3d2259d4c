#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "machan/synth.hpp"

using namespace machan;

namespace {

std::string slurp(const std::filesystem::path &p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::filesystem::path scratch(const std::string &name) {
    auto dir = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(dir);
    return dir;
}

// Independent label: walk modes and dot the active step with the readout.
double direct_label(const VolumeSequence &seq, const std::vector<int> &modes, const std::vector<double> &w) {
    double total = 0.0;
    for (std::size_t t = 0; t < modes.size(); ++t) {
        const auto &ch = seq.channels[static_cast<std::size_t>(modes[t])];
        for (std::size_t i = 0; i < ch.dim; ++i) total += ch.data[t * ch.dim + i] * w[i];
    }
    return total / static_cast<double>(modes.size());
}

}  // namespace

TEST(Synth, LabelsMatchOracle) {
    SynthConfig cfg;
    cfg.videos = 60;
    cfg.seed = 3;
    cfg.absent_prob = 0.2;
    auto data = generate(cfg);
    ASSERT_EQ(data.sequences.size(), 60u);
    for (std::size_t i = 0; i < data.sequences.size(); ++i) {
        const auto &s = data.sequences[i];
        EXPECT_NEAR(s.y, oracle_label(s, data.modes[i], data.readout), 1e-12);
        EXPECT_NEAR(s.y, direct_label(s, data.modes[i], data.readout), 1e-12);
    }
}

TEST(Synth, SingleStepIsOneInnerProduct) {
    VolumeSequence s;
    s.channels[0].dim = 2;
    s.channels[1].dim = 2;
    s.channels[2].dim = 2;
    s.channels[0].push(std::vector<double>{9.0, 9.0});
    s.channels[1].push(std::vector<double>{2.0, -3.0});
    s.channels[2].push(std::vector<double>{7.0, 7.0});
    std::vector<int> modes{1};
    std::vector<double> w{0.5, 2.0};
    EXPECT_EQ(oracle_label(s, modes, w), 1.0 - 6.0);
}

TEST(Synth, NoiseFreeMarkerOnly) {
    SynthConfig cfg;
    cfg.videos = 10;
    cfg.sigma = 0.0;
    cfg.signal = 0.0;
    cfg.readout = {0.75, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
    auto data = generate(cfg);
    for (const auto &s : data.sequences) EXPECT_EQ(s.y, cfg.marker * 0.75);
}

TEST(Synth, ActiveChannelIdentifiableAtZeroNoise) {
    SynthConfig cfg;
    cfg.videos = 20;
    cfg.sigma = 0.0;
    cfg.seed = 4;
    auto data = generate(cfg);
    for (std::size_t i = 0; i < data.sequences.size(); ++i)
        for (std::size_t t = 0; t < data.modes[i].size(); ++t)
            for (std::size_t c = 0; c < kChannelCount; ++c) {
                const auto &ch = data.sequences[i].channels[c];
                const bool active = static_cast<int>(c) == data.modes[i][t];
                if (!active)
                    for (std::size_t k = 0; k < ch.dim; ++k) EXPECT_EQ(ch.data[t * ch.dim + k], 0.0);
                else
                    EXPECT_NE(ch.data[t * ch.dim], 0.0);
            }
}

TEST(Synth, SegmentsRespectBoundsAndSwitch) {
    SynthConfig cfg;
    cfg.videos = 100;
    cfg.seed = 5;
    auto data = generate(cfg);
    for (const auto &modes : data.modes) {
        ASSERT_GE(modes.size(), cfg.t_min);
        ASSERT_LE(modes.size(), cfg.t_max);
        std::size_t run = 1;
        for (std::size_t t = 1; t <= modes.size(); ++t) {
            if (t < modes.size() && modes[t] == modes[t - 1]) {
                ++run;
                continue;
            }
            EXPECT_GE(run, cfg.segment_min);
            EXPECT_LE(run, cfg.segment_max);
            run = 1;
        }
    }
}

TEST(Synth, DirectionsAreUnitVectors) {
    auto data = generate(SynthConfig{});
    for (const auto &u : data.directions) {
        double n = 0.0;
        for (double v : u) n += v * v;
        EXPECT_NEAR(n, 1.0, 1e-12);
    }
}

TEST(Synth, SameSeedByteIdenticalFiles) {
    SynthConfig cfg;
    cfg.videos = 15;
    cfg.seed = 11;
    auto a = scratch("machan_synth_a"), b = scratch("machan_synth_b");
    write_synth(a, generate(cfg), 3);
    write_synth(b, generate(cfg), 3);
    for (const char *f : {"dataset.jsonl", "labels.jsonl", "modes.jsonl", "frames.jsonl"}) {
        ASSERT_TRUE(std::filesystem::exists(a / f)) << f;
        EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    }
    cfg.seed = 12;
    auto c = scratch("machan_synth_c");
    write_synth(c, generate(cfg));
    EXPECT_NE(slurp(a / "labels.jsonl"), slurp(c / "labels.jsonl"));
    EXPECT_FALSE(std::filesystem::exists(c / "frames.jsonl"));
    for (auto &d : {a, b, c}) std::filesystem::remove_all(d);
}

TEST(Synth, WrittenFilesLoadBack) {
    SynthConfig cfg;
    cfg.videos = 8;
    cfg.seed = 2;
    auto data = generate(cfg);
    auto dir = scratch("machan_synth_load");
    write_synth(dir, data);
    auto seqs = load_volume_cache(dir / "dataset.jsonl");
    auto modes = load_modes(dir / "modes.jsonl");
    auto labels = load_labels(dir / "labels.jsonl");
    ASSERT_EQ(seqs.size(), 8u);
    for (std::size_t i = 0; i < seqs.size(); ++i) {
        EXPECT_EQ(modes.at(seqs[i].id), data.modes[i]);
        EXPECT_EQ(labels.at(seqs[i].id), data.sequences[i].y);
        EXPECT_EQ(seqs[i].channels[0].data, data.sequences[i].channels[0].data);
    }
    std::filesystem::remove_all(dir);
}

TEST(Synth, PermutingInactiveChannelsKeepsLabel) {
    SynthConfig cfg;
    cfg.videos = 20;
    cfg.dims = {4, 4, 4};
    cfg.seed = 6;
    auto data = generate(cfg);
    std::mt19937_64 rng(7);
    for (std::size_t i = 0; i < data.sequences.size(); ++i) {
        auto s = data.sequences[i];
        for (std::size_t t = 0; t < data.modes[i].size(); ++t) {
            const int a = data.modes[i][t];
            const std::size_t x = static_cast<std::size_t>((a + 1) % 3), y = static_cast<std::size_t>((a + 2) % 3);
            for (std::size_t k = 0; k < 4; ++k) std::swap(s.channels[x].data[t * 4 + k], s.channels[y].data[t * 4 + k]);
        }
        EXPECT_EQ(oracle_label(s, data.modes[i], data.readout), data.sequences[i].y);
    }
}

TEST(Synth, ValidateRejectsBadConfig) {
    SynthConfig cfg;
    cfg.dims = {1, 4, 4};
    EXPECT_THROW(generate(cfg), std::invalid_argument);
    cfg = {};
    cfg.sigma = -0.1;
    EXPECT_THROW(generate(cfg), std::invalid_argument);
    cfg = {};
    cfg.segment_min = 0;
    EXPECT_THROW(generate(cfg), std::invalid_argument);
}

// --- score_attention -----------------------------------------------------------

namespace {

AttentionTrace trace_of(const std::vector<int> &selected) {
    AttentionTrace tr;
    for (int s : selected) {
        TraceStep row;
        row.selected = s;
        row.dropped = s < 0;
        tr.steps.push_back(row);
    }
    return tr;
}

}  // namespace

TEST(ScoreAttention, PerfectTrace) {
    std::vector<int> modes{0, 0, 1, 2, 2};
    EXPECT_EQ(score_attention(trace_of(modes), modes), 1.0);
}

TEST(ScoreAttention, DroppedStepsIgnored) {
    std::vector<int> modes{0, 1, 1, 2};
    EXPECT_EQ(score_attention(trace_of({0, -1, 2, 2}), modes), 2.0 / 3.0);
}

TEST(ScoreAttention, ChanceLevelForRandomSelection) {
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> c(0, 2);
    std::vector<int> modes(30000), sel(30000);
    for (std::size_t i = 0; i < modes.size(); ++i) {
        modes[i] = c(rng);
        sel[i] = c(rng);
    }
    EXPECT_NEAR(score_attention(trace_of(sel), modes), 1.0 / 3.0, 0.01);
}

TEST(ScoreAttention, Errors) {
    std::vector<int> modes{0, 1};
    EXPECT_THROW(score_attention(trace_of({0}), modes), std::invalid_argument);
    EXPECT_THROW(score_attention(trace_of({-1, -1}), modes), std::invalid_argument);
}

TEST(ScoreAttention, PooledWeightsStepsEqually) {
    std::vector<AttentionTrace> traces{trace_of({0, 0, 0, 0}), trace_of({1, 2})};
    std::vector<std::vector<int>> modes{{0, 0, 0, 0}, {2, 2}};
    EXPECT_NEAR(score_attention(traces, modes), 5.0 / 6.0, 1e-15);
}
