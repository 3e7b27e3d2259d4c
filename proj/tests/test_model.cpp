#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "machan/grad_check.hpp"
#include "machan/model.hpp"
#include "reference_model.hpp"

using namespace machan;
using namespace machan::testing;

namespace {

void randomize(ModelParams &p, std::mt19937_64 &rng, double scale = 0.5) {
    std::uniform_real_distribution<double> u(-scale, scale);
    for (std::size_t id = 0; id < p.set.size(); ++id)
        for (auto &v : p.set[id].values()) v = u(rng);
}

ModelParams random_params(const ModelConfig &cfg, std::uint64_t seed, double scale = 0.5) {
    std::mt19937_64 rng(seed);
    auto p = ModelParams::zeros(cfg);
    randomize(p, rng, scale);
    return p;
}

ad::GradCheckReport check_model(const ModelParams &params, const VolumeSequence &seq) {
    return ad::grad_check(
        [&](ad::Tape &tape, const ad::ParamSet &values) {
            auto bp = bind(tape, params, values);
            return build_loss(tape, bp, seq);
        },
        params.set);
}

}  // namespace

// --- init ----------------------------------------------------------------------

TEST(InitParams, SameSeedIsBitIdentical) {
    auto cfg = small_config(FusionMode::hard);
    EXPECT_EQ(init_params(cfg, 7).set, init_params(cfg, 7).set);
    EXPECT_NE(init_params(cfg, 7).set, init_params(cfg, 8).set);
}

TEST(InitParams, GlorotBoundForPaperScale) {
    EXPECT_NEAR(glorot_bound(4096, 1024), std::sqrt(6.0 / 5120.0), 1e-15);
    EXPECT_NEAR(glorot_bound(4096, 1024), 0.03423, 5e-6);
}

TEST(InitParams, WeightsWithinBoundBiasesZeroForgetOne) {
    ModelConfig cfg;
    cfg.input_dims = {40, 20, 10};
    cfg.align_dim = 16;
    cfg.attention_dim = 8;
    cfg.state_dim = 6;
    auto p = init_params(cfg, 1);
    for (std::size_t id = 0; id < p.set.size(); ++id) {
        const auto &name = p.set.name(id);
        const auto &t = p.set[id];
        if (name.ends_with(".bias")) {
            const double expect = name == "lstm.forget.bias" ? 1.0 : 0.0;
            for (double v : t.values()) EXPECT_EQ(v, expect) << name;
        } else {
            const double bound = glorot_bound(t.shape()[0], t.rank() == 2 ? t.shape()[1] : 1);
            for (double v : t.values()) EXPECT_LE(std::abs(v), bound) << name;
        }
    }
}

TEST(InitParams, ShapesFollowConfig) {
    ModelConfig cfg;
    cfg.input_dims = {7, 5, 3};
    cfg.align_dim = 6;
    cfg.attention_dim = 4;
    cfg.state_dim = 5;
    auto p = ModelParams::zeros(cfg);
    EXPECT_EQ(p.set[p.ids.align_weight[0]].shape(), (Shape{7, 6}));
    EXPECT_EQ(p.set[p.ids.align_weight[2]].shape(), (Shape{3, 6}));
    EXPECT_EQ(p.set[p.ids.state_weight].shape(), (Shape{5, 6}));
    EXPECT_EQ(p.set[p.ids.attn_weight].shape(), (Shape{6, 4}));
    EXPECT_EQ(p.set[p.ids.score_weight].shape(), (Shape{16, 3}));
    EXPECT_EQ(p.set[p.ids.gate_input[0]].shape(), (Shape{6, 5}));
    EXPECT_EQ(p.set[p.ids.gate_recurrent[3]].shape(), (Shape{5, 5}));
    EXPECT_EQ(p.set[p.ids.head_weight].shape(), (Shape{5}));
    cfg.fusion = FusionMode::aligned_concat;
    EXPECT_EQ(ModelParams::zeros(cfg).set[p.ids.gate_input[0]].shape(), (Shape{18, 5}));
    cfg.fusion = FusionMode::concat;
    EXPECT_EQ(ModelParams::zeros(cfg).set[p.ids.gate_input[0]].shape(), (Shape{15, 5}));
}

// --- building blocks -----------------------------------------------------------

TEST(AlignChannels, ZeroParamsGiveZero) {
    auto p = ModelParams::zeros(small_config(FusionMode::hard));
    ad::Tape tape;
    auto bp = bind(tape, p);
    ChannelNodes in = {tape.constant(Tensor::filled({8}, 3.0)), std::nullopt, tape.constant(Tensor::filled({4}, -1.0))};
    auto out = align_channels(tape, bp, in);
    EXPECT_EQ(tape.value(*out[0]), Tensor::zeros({4}));
    EXPECT_FALSE(out[1].has_value());
    EXPECT_EQ(tape.value(*out[2]), Tensor::zeros({4}));
}

TEST(AlignChannels, OutputInUnitBoxAndDimChecked) {
    auto p = random_params(small_config(FusionMode::hard), 2, 5.0);
    ad::Tape tape;
    auto bp = bind(tape, p);
    ChannelNodes in = {tape.constant(Tensor::filled({8}, 4.0)), std::nullopt, std::nullopt};
    auto out = align_channels(tape, bp, in);
    for (double v : tape.value(*out[0]).values()) {
        EXPECT_GE(v, -1.0);
        EXPECT_LE(v, 1.0);
    }
    ChannelNodes bad = {tape.constant(Tensor::filled({3}, 1.0)), std::nullopt, std::nullopt};
    EXPECT_THROW(align_channels(tape, bp, bad), DimensionError);
}

TEST(EncodeState, ZeroHiddenAndBiasGiveZero) {
    auto p = random_params(small_config(FusionMode::hard), 3);
    p.set[p.ids.state_bias] = Tensor::zeros({4});
    ad::Tape tape;
    auto bp = bind(tape, p);
    EXPECT_EQ(tape.value(encode_state(tape, bp, tape.constant(Tensor::zeros({4})))), Tensor::zeros({4}));
    EXPECT_THROW(encode_state(tape, bp, tape.constant(Tensor::zeros({5}))), DimensionError);
}

TEST(AttentionWeights, ZeroParamsFullMaskIsUniform) {
    auto p = ModelParams::zeros(small_config(FusionMode::hard));
    ad::Tape tape;
    auto bp = bind(tape, p);
    auto z = tape.constant(Tensor::zeros({4}));
    auto att = attention_weights(tape, bp, {z, z, z}, z, {true, true, true});
    for (double v : tape.value(att.weights).values()) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
}

TEST(AttentionWeights, MaskedHatGetsNothing) {
    auto p = ModelParams::zeros(small_config(FusionMode::hard));
    ad::Tape tape;
    auto bp = bind(tape, p);
    auto z = tape.constant(Tensor::zeros({4}));
    auto att = attention_weights(tape, bp, {z, z, std::nullopt}, z, {true, true, false});
    const auto &a = tape.value(att.weights);
    EXPECT_NEAR(a[0], 0.5, 1e-15);
    EXPECT_NEAR(a[1], 0.5, 1e-15);
    EXPECT_LT(a[2], 1e-30);
}

TEST(AttentionWeights, StackedLengthIsFourN) {
    ModelConfig cfg = small_config(FusionMode::hard);
    cfg.attention_dim = 128;
    auto p = ModelParams::zeros(cfg);
    ad::Tape tape;
    auto bp = bind(tape, p);
    auto z = tape.constant(Tensor::zeros({4}));
    auto att = attention_weights(tape, bp, {z, z, z}, z, {true, true, true});
    EXPECT_EQ(tape.value(att.stacked).shape(), (Shape{512}));
    EXPECT_EQ(tape.value(att.logits).shape(), (Shape{3}));
}

TEST(AttentionWeights, AllMaskedThrows) {
    auto p = ModelParams::zeros(small_config(FusionMode::hard));
    ad::Tape tape;
    auto bp = bind(tape, p);
    auto z = tape.constant(Tensor::zeros({4}));
    EXPECT_THROW(attention_weights(tape, bp, {}, z, {false, false, false}), std::invalid_argument);
}

TEST(SelectChannel, ArgmaxAndTieBreak) {
    ChannelMask all = {true, true, true};
    std::vector<double> a{0.2, 0.5, 0.3}, tie{0.4, 0.4, 0.2};
    EXPECT_EQ(argmax_channel(a, all, TieBreak::lowest_index), 1u);
    EXPECT_EQ(argmax_channel(tie, all, TieBreak::lowest_index), 0u);
    EXPECT_EQ(argmax_channel(a, {true, false, true}, TieBreak::lowest_index), 2u);
}

TEST(SelectChannel, SoftAtVertexIsExactChannel) {
    ad::Tape tape;
    auto w = tape.constant(Tensor::vector({1.0, 0.0, 0.0}));
    ChannelNodes h = {tape.constant(Tensor::vector({0.3, -0.7})), tape.constant(Tensor::vector({0.9, 0.1})),
                      tape.constant(Tensor::vector({-0.2, 0.4}))};
    auto soft = select_channel(tape, w, h, {true, true, true}, FusionMode::soft, TieBreak::lowest_index);
    auto hard = select_channel(tape, w, h, {true, true, true}, FusionMode::hard, TieBreak::lowest_index);
    EXPECT_EQ(tape.value(soft.input), tape.value(*h[0]));
    EXPECT_EQ(tape.value(hard.input), tape.value(*h[0]));
}

TEST(LstmStep, ZeroParamsGiveHalfGates) {
    auto p = ModelParams::zeros(small_config(FusionMode::hard));
    ad::Tape tape;
    auto bp = bind(tape, p);
    auto step = lstm_step(tape, bp, tape.constant(Tensor::filled({4}, 0.8)), initial_state(tape, p.config));
    for (auto g : {Gate::forget, Gate::input, Gate::output})
        for (double v : tape.value(step.gates[static_cast<std::size_t>(g)]).values()) EXPECT_EQ(v, 0.5);
    EXPECT_EQ(tape.value(step.state.hidden), Tensor::zeros({4}));
    EXPECT_EQ(tape.value(step.state.cell), Tensor::zeros({4}));
}

TEST(LstmStep, SaturatedForgetCarriesCell) {
    auto p = ModelParams::zeros(small_config(FusionMode::hard));
    p.set[p.ids.gate_bias[static_cast<std::size_t>(Gate::forget)]] = Tensor::filled({4}, 50.0);
    p.set[p.ids.gate_bias[static_cast<std::size_t>(Gate::input)]] = Tensor::filled({4}, -50.0);
    ad::Tape tape;
    auto bp = bind(tape, p);
    auto prev_cell = Tensor::vector({0.3, -1.2, 2.0, 0.0});
    LstmState prev{tape.constant(Tensor::zeros({4})), tape.constant(prev_cell)};
    auto step = lstm_step(tape, bp, tape.constant(Tensor::filled({4}, 1.0)), prev);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(tape.value(step.state.cell)[i], prev_cell[i], 1e-12);
}

TEST(LstmStep, HiddenInOpenUnitInterval) {
    auto p = random_params(small_config(FusionMode::hard), 4, 3.0);
    ad::Tape tape;
    auto bp = bind(tape, p);
    auto state = initial_state(tape, p.config);
    for (int t = 0; t < 20; ++t) {
        state = lstm_step(tape, bp, tape.constant(Tensor::filled({4}, t % 2 ? 2.0 : -3.0)), state).state;
        for (double v : tape.value(state.hidden).values()) {
            EXPECT_GT(v, -1.0);
            EXPECT_LT(v, 1.0);
        }
    }
}

// --- forward -------------------------------------------------------------------

TEST(Forward, ZeroParamsPredictZero) {
    std::mt19937_64 rng(5);
    auto p = ModelParams::zeros(small_config(FusionMode::hard));
    EXPECT_EQ(forward(random_sequence(rng, 6, {8, 4, 4}), p).value, 0.0);
}

TEST(Forward, EmptySequenceThrows) {
    VolumeSequence empty;
    for (std::size_t c = 0; c < kChannelCount; ++c) empty.channels[c].dim = c == 0 ? 8 : 4;
    EXPECT_THROW(forward(empty, ModelParams::zeros(small_config(FusionMode::hard))), std::invalid_argument);
}

TEST(Forward, DimsMismatchThrows) {
    std::mt19937_64 rng(6);
    EXPECT_THROW(forward(random_sequence(rng, 3, {8, 4, 5}), ModelParams::zeros(small_config(FusionMode::hard))),
                 DimensionError);
}

TEST(Forward, SingleStepMatchesManualComposition) {
    std::mt19937_64 rng(7);
    for (auto mode : {FusionMode::hard, FusionMode::soft, FusionMode::hard_surrogate}) {
        auto p = random_params(small_config(mode), 70 + static_cast<int>(mode));
        auto seq = random_sequence(rng, 1, {8, 4, 4});

        // hand-chained building blocks on a fresh tape
        ad::Tape tape;
        auto bp = bind(tape, p);
        ChannelNodes in;
        for (std::size_t c = 0; c < kChannelCount; ++c) {
            auto v = seq.channels[c].at(0);
            in[c] = tape.constant(Tensor::vector(std::vector<double>(v.begin(), v.end())));
        }
        auto aligned = align_channels(tape, bp, in);
        auto start = initial_state(tape, p.config);
        auto code = encode_state(tape, bp, start.hidden);
        auto att = attention_weights(tape, bp, aligned, code, {true, true, true});
        auto sel = select_channel(tape, att.weights, aligned, {true, true, true}, mode, TieBreak::lowest_index);
        auto step = lstm_step(tape, bp, sel.input, start);
        const double manual = tape.value(regression_head(tape, bp, step.state.hidden)).item();

        EXPECT_EQ(forward(seq, p).value, manual) << to_string(mode);
    }
}

TEST(Forward, MatchesPlainReferenceOverSequences) {
    std::mt19937_64 rng(8);
    for (auto mode : {FusionMode::hard, FusionMode::soft, FusionMode::hard_surrogate, FusionMode::concat,
                      FusionMode::aligned_concat}) {
        for (auto head : {HeadKind::last, HeadKind::mean}) {
            for (int trial = 0; trial < 10; ++trial) {
                auto cfg = small_config(mode, {5, 3, 8});
                cfg.head = head;
                auto p = random_params(cfg, rng());
                auto seq = random_sequence(rng, 1 + trial % 5, {5, 3, 8}, 0.3);
                if (seq.length() == 0) continue;
                bool any = false;
                for (std::size_t t = 0; t < seq.length(); ++t) any = any || seq.any_present(t);
                auto got = forward(seq, p);
                auto ref = reference_forward(seq, p);
                EXPECT_NEAR(got.value, ref.y_hat, 1e-12) << to_string(mode);
                ASSERT_EQ(got.trace.steps.size(), ref.steps.size());
                for (std::size_t t = 0; t < ref.steps.size(); ++t) {
                    EXPECT_EQ(got.trace.steps[t].dropped, ref.steps[t].dropped);
                    EXPECT_EQ(got.trace.steps[t].selected, ref.steps[t].selected);
                    for (std::size_t c = 0; c < kChannelCount; ++c)
                        EXPECT_NEAR(got.trace.steps[t].attention[c], ref.steps[t].attention[c], 1e-14);
                }
                (void)any;
            }
        }
    }
}

TEST(Forward, TraceInvariants) {
    std::mt19937_64 rng(9);
    auto p = random_params(small_config(FusionMode::hard), 90, 1.5);
    for (int trial = 0; trial < 50; ++trial) {
        auto seq = random_sequence(rng, 12, {8, 4, 4}, 0.5);
        auto pred = forward(seq, p);
        ASSERT_EQ(pred.trace.steps.size(), seq.length());
        for (std::size_t t = 0; t < seq.length(); ++t) {
            const auto &s = pred.trace.steps[t];
            if (!seq.any_present(t)) {
                EXPECT_TRUE(s.dropped);
                EXPECT_EQ(s.selected, -1);
                continue;
            }
            double total = 0.0;
            for (double a : s.attention) total += a;
            EXPECT_NEAR(total, 1.0, 1e-12);
            ASSERT_GE(s.selected, 0);
            EXPECT_TRUE(seq.channels[static_cast<std::size_t>(s.selected)].present[t]);
            for (std::size_t c = 0; c < kChannelCount; ++c)
                if (!seq.channels[c].present[t]) EXPECT_LT(s.attention[c], 1e-30);
        }
    }
}

TEST(Forward, DroppedStepLeavesStateUntouched) {
    std::mt19937_64 rng(10);
    auto p = random_params(small_config(FusionMode::soft), 100);
    auto seq = random_sequence(rng, 4, {8, 4, 4});
    VolumeSequence gapped;
    gapped.id = seq.id;
    for (std::size_t c = 0; c < kChannelCount; ++c) {
        gapped.channels[c].dim = seq.channels[c].dim;
        for (std::size_t t = 0; t < 4; ++t) {
            gapped.channels[c].push(seq.channels[c].at(t));
            if (t == 1) gapped.channels[c].push_absent();
        }
    }
    auto a = forward(seq, p);
    auto b = forward(gapped, p);
    EXPECT_EQ(a.value, b.value);
    EXPECT_TRUE(b.trace.steps[2].dropped);
}

TEST(Forward, ChannelPermutationSymmetry) {
    std::mt19937_64 rng(11);
    const std::array<std::size_t, 3> perm = {2, 0, 1};  // new channel c holds old channel perm[c]
    for (auto mode : {FusionMode::hard, FusionMode::soft}) {
        auto cfg = small_config(mode, {6, 6, 6});
        auto p = random_params(cfg, 110 + static_cast<int>(mode));
        auto seq = random_sequence(rng, 5, {6, 6, 6}, 0.2);

        auto q = p;
        VolumeSequence s2 = seq;
        const auto n = cfg.attention_dim;
        const auto &W = p.set[p.ids.score_weight];
        auto &W2 = q.set[q.ids.score_weight];
        for (std::size_t c = 0; c < kChannelCount; ++c) {
            s2.channels[c] = seq.channels[perm[c]];
            q.set[q.ids.align_weight[c]] = p.set[p.ids.align_weight[perm[c]]];
            q.set[q.ids.align_bias[c]] = p.set[p.ids.align_bias[perm[c]]];
            q.set[q.ids.score_bias][c] = p.set[p.ids.score_bias][perm[c]];
        }
        for (std::size_t blk = 0; blk <= kChannelCount; ++blk) {
            const std::size_t src_blk = blk < kChannelCount ? perm[blk] : blk;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t col = 0; col < kChannelCount; ++col)
                    W2.at(blk * n + i, col) = W.at(src_blk * n + i, perm[col]);
        }
        EXPECT_NEAR(forward(seq, p).value, forward(s2, q).value, 1e-12) << to_string(mode);
    }
}

TEST(Forward, SoftAndHardAgreeUnderOneHotAttention) {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 10; ++trial) {
        auto p = random_params(small_config(FusionMode::soft), 120 + trial);
        // huge score bias on one channel drives the attention to a vertex exactly
        auto &b = p.set[p.ids.score_bias];
        b = Tensor::vector({0.0, 0.0, 0.0});
        p.set[p.ids.score_weight] = Tensor::zeros(p.set[p.ids.score_weight].shape());
        b[static_cast<std::size_t>(trial % 3)] = 1e3;
        auto seq = random_sequence(rng, 6, {8, 4, 4});
        auto hard = p;
        hard.config.fusion = FusionMode::hard;
        auto s = forward(seq, p), h = forward(seq, hard);
        EXPECT_EQ(s.value, h.value);
        for (const auto &row : h.trace.steps) EXPECT_EQ(row.selected, trial % 3);
    }
}

TEST(Forward, HardInvariantToArgmaxPreservingLogitRescale) {
    std::mt19937_64 rng(13);
    auto p = random_params(small_config(FusionMode::hard), 130);
    auto seq = random_sequence(rng, 7, {8, 4, 4});
    auto q = p;
    for (auto &v : q.set[q.ids.score_weight].values()) v *= 3.0;
    for (auto &v : q.set[q.ids.score_bias].values()) v *= 3.0;
    auto a = forward(seq, p), b = forward(seq, q);
    EXPECT_EQ(a.value, b.value);
    for (std::size_t t = 0; t < seq.length(); ++t) EXPECT_EQ(a.trace.steps[t].selected, b.trace.steps[t].selected);
}

TEST(Forward, UniformSoftAttentionFeedsMeanOfAlignedChannels) {
    std::mt19937_64 rng(14);
    auto p = random_params(small_config(FusionMode::soft), 140);
    p.set[p.ids.score_weight] = Tensor::zeros(p.set[p.ids.score_weight].shape());
    p.set[p.ids.score_bias] = Tensor::zeros({3});
    auto seq = random_sequence(rng, 1, {8, 4, 4});
    ad::Tape tape;
    auto bp = bind(tape, p);
    ChannelNodes in;
    for (std::size_t c = 0; c < kChannelCount; ++c) {
        auto v = seq.channels[c].at(0);
        in[c] = tape.constant(Tensor::vector(std::vector<double>(v.begin(), v.end())));
    }
    auto aligned = align_channels(tape, bp, in);
    auto code = encode_state(tape, bp, initial_state(tape, p.config).hidden);
    auto att = attention_weights(tape, bp, aligned, code, {true, true, true});
    auto sel = select_channel(tape, att.weights, aligned, {true, true, true}, FusionMode::soft, TieBreak::lowest_index);
    for (std::size_t i = 0; i < 4; ++i) {
        double mean = 0.0;
        for (std::size_t c = 0; c < kChannelCount; ++c) mean += tape.value(*aligned[c])[i];
        EXPECT_NEAR(tape.value(sel.input)[i], mean / 3.0, 1e-15);
    }
}

// --- gradients -----------------------------------------------------------------

TEST(ModelGradients, SoftAndSurrogateMatchFiniteDifferences) {
    std::mt19937_64 rng(15);
    for (auto mode : {FusionMode::soft, FusionMode::hard_surrogate, FusionMode::concat, FusionMode::aligned_concat}) {
        for (auto head : {HeadKind::last, HeadKind::mean}) {
            auto cfg = small_config(mode, {5, 3, 4});
            cfg.head = head;
            auto p = random_params(cfg, 150 + static_cast<int>(mode));
            auto seq = random_sequence(rng, 4, {5, 3, 4}, 0.25);
            auto report = check_model(p, seq);
            ASSERT_TRUE(report.ran()) << *report.error;
            EXPECT_LT(report.max_rel_error, 1e-4) << to_string(mode);
        }
    }
}

TEST(ModelGradients, HardModeLogitsReceiveGradient) {
    std::mt19937_64 rng(16);
    auto p = random_params(small_config(FusionMode::hard), 160);
    auto seq = random_sequence(rng, 5, {8, 4, 4});
    auto g = loss_and_gradients(seq, p);
    EXPECT_GT(g.grads[p.ids.score_weight].values().size(), 0u);
    double norm = 0.0;
    for (double v : g.grads[p.ids.score_weight].values()) norm += v * v;
    EXPECT_GT(norm, 0.0);
}

TEST(ModelGradients, HardModeEqualsSurrogateExceptForwardScale) {
    // the straight-through backward treats x = a_k h_k, so with a_k == 1 both coincide
    std::mt19937_64 rng(17);
    auto p = random_params(small_config(FusionMode::hard), 170);
    p.set[p.ids.score_weight] = Tensor::zeros(p.set[p.ids.score_weight].shape());
    p.set[p.ids.score_bias] = Tensor::vector({0.0, 800.0, 0.0});
    auto seq = random_sequence(rng, 4, {8, 4, 4});
    auto s = p;
    s.config.fusion = FusionMode::hard_surrogate;
    auto gh = loss_and_gradients(seq, p), gs = loss_and_gradients(seq, s);
    EXPECT_EQ(gh.loss, gs.loss);
    for (std::size_t id = 0; id < p.set.size(); ++id)
        for (std::size_t i = 0; i < p.set[id].size(); ++i) EXPECT_NEAR(gh.grads[id][i], gs.grads[id][i], 1e-15);
}

TEST(ModelGradients, EmptySequenceReportedByGradCheck) {
    auto p = random_params(small_config(FusionMode::soft), 180);
    VolumeSequence empty;
    for (std::size_t c = 0; c < kChannelCount; ++c) empty.channels[c].dim = c == 0 ? 8 : 4;
    auto report = check_model(p, empty);
    EXPECT_FALSE(report.ran());
}

TEST(ModelGradients, UnusedAttentionParamsGetZeroInConcatMode) {
    std::mt19937_64 rng(18);
    auto p = random_params(small_config(FusionMode::concat), 190);
    auto g = loss_and_gradients(random_sequence(rng, 3, {8, 4, 4}), p);
    for (auto id : {p.ids.attn_weight, p.ids.score_weight, p.ids.state_weight, p.ids.align_weight[0]})
        for (double v : g.grads[id].values()) EXPECT_EQ(v, 0.0);
}
