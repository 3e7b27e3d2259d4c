#include "machan/model.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "machan/baselines.hpp"

namespace machan {

using ad::NodeId;
using ad::Tape;

const char *to_string(FusionMode mode) {
    switch (mode) {
    case FusionMode::hard: return "hard";
    case FusionMode::soft: return "soft";
    case FusionMode::concat: return "concat";
    case FusionMode::aligned_concat: return "aligned-concat";
    case FusionMode::hard_surrogate: return "hard-surrogate";
    }
    return "?";
}

FusionMode parse_fusion(const std::string &name) {
    for (auto m : {FusionMode::hard, FusionMode::soft, FusionMode::concat, FusionMode::aligned_concat,
                   FusionMode::hard_surrogate})
        if (name == to_string(m)) return m;
    throw std::invalid_argument("unknown fusion mode " + name);
}

const char *to_string(HeadKind head) { return head == HeadKind::last ? "last" : "mean"; }

HeadKind parse_head(const std::string &name) {
    if (name == "last") return HeadKind::last;
    if (name == "mean") return HeadKind::mean;
    throw std::invalid_argument("unknown head " + name);
}

void ModelConfig::validate() const {
    for (auto d : input_dims)
        if (d == 0) throw std::invalid_argument("channel input dims must be positive");
    if (align_dim == 0 || attention_dim == 0 || state_dim == 0)
        throw std::invalid_argument("model dims must be positive");
    if (!(channels[0] || channels[1] || channels[2])) throw std::invalid_argument("no channel selected");
}

std::size_t ModelConfig::lstm_input_dim() const {
    switch (fusion) {
    case FusionMode::concat: return input_dims[0] + input_dims[1] + input_dims[2];
    case FusionMode::aligned_concat: return kChannelCount * align_dim;
    default: return align_dim;
    }
}

// ------------------------------------------------------------------ params

namespace {

constexpr std::array<const char *, kGateCount> kGateNames = {"forget", "input", "candidate", "output"};

ModelParams layout(const ModelConfig &config) {
    config.validate();
    ModelParams p;
    p.config = config;
    auto &s = p.set;
    auto &ids = p.ids;
    const auto m = config.align_dim, n = config.attention_dim, ds = config.state_dim;
    for (std::size_t c = 0; c < kChannelCount; ++c) {
        std::string ch(kChannelNames[c]);
        ids.align_weight[c] = s.add("align." + ch + ".weight", Tensor({config.input_dims[c], m}));
        ids.align_bias[c] = s.add("align." + ch + ".bias", Tensor({m}));
    }
    ids.state_weight = s.add("state.weight", Tensor({ds, m}));
    ids.state_bias = s.add("state.bias", Tensor({m}));
    ids.attn_weight = s.add("attention.hidden.weight", Tensor({m, n}));
    ids.attn_bias = s.add("attention.hidden.bias", Tensor({n}));
    ids.score_weight = s.add("attention.score.weight", Tensor({(kChannelCount + 1) * n, kChannelCount}));
    ids.score_bias = s.add("attention.score.bias", Tensor({kChannelCount}));
    const auto in = config.lstm_input_dim();
    for (std::size_t g = 0; g < kGateCount; ++g) {
        std::string gate(kGateNames[g]);
        ids.gate_input[g] = s.add("lstm." + gate + ".input", Tensor({in, ds}));
        ids.gate_recurrent[g] = s.add("lstm." + gate + ".recurrent", Tensor({ds, ds}));
        ids.gate_bias[g] = s.add("lstm." + gate + ".bias", Tensor({ds}));
    }
    ids.head_weight = s.add("head.weight", Tensor({ds}));
    ids.head_bias = s.add("head.bias", Tensor({1}));
    return p;
}

}  // namespace

ModelParams ModelParams::zeros(const ModelConfig &config) { return layout(config); }

double glorot_bound(std::size_t fan_in, std::size_t fan_out) {
    return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

ModelParams init_params(const ModelConfig &config, std::uint64_t seed) {
    auto p = layout(config);
    std::mt19937_64 rng(seed);
    for (std::size_t id = 0; id < p.set.size(); ++id) {
        auto &t = p.set[id];
        const bool is_bias = p.set.name(id).ends_with(".bias");
        if (is_bias) continue;
        const std::size_t fan_in = t.shape()[0];
        const std::size_t fan_out = t.rank() == 2 ? t.shape()[1] : 1;
        std::uniform_real_distribution<double> dist(-glorot_bound(fan_in, fan_out), glorot_bound(fan_in, fan_out));
        for (auto &v : t.values()) v = dist(rng);
    }
    for (auto &v : p.set[p.ids.gate_bias[static_cast<std::size_t>(Gate::forget)]].values()) v = 1.0;
    return p;
}

// ---------------------------------------------------------- building blocks

BoundParams bind(Tape &tape, const ModelParams &params) { return bind(tape, params, params.set); }

BoundParams bind(Tape &tape, const ModelParams &params, const ad::ParamSet &values) {
    if (values.size() != params.set.size()) throw std::invalid_argument("parameter set does not match model layout");
    BoundParams bp;
    bp.cfg = &params.config;
    bp.id_map = &params.ids;
    bp.node.reserve(values.size());
    for (std::size_t id = 0; id < values.size(); ++id) {
        if (values[id].shape() != params.set[id].shape())
            throw DimensionError("parameter " + values.name(id) + " has shape " + to_string(values[id].shape()));
        bp.node.push_back(tape.parameter(values, id));
    }
    return bp;
}

namespace {

NodeId affine(Tape &tape, NodeId x, NodeId w, NodeId b) { return ad::add(tape, ad::matmul(tape, x, w), b); }

}  // namespace

ChannelNodes align_channels(Tape &tape, const BoundParams &bp, const ChannelNodes &inputs) {
    ChannelNodes out;
    for (std::size_t c = 0; c < kChannelCount; ++c) {
        if (!inputs[c]) continue;
        const auto &x = tape.value(*inputs[c]);
        if (x.rank() != 1 || x.size() != bp.config().input_dims[c]) {
            throw DimensionError(std::string(kChannelNames[c]) + " input has shape " + to_string(x.shape()) +
                                 ", expected [" + std::to_string(bp.config().input_dims[c]) + "]");
        }
        out[c] = ad::tanh(tape, affine(tape, *inputs[c], bp[bp.ids().align_weight[c]], bp[bp.ids().align_bias[c]]));
    }
    return out;
}

NodeId encode_state(Tape &tape, const BoundParams &bp, NodeId h_prev) {
    const auto &h = tape.value(h_prev);
    if (h.rank() != 1 || h.size() != bp.config().state_dim)
        throw DimensionError("state encoder input has shape " + to_string(h.shape()));
    return ad::tanh(tape, affine(tape, h_prev, bp[bp.ids().state_weight], bp[bp.ids().state_bias]));
}

AttentionNodes attention_weights(Tape &tape, const BoundParams &bp, const ChannelNodes &aligned, NodeId state_code,
                                 const ChannelMask &mask) {
    if (!(mask[0] || mask[1] || mask[2])) throw std::invalid_argument("attention with every channel masked");
    AttentionNodes out;
    const auto &ids = bp.ids();
    auto hidden = [&](NodeId h) { return ad::tanh(tape, affine(tape, h, bp[ids.attn_weight], bp[ids.attn_bias])); };
    std::optional<NodeId> zero;
    for (std::size_t c = 0; c < kChannelCount; ++c) {
        if (mask[c]) {
            if (!aligned[c]) throw std::invalid_argument("present channel has no aligned vector");
            out.hidden[c] = hidden(*aligned[c]);
        } else {
            if (!zero) zero = tape.constant(Tensor({bp.config().attention_dim}));
            out.hidden[c] = *zero;
        }
    }
    out.hidden[kChannelCount] = hidden(state_code);
    out.stacked = ad::concat(tape, out.hidden);
    NodeId raw = affine(tape, out.stacked, bp[ids.score_weight], bp[ids.score_bias]);
    out.logits = ad::mask_fill(tape, raw, std::vector<bool>(mask.begin(), mask.end()), kMaskLogit);
    out.weights = ad::softmax(tape, out.logits);
    return out;
}

std::size_t argmax_channel(std::span<const double> weights, const ChannelMask &mask, TieBreak) {
    std::optional<std::size_t> best;
    for (std::size_t c = 0; c < kChannelCount; ++c) {
        if (!mask[c]) continue;
        if (!best || weights[c] > weights[*best]) best = c;
    }
    if (!best) throw std::invalid_argument("no present channel to select");
    return *best;
}

Selection select_channel(Tape &tape, NodeId weights, const ChannelNodes &aligned, const ChannelMask &mask,
                         FusionMode mode, TieBreak rule) {
    Selection sel;
    sel.channel = argmax_channel(tape.value(weights).values(), mask, rule);
    const NodeId chosen = *aligned[sel.channel];
    switch (mode) {
    case FusionMode::hard:
        sel.input = ad::straight_through(tape, weights, sel.channel, chosen);
        break;
    case FusionMode::hard_surrogate:
        sel.input = ad::scale(tape, ad::pick(tape, weights, sel.channel), chosen);
        break;
    case FusionMode::soft: {
        std::optional<NodeId> acc;
        for (std::size_t c = 0; c < kChannelCount; ++c) {
            if (!mask[c]) continue;
            NodeId term = ad::scale(tape, ad::pick(tape, weights, c), *aligned[c]);
            acc = acc ? ad::add(tape, *acc, term) : term;
        }
        sel.input = *acc;
        break;
    }
    default:
        throw std::invalid_argument(std::string("select_channel does not handle fusion mode ") + to_string(mode));
    }
    return sel;
}

LstmState initial_state(Tape &tape, const ModelConfig &config) {
    return {tape.constant(Tensor({config.state_dim})), tape.constant(Tensor({config.state_dim}))};
}

LstmStep lstm_step(Tape &tape, const BoundParams &bp, NodeId x, const LstmState &prev) {
    const auto &cfg = bp.config();
    const auto &xv = tape.value(x);
    if (xv.rank() != 1 || xv.size() != cfg.lstm_input_dim())
        throw DimensionError("LSTM input has shape " + to_string(xv.shape()));
    if (tape.value(prev.hidden).size() != cfg.state_dim || tape.value(prev.cell).size() != cfg.state_dim)
        throw DimensionError("LSTM state has the wrong length");

    const auto &ids = bp.ids();
    LstmStep step;
    for (std::size_t g = 0; g < kGateCount; ++g) {
        NodeId pre = ad::add(tape, ad::matmul(tape, x, bp[ids.gate_input[g]]),
                             affine(tape, prev.hidden, bp[ids.gate_recurrent[g]], bp[ids.gate_bias[g]]));
        step.gates[g] = g == static_cast<std::size_t>(Gate::candidate) ? ad::tanh(tape, pre) : ad::sigmoid(tape, pre);
    }
    auto gate = [&](Gate g) { return step.gates[static_cast<std::size_t>(g)]; };
    step.state.cell = ad::add(tape, ad::hadamard(tape, gate(Gate::forget), prev.cell),
                              ad::hadamard(tape, gate(Gate::input), gate(Gate::candidate)));
    step.state.hidden = ad::hadamard(tape, gate(Gate::output), ad::tanh(tape, step.state.cell));
    return step;
}

NodeId regression_head(Tape &tape, const BoundParams &bp, NodeId h) {
    return ad::add(tape, ad::matmul(tape, h, bp[bp.ids().head_weight]), bp[bp.ids().head_bias]);
}

// ----------------------------------------------------------- whole sequence

ChannelMask step_mask(const VolumeSequence &seq, std::size_t t, const ModelConfig &config) {
    ChannelMask m{};
    for (std::size_t c = 0; c < kChannelCount; ++c) m[c] = config.channels[c] && seq.channels[c].present[t];
    return m;
}

ForwardGraph unroll(Tape &tape, const BoundParams &bp, const VolumeSequence &seq, TraceKind kind,
                    const StepInput &step_input) {
    if (seq.length() == 0) throw std::invalid_argument(seq.id + ": empty sequence");
    const auto &cfg = bp.config();
    if (seq.dims() != cfg.input_dims) throw DimensionError(seq.id + ": channel dims differ from model config");

    ForwardGraph out;
    out.trace.kind = kind;
    out.trace.steps.reserve(seq.length());

    LstmState state = initial_state(tape, cfg);
    std::optional<NodeId> hidden_sum;
    std::size_t processed = 0;

    for (std::size_t t = 0; t < seq.length(); ++t) {
        TraceStep row;
        row.present = step_mask(seq, t, cfg);
        if (!(row.present[0] || row.present[1] || row.present[2])) {
            row.dropped = true;
            out.trace.steps.push_back(row);
            continue;
        }
        NodeId x = step_input(t, row.present, state, row);
        state = lstm_step(tape, bp, x, state).state;
        ++processed;
        if (cfg.head == HeadKind::mean) hidden_sum = hidden_sum ? ad::add(tape, *hidden_sum, state.hidden) : state.hidden;
        out.trace.steps.push_back(row);
    }

    NodeId summary = state.hidden;
    if (cfg.head == HeadKind::mean && processed > 0)
        summary = ad::mul_scalar(tape, *hidden_sum, 1.0 / static_cast<double>(processed));
    out.prediction = regression_head(tape, bp, summary);
    return out;
}

namespace {

NodeId input_node(Tape &tape, const ChannelSeries &series, std::size_t t) {
    auto v = series.at(t);
    return tape.constant(Tensor::vector(std::vector<double>(v.begin(), v.end())));
}

ForwardGraph build_attention_graph(Tape &tape, const BoundParams &bp, const VolumeSequence &seq) {
    const auto &cfg = bp.config();
    return unroll(tape, bp, seq, TraceKind::attention,
                  [&](std::size_t t, const ChannelMask &mask, const LstmState &prev, TraceStep &row) {
                      ChannelNodes inputs;
                      for (std::size_t c = 0; c < kChannelCount; ++c)
                          if (mask[c]) inputs[c] = input_node(tape, seq.channels[c], t);
                      auto aligned = align_channels(tape, bp, inputs);
                      NodeId code = encode_state(tape, bp, prev.hidden);
                      auto att = attention_weights(tape, bp, aligned, code, mask);
                      auto sel = select_channel(tape, att.weights, aligned, mask, cfg.fusion, cfg.tie_break);
                      const auto &a = tape.value(att.weights);
                      for (std::size_t c = 0; c < kChannelCount; ++c) row.attention[c] = a[c];
                      row.selected = static_cast<int>(sel.channel);
                      return sel.input;
                  });
}

}  // namespace

ForwardGraph build_forward(Tape &tape, const BoundParams &bp, const VolumeSequence &seq) {
    switch (bp.config().fusion) {
    case FusionMode::concat: return build_concat_graph(tape, bp, seq);
    case FusionMode::aligned_concat: return build_aligned_graph(tape, bp, seq);
    default: return build_attention_graph(tape, bp, seq);
    }
}

Prediction forward(const VolumeSequence &seq, const ModelParams &params) {
    Tape tape;
    auto bp = bind(tape, params);
    auto g = build_forward(tape, bp, seq);
    return {tape.value(g.prediction).item(), std::move(g.trace)};
}

NodeId build_loss(Tape &tape, const BoundParams &bp, const VolumeSequence &seq) {
    auto g = build_forward(tape, bp, seq);
    NodeId target = tape.constant(Tensor::scalar(seq.y));
    return ad::mse(tape, g.prediction, target);
}

SequenceGradient loss_and_gradients(const VolumeSequence &seq, const ModelParams &params) {
    Tape tape;
    auto bp = bind(tape, params);
    auto g = build_forward(tape, bp, seq);
    NodeId target = tape.constant(Tensor::scalar(seq.y));
    NodeId loss = ad::mse(tape, g.prediction, target);
    SequenceGradient out;
    out.loss = tape.value(loss).item();
    out.prediction = tape.value(g.prediction).item();
    out.grads = ad::backward(tape, loss, params.set);
    return out;
}

}  // namespace machan
