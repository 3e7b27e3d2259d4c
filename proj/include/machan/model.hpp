#pragma once

// Attention-gated LSTM regressor over three feature channels.
//
// Per step t:
//   h_j  = tanh(x_j W_j + b_j)                  j in {face, pose, hat}
//   h_s  = tanh(h_{t-1} W_s + b_s)
//   h'_j = tanh(h_j W_a + b_a)                  j in {face, pose, hat, state}
//   a    = softmax([h'_f h'_p h'_c h'_s] W_sm + b_sm), absent channels masked
//   x_t  = h_{argmax a}  (hard)   or   sum_j a_j h_j  (soft)
//   LSTM cell on x_t, prediction = h_T . w_out + b_out

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "machan/autodiff.hpp"
#include "machan/records.hpp"

namespace machan {

enum class FusionMode {
    hard,            // argmax channel, straight-through gradient
    soft,            // attention-weighted sum of aligned channels
    concat,          // raw channels concatenated, no alignment or attention
    aligned_concat,  // aligned channels concatenated, no attention
    hard_surrogate,  // argmax channel scaled by its weight; differentiable stand-in for `hard`
};

enum class TieBreak { lowest_index };

enum class HeadKind {
    last,  // linear map on the final hidden state
    mean,  // linear map on the mean hidden state over processed steps
};

const char *to_string(FusionMode mode);
FusionMode parse_fusion(const std::string &name);
const char *to_string(HeadKind head);
HeadKind parse_head(const std::string &name);

/// Masked attention logits are set to this value before the softmax.
inline constexpr double kMaskLogit = -1e9;

struct ModelConfig {
    ChannelDims input_dims = {4096, 4096, 4096};
    std::size_t align_dim = 1024;     // shared aligned space
    std::size_t attention_dim = 128;  // per-channel attention hidden
    std::size_t state_dim = 50;       // LSTM hidden and cell
    FusionMode fusion = FusionMode::hard;
    TieBreak tie_break = TieBreak::lowest_index;
    HeadKind head = HeadKind::last;
    std::array<bool, kChannelCount> channels = {true, true, true};

    void validate() const;
    std::size_t lstm_input_dim() const;

    friend bool operator==(const ModelConfig &, const ModelConfig &) = default;
};

enum class Gate : std::size_t { forget = 0, input = 1, candidate = 2, output = 3 };
inline constexpr std::size_t kGateCount = 4;

struct ParamIds {
    std::array<std::size_t, kChannelCount> align_weight{}, align_bias{};
    std::size_t state_weight = 0, state_bias = 0;
    std::size_t attn_weight = 0, attn_bias = 0;
    std::size_t score_weight = 0, score_bias = 0;
    std::array<std::size_t, kGateCount> gate_input{}, gate_recurrent{}, gate_bias{};
    std::size_t head_weight = 0, head_bias = 0;
};

/// Every learnable tensor. Attention and alignment tensors exist in every
/// fusion mode; modes that do not use them leave their gradients at zero.
struct ModelParams {
    ModelConfig config;
    ad::ParamSet set;
    ParamIds ids;

    /// All-zero tensors with the layout implied by `config`.
    static ModelParams zeros(const ModelConfig &config);
};

/// Glorot-uniform weights, zero biases, forget-gate bias of one.
ModelParams init_params(const ModelConfig &config, std::uint64_t seed);

double glorot_bound(std::size_t fan_in, std::size_t fan_out);

// --- tape-level building blocks ------------------------------------------

/// Parameter leaves registered once per tape.
struct BoundParams {
    const ModelConfig *cfg = nullptr;
    const ParamIds *id_map = nullptr;
    std::vector<ad::NodeId> node;  // indexed by parameter id

    ad::NodeId operator[](std::size_t id) const { return node[id]; }
    const ModelConfig &config() const { return *cfg; }
    const ParamIds &ids() const { return *id_map; }
};

BoundParams bind(ad::Tape &tape, const ModelParams &params);

/// Binds `values` (same layout as `params.set`) in place of the stored
/// tensors; used to differentiate with respect to a perturbed copy.
BoundParams bind(ad::Tape &tape, const ModelParams &params, const ad::ParamSet &values);

using ChannelNodes = std::array<std::optional<ad::NodeId>, kChannelCount>;
using ChannelMask = std::array<bool, kChannelCount>;

/// tanh(x_j W_j + b_j) for each present channel; absent inputs stay absent.
ChannelNodes align_channels(ad::Tape &tape, const BoundParams &bp, const ChannelNodes &inputs);

/// tanh(h_prev W_s + b_s).
ad::NodeId encode_state(ad::Tape &tape, const BoundParams &bp, ad::NodeId h_prev);

struct AttentionNodes {
    std::array<ad::NodeId, kChannelCount + 1> hidden{};  // face, pose, hat, state
    ad::NodeId stacked = 0;
    ad::NodeId logits = 0;  // after masking
    ad::NodeId weights = 0;
};

/// Throws std::invalid_argument when every channel is masked. Absent
/// channels contribute a zero hidden vector to the stack.
AttentionNodes attention_weights(ad::Tape &tape, const BoundParams &bp, const ChannelNodes &aligned,
                                 ad::NodeId state_code, const ChannelMask &mask);

struct Selection {
    ad::NodeId input = 0;
    std::size_t channel = 0;  // argmax under the tie-break rule
};

/// Argmax over present channels; ties go to the lowest index.
std::size_t argmax_channel(std::span<const double> weights, const ChannelMask &mask, TieBreak rule);

Selection select_channel(ad::Tape &tape, ad::NodeId weights, const ChannelNodes &aligned, const ChannelMask &mask,
                         FusionMode mode, TieBreak rule);

struct LstmState {
    ad::NodeId hidden = 0;
    ad::NodeId cell = 0;
};

struct LstmStep {
    LstmState state;
    std::array<ad::NodeId, kGateCount> gates{};  // forget, input, candidate (tanh), output
};

LstmStep lstm_step(ad::Tape &tape, const BoundParams &bp, ad::NodeId x, const LstmState &prev);

LstmState initial_state(ad::Tape &tape, const ModelConfig &config);

/// w_out . h + b_out.
ad::NodeId regression_head(ad::Tape &tape, const BoundParams &bp, ad::NodeId h);

// --- whole sequence --------------------------------------------------------

enum class TraceKind { attention, concat, aligned };

struct TraceStep {
    std::array<double, kChannelCount> attention{};  // zeros when dropped or no attention
    int selected = -1;                              // -1 when dropped or no selection
    ChannelMask present{};
    bool dropped = false;
};

struct AttentionTrace {
    TraceKind kind = TraceKind::attention;
    std::vector<TraceStep> steps;
};

struct Prediction {
    double value = 0.0;
    AttentionTrace trace;
};

struct ForwardGraph {
    ad::NodeId prediction = 0;
    AttentionTrace trace;
};

/// Produces x_t for one step given the channels present and the previous
/// LSTM state, filling the attention/selection part of the trace row.
using StepInput = std::function<ad::NodeId(std::size_t t, const ChannelMask &mask, const LstmState &prev,
                                           TraceStep &row)>;

/// Shared recurrence for every fusion mode: skip all-absent steps, run the
/// LSTM cell on step_input, then the regression head.
ForwardGraph unroll(ad::Tape &tape, const BoundParams &bp, const VolumeSequence &seq, TraceKind kind,
                    const StepInput &step_input);

/// Channel presence after applying the config's channel selection.
ChannelMask step_mask(const VolumeSequence &seq, std::size_t t, const ModelConfig &config);

/// Unrolls the model over `seq` for any fusion mode. Steps with every
/// channel absent are skipped without a state update and marked dropped.
ForwardGraph build_forward(ad::Tape &tape, const BoundParams &bp, const VolumeSequence &seq);

/// Throws std::invalid_argument for an empty sequence.
Prediction forward(const VolumeSequence &seq, const ModelParams &params);

struct SequenceGradient {
    double loss = 0.0;  // (prediction - y)^2
    double prediction = 0.0;
    ad::Gradients grads;
};

SequenceGradient loss_and_gradients(const VolumeSequence &seq, const ModelParams &params);

/// Squared-error loss node for one sequence.
ad::NodeId build_loss(ad::Tape &tape, const BoundParams &bp, const VolumeSequence &seq);

}  // namespace machan
