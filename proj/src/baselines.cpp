#include "machan/baselines.hpp"

#include <stdexcept>

namespace machan {

using ad::NodeId;
using ad::Tape;

ForwardGraph build_concat_graph(Tape &tape, const BoundParams &bp, const VolumeSequence &seq) {
    return unroll(tape, bp, seq, TraceKind::concat,
                  [&](std::size_t t, const ChannelMask &mask, const LstmState &, TraceStep &) {
                      std::vector<double> x;
                      x.reserve(bp.config().lstm_input_dim());
                      for (std::size_t c = 0; c < kChannelCount; ++c) {
                          const auto &ch = seq.channels[c];
                          if (mask[c]) {
                              auto v = ch.at(t);
                              x.insert(x.end(), v.begin(), v.end());
                          } else {
                              x.insert(x.end(), ch.dim, 0.0);
                          }
                      }
                      return tape.constant(Tensor::vector(std::move(x)));
                  });
}

ForwardGraph build_aligned_graph(Tape &tape, const BoundParams &bp, const VolumeSequence &seq) {
    return unroll(tape, bp, seq, TraceKind::aligned,
                  [&](std::size_t t, const ChannelMask &mask, const LstmState &, TraceStep &) {
                      ChannelNodes inputs;
                      for (std::size_t c = 0; c < kChannelCount; ++c) {
                          if (!mask[c]) continue;
                          auto v = seq.channels[c].at(t);
                          inputs[c] = tape.constant(Tensor::vector(std::vector<double>(v.begin(), v.end())));
                      }
                      auto aligned = align_channels(tape, bp, inputs);
                      std::optional<NodeId> zero;
                      std::array<NodeId, kChannelCount> parts{};
                      for (std::size_t c = 0; c < kChannelCount; ++c) {
                          if (aligned[c]) {
                              parts[c] = *aligned[c];
                          } else {
                              if (!zero) zero = tape.constant(Tensor({bp.config().align_dim}));
                              parts[c] = *zero;
                          }
                      }
                      return ad::concat(tape, parts);
                  });
}

namespace {

Prediction run(const VolumeSequence &seq, const ModelParams &params, FusionMode expected,
               ForwardGraph (*build)(Tape &, const BoundParams &, const VolumeSequence &)) {
    if (params.config.fusion != expected) {
        throw std::invalid_argument(std::string("parameters were laid out for fusion mode ") +
                                    to_string(params.config.fusion) + ", expected " + to_string(expected));
    }
    Tape tape;
    auto bp = bind(tape, params);
    auto g = build(tape, bp, seq);
    return {tape.value(g.prediction).item(), std::move(g.trace)};
}

}  // namespace

Prediction concat_forward(const VolumeSequence &seq, const ModelParams &params) {
    return run(seq, params, FusionMode::concat, build_concat_graph);
}

Prediction aligned_forward(const VolumeSequence &seq, const ModelParams &params) {
    return run(seq, params, FusionMode::aligned_concat, build_aligned_graph);
}

}  // namespace machan
