#pragma once

// Comparison systems that share the LSTM cell and head with the attention
// model but feed it every channel at once.

#include "machan/model.hpp"

namespace machan {

/// x_t = [face, pose, hat] raw vectors; absent channels are zero vectors.
ForwardGraph build_concat_graph(ad::Tape &tape, const BoundParams &bp, const VolumeSequence &seq);

/// x_t = [h_f, h_p, h_c] after alignment; absent channels are zero vectors.
ForwardGraph build_aligned_graph(ad::Tape &tape, const BoundParams &bp, const VolumeSequence &seq);

/// Require params.config.fusion to be concat / aligned_concat respectively.
Prediction concat_forward(const VolumeSequence &seq, const ModelParams &params);
Prediction aligned_forward(const VolumeSequence &seq, const ModelParams &params);

}  // namespace machan
