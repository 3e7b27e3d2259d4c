#pragma once

// Synthetic channel-switching datasets with a known active channel per step.
//
// Every channel step is N(0, sigma^2) noise. The active channel also gets
// signal * z_t * u_c + marker * e_0 with z_t ~ N(0, 1) and u_c a seeded unit vector.
// The label is (1/T) sum_t <active step_t, w[0:d_c]>.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "machan/model.hpp"
#include "machan/records.hpp"

namespace machan {

struct SynthConfig {
    std::size_t videos = 250;
    std::size_t t_min = 10, t_max = 30;
    ChannelDims dims = {8, 4, 4};
    std::size_t segment_min = 5, segment_max = 20;
    double marker = 1.0;
    double signal = 1.0;  // scale on z_t * u_c
    double sigma = 0.1;
    std::vector<double> readout;  // w; empty = seeded unit vector of length max(dims)
    double absent_prob = 0.0;     // per inactive channel and step
    std::uint64_t seed = 0;

    void validate() const;
};

struct SynthData {
    std::vector<VolumeSequence> sequences;  // raw (unnormalized) labels
    std::vector<std::vector<int>> modes;    // active channel per step
    std::array<std::vector<double>, kChannelCount> directions;
    std::vector<double> readout;
};

SynthData generate(const SynthConfig &cfg);

/// Recomputes a label from stored steps and modes by direct summation.
double oracle_label(const VolumeSequence &seq, std::span<const int> modes, std::span<const double> readout);

/// Writes dataset.jsonl (volume cache), labels.jsonl and modes.jsonl. With
/// frames_per_step > 0 also writes frames.jsonl, holding each step for that
/// many frames at 5 fps.
void write_synth(const std::filesystem::path &dir, const SynthData &data, std::size_t frames_per_step = 0);

std::map<std::string, std::vector<int>> load_modes(const std::filesystem::path &path);

/// Fraction of non-dropped steps whose selected channel equals the active
/// mode. Throws std::invalid_argument on length mismatch or when every step
/// was dropped.
double score_attention(const AttentionTrace &trace, std::span<const int> modes);

/// Pooled over many videos (steps weighted equally).
double score_attention(std::span<const AttentionTrace> traces, std::span<const std::vector<int>> modes);

}  // namespace machan
