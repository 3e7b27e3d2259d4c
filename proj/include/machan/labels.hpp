#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "machan/records.hpp"

namespace machan {

/// likes / views. Throws std::invalid_argument when views == 0.
double compute_popularity(std::uint64_t likes, std::uint64_t views);

/// Mean-centres and scales labels with statistics from the train split.
struct Normalizer {
    double mean = 0.0;
    double stddev = 1.0;  // population

    /// Needs at least two non-constant labels.
    static Normalizer fit(std::span<const double> train_labels);

    double apply(double y) const { return (y - mean) / stddev; }
    double invert(double z) const { return z * stddev + mean; }
};

struct Dataset {
    std::vector<VolumeSequence> sequences;
    std::optional<Normalizer> normalizer;
};

std::vector<double> labels_of(std::span<const VolumeSequence> sequences);

/// Copy of `sequences` with every label passed through the normalizer.
std::vector<VolumeSequence> normalized(std::span<const VolumeSequence> sequences, const Normalizer &norm);

struct SplitSpec {
    std::uint64_t seed = 0;
    double train = 0.6;
    double val = 0.2;
    double test = 0.2;

    void validate() const;
};

/// Positions into the original list.
struct SplitIndices {
    std::vector<std::size_t> train, val, test;
};

/// Seeded uniform shuffle, then floor(train*n) train, floor(val*n) val and
/// the remainder test. Needs n >= 5.
SplitIndices split_indices(std::size_t n, const SplitSpec &spec);

struct SplitData {
    std::vector<VolumeSequence> train, val, test;
};

SplitData split_dataset(std::span<const VolumeSequence> sequences, const SplitSpec &spec);
SplitData split_by_indices(std::span<const VolumeSequence> sequences, const SplitIndices &idx);

}  // namespace machan
