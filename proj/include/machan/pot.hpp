#pragma once

// Pooled time series descriptor: every feature dimension is treated as a
// time series and pooled over a temporal pyramid of windows.

#include <array>
#include <cstddef>
#include <vector>

#include "machan/records.hpp"

namespace machan {

inline constexpr std::size_t kPotOperators = 5;  // mean, stdev, max, grad+, grad-

enum class GradPooling {
    sums,       // sum of positive / |negative| consecutive differences
    histogram,  // count of positive / negative consecutive differences
};

struct PotConfig {
    std::size_t levels = 5;
    GradPooling grad = GradPooling::sums;
};

/// Layout is dim-major, window-second, operator-last.
struct PotLayout {
    std::size_t dims = 0;
    std::size_t windows = 0;

    std::size_t length() const { return dims * windows * kPotOperators; }
    std::size_t index(std::size_t dim, std::size_t window, std::size_t op) const {
        return (dim * windows + window) * kPotOperators + op;
    }
};

struct PotVector {
    PotLayout layout;
    std::vector<double> values;
};

/// Half-open frame range.
struct FrameWindow {
    std::size_t begin = 0;
    std::size_t end = 0;
};

/// Level l splits [0, n) into 2^l equal windows; leftover frames join the
/// last window of the level. Levels are emitted coarse to fine.
std::vector<FrameWindow> pyramid_windows(std::size_t n, std::size_t levels);

std::size_t pyramid_window_count(std::size_t levels);

/// Frames where the series is absent are skipped by every operator; a
/// window with no present frame pools to zeros. Throws
/// std::invalid_argument when the series has fewer than 2^(levels-1) steps.
PotVector pot_features(const ChannelSeries &series, const PotConfig &cfg = {});

/// Concatenates the selected channels in face, pose, hat order.
PotVector pot_features(const std::array<ChannelSeries, kChannelCount> &channels, const PotConfig &cfg = {},
                       std::array<bool, kChannelCount> use = {true, true, true});

}  // namespace machan
