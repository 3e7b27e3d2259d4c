#pragma once

#include <cstddef>

#include "machan/records.hpp"

namespace machan {

struct VolumeConfig {
    std::size_t window = 11;
    std::size_t stride = 4;
};

/// Keeps frames round(k * fps / target_fps) for k = 0, 1, ... and sets fps to
/// target_fps. Throws std::invalid_argument when fps < target_fps.
RawVideoRecord downsample(const RawVideoRecord &record, double target_fps = 5.0);

/// Number of full windows over n frames, before dropping empty volumes.
std::size_t volume_count(std::size_t frames, const VolumeConfig &cfg = {});

/// Max-pools full windows (starts 0, stride, 2*stride, ...) coordinate-wise
/// over present frames. A channel absent in the whole window is absent in
/// the volume; volumes with every channel absent are dropped. The label is
/// the record's popularity. Throws std::invalid_argument for short records.
VolumeSequence pool_volumes(const RawVideoRecord &record, const VolumeConfig &cfg = {});

}  // namespace machan
