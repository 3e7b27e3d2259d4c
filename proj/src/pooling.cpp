#include "machan/pooling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "machan/labels.hpp"

namespace machan {

RawVideoRecord downsample(const RawVideoRecord &record, double target_fps) {
    if (!(target_fps > 0.0)) throw std::invalid_argument("target fps must be positive");
    if (record.fps < target_fps) {
        throw std::invalid_argument(record.id + ": fps " + std::to_string(record.fps) + " is below target " +
                                    std::to_string(target_fps));
    }
    RawVideoRecord out;
    out.id = record.id;
    out.likes = record.likes;
    out.views = record.views;
    out.fps = target_fps;
    for (std::size_t c = 0; c < kChannelCount; ++c) out.channels[c].dim = record.channels[c].dim;

    const double ratio = record.fps / target_fps;
    const std::size_t n = record.frame_count();
    for (std::size_t k = 0;; ++k) {
        auto idx = static_cast<std::size_t>(std::llround(static_cast<double>(k) * ratio));
        if (idx >= n) break;
        for (std::size_t c = 0; c < kChannelCount; ++c) {
            const auto &src = record.channels[c];
            if (src.present[idx]) out.channels[c].push(src.at(idx));
            else out.channels[c].push_absent();
        }
    }
    return out;
}

std::size_t volume_count(std::size_t frames, const VolumeConfig &cfg) {
    if (cfg.window == 0 || cfg.stride == 0) throw std::invalid_argument("window and stride must be positive");
    if (frames < cfg.window) return 0;
    return (frames - cfg.window) / cfg.stride + 1;
}

VolumeSequence pool_volumes(const RawVideoRecord &record, const VolumeConfig &cfg) {
    const std::size_t n = record.frame_count();
    if (n < cfg.window) {
        throw std::invalid_argument(record.id + ": " + std::to_string(n) + " frames is shorter than the " +
                                    std::to_string(cfg.window) + "-frame window");
    }
    VolumeSequence out;
    out.id = record.id;
    out.y = compute_popularity(record.likes, record.views);
    for (std::size_t c = 0; c < kChannelCount; ++c) out.channels[c].dim = record.channels[c].dim;

    const std::size_t count = volume_count(n, cfg);
    std::vector<double> pooled;
    std::array<bool, kChannelCount> seen{};
    std::array<std::vector<double>, kChannelCount> maxima;

    for (std::size_t v = 0; v < count; ++v) {
        const std::size_t start = v * cfg.stride;
        bool any = false;
        for (std::size_t c = 0; c < kChannelCount; ++c) {
            const auto &src = record.channels[c];
            auto &mx = maxima[c];
            mx.assign(src.dim, -std::numeric_limits<double>::infinity());
            seen[c] = false;
            for (std::size_t t = start; t < start + cfg.window; ++t) {
                if (!src.present[t]) continue;
                seen[c] = true;
                auto frame = src.at(t);
                for (std::size_t i = 0; i < src.dim; ++i) mx[i] = std::max(mx[i], frame[i]);
            }
            any = any || seen[c];
        }
        if (!any) continue;
        for (std::size_t c = 0; c < kChannelCount; ++c) {
            if (seen[c]) out.channels[c].push(maxima[c]);
            else out.channels[c].push_absent();
        }
    }
    return out;
}

}  // namespace machan
