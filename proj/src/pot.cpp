#include "machan/pot.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace machan {

std::size_t pyramid_window_count(std::size_t levels) { return (std::size_t{1} << levels) - 1; }

std::vector<FrameWindow> pyramid_windows(std::size_t n, std::size_t levels) {
    if (levels == 0) throw std::invalid_argument("pyramid needs at least one level");
    if (n < (std::size_t{1} << (levels - 1))) {
        throw std::invalid_argument("series of " + std::to_string(n) + " steps is too short for " +
                                    std::to_string(levels) + " pyramid levels");
    }
    std::vector<FrameWindow> out;
    out.reserve(pyramid_window_count(levels));
    for (std::size_t l = 0; l < levels; ++l) {
        const std::size_t parts = std::size_t{1} << l;
        const std::size_t base = n / parts;
        for (std::size_t i = 0; i < parts; ++i) {
            std::size_t end = (i + 1 == parts) ? n : (i + 1) * base;
            out.push_back({i * base, end});
        }
    }
    return out;
}

PotVector pot_features(const ChannelSeries &series, const PotConfig &cfg) {
    const auto windows = pyramid_windows(series.length(), cfg.levels);
    PotVector out;
    out.layout = {series.dim, windows.size()};
    out.values.assign(out.layout.length(), 0.0);

    std::vector<double> xs;
    for (std::size_t d = 0; d < series.dim; ++d) {
        for (std::size_t w = 0; w < windows.size(); ++w) {
            xs.clear();
            for (std::size_t t = windows[w].begin; t < windows[w].end; ++t)
                if (series.present[t]) xs.push_back(series.data[t * series.dim + d]);
            if (xs.empty()) continue;

            const double n = static_cast<double>(xs.size());
            double mean = 0.0;
            for (double x : xs) mean += x;
            mean /= n;
            double var = 0.0;
            for (double x : xs) var += (x - mean) * (x - mean);
            var /= n;
            double mx = *std::max_element(xs.begin(), xs.end());

            double pos = 0.0, neg = 0.0;
            for (std::size_t i = 1; i < xs.size(); ++i) {
                double diff = xs[i] - xs[i - 1];
                if (cfg.grad == GradPooling::sums) {
                    if (diff > 0) pos += diff;
                    else if (diff < 0) neg -= diff;
                } else {
                    if (diff > 0) pos += 1.0;
                    else if (diff < 0) neg += 1.0;
                }
            }

            double *slot = out.values.data() + out.layout.index(d, w, 0);
            slot[0] = mean;
            slot[1] = std::sqrt(var);
            slot[2] = mx;
            slot[3] = pos;
            slot[4] = neg;
        }
    }
    return out;
}

PotVector pot_features(const std::array<ChannelSeries, kChannelCount> &channels, const PotConfig &cfg,
                       std::array<bool, kChannelCount> use) {
    PotVector out;
    out.layout.windows = pyramid_window_count(cfg.levels);
    for (std::size_t c = 0; c < kChannelCount; ++c) {
        if (!use[c]) continue;
        auto part = pot_features(channels[c], cfg);
        out.layout.dims += part.layout.dims;
        out.values.insert(out.values.end(), part.values.begin(), part.values.end());
    }
    if (out.layout.dims == 0) throw std::invalid_argument("no channel selected for pooling");
    return out;
}

}  // namespace machan
