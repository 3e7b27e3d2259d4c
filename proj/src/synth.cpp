#include "machan/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace machan {

using nlohmann::json;

void SynthConfig::validate() const {
    if (videos == 0) throw std::invalid_argument("synth needs at least one video");
    if (t_min == 0 || t_max < t_min) throw std::invalid_argument("invalid T range");
    for (auto d : dims)
        if (d < 2) throw std::invalid_argument("synthetic channel dims must be at least 2");
    if (segment_min == 0 || segment_max < segment_min) throw std::invalid_argument("invalid segment length range");
    if (t_min < segment_min) throw std::invalid_argument("t_min must be at least segment_min");
    if (sigma < 0) throw std::invalid_argument("sigma must be non-negative");
    if (absent_prob < 0 || absent_prob >= 1) throw std::invalid_argument("absent_prob must be in [0, 1)");
    const auto dmax = *std::max_element(dims.begin(), dims.end());
    if (!readout.empty() && readout.size() < dmax) throw std::invalid_argument("readout shorter than largest channel");
}

namespace {

std::vector<double> unit_vector(std::size_t d, std::mt19937_64 &rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> v(d);
    double norm = 0.0;
    do {
        norm = 0.0;
        for (auto &x : v) {
            x = normal(rng);
            norm += x * x;
        }
    } while (norm == 0.0);
    norm = std::sqrt(norm);
    for (auto &x : v) x /= norm;
    return v;
}

// r splits into parts of length [lo, hi] iff some k has k*lo <= r <= k*hi.
bool partitionable(std::size_t r, std::size_t lo, std::size_t hi) {
    if (r == 0) return true;
    const std::size_t k = (r + hi - 1) / hi;
    return k * lo <= r;
}

std::vector<std::size_t> segment_lengths(std::size_t T, std::size_t lo, std::size_t hi, std::mt19937_64 &rng) {
    std::vector<std::size_t> out;
    std::vector<std::size_t> options;
    if (!partitionable(T, lo, hi))
        throw std::invalid_argument("length " + std::to_string(T) + " cannot be split into segments of the configured lengths");
    std::size_t left = T;
    while (left > 0) {
        options.clear();
        for (std::size_t len = lo; len <= std::min(hi, left); ++len)
            if (partitionable(left - len, lo, hi)) options.push_back(len);
        std::uniform_int_distribution<std::size_t> pick(0, options.size() - 1);
        out.push_back(options[pick(rng)]);
        left -= out.back();
    }
    return out;
}

}  // namespace

SynthData generate(const SynthConfig &cfg) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    SynthData out;
    for (std::size_t c = 0; c < kChannelCount; ++c) out.directions[c] = unit_vector(cfg.dims[c], rng);
    out.readout = cfg.readout.empty() ? unit_vector(*std::max_element(cfg.dims.begin(), cfg.dims.end()), rng)
                                      : cfg.readout;

    std::uniform_int_distribution<std::size_t> length_dist(cfg.t_min, cfg.t_max);
    std::uniform_int_distribution<int> first_mode(0, static_cast<int>(kChannelCount) - 1);
    std::uniform_int_distribution<int> next_offset(1, static_cast<int>(kChannelCount) - 1);

    const int width = static_cast<int>(std::to_string(cfg.videos - 1).size());
    std::vector<double> frame;

    for (std::size_t v = 0; v < cfg.videos; ++v) {
        std::ostringstream id;
        id << "synth-" << std::setw(width) << std::setfill('0') << v;

        VolumeSequence seq;
        seq.id = id.str();
        for (std::size_t c = 0; c < kChannelCount; ++c) seq.channels[c].dim = cfg.dims[c];

        const std::size_t T = length_dist(rng);
        std::vector<int> modes;
        modes.reserve(T);
        int mode = first_mode(rng);
        for (std::size_t len : segment_lengths(T, cfg.segment_min, cfg.segment_max, rng)) {
            modes.insert(modes.end(), len, mode);
            mode = (mode + next_offset(rng)) % static_cast<int>(kChannelCount);
        }

        double label_sum = 0.0;
        for (std::size_t t = 0; t < T; ++t) {
            const double z = normal(rng);
            for (std::size_t c = 0; c < kChannelCount; ++c) {
                const bool active = static_cast<int>(c) == modes[t];
                frame.assign(cfg.dims[c], 0.0);
                for (auto &x : frame) x = cfg.sigma * normal(rng);
                const bool absent = !active && cfg.absent_prob > 0 && unif(rng) < cfg.absent_prob;
                if (absent) {
                    seq.channels[c].push_absent();
                    continue;
                }
                if (active) {
                    for (std::size_t i = 0; i < frame.size(); ++i) frame[i] += cfg.signal * z * out.directions[c][i];
                    frame[0] += cfg.marker;
                    double contribution = 0.0;
                    for (std::size_t i = 0; i < frame.size(); ++i) contribution += frame[i] * out.readout[i];
                    label_sum += contribution;
                }
                seq.channels[c].push(frame);
            }
        }
        seq.y = label_sum / static_cast<double>(T);
        out.sequences.push_back(std::move(seq));
        out.modes.push_back(std::move(modes));
    }
    return out;
}

double oracle_label(const VolumeSequence &seq, std::span<const int> modes, std::span<const double> readout) {
    if (modes.size() != seq.length()) throw std::invalid_argument("modes and sequence lengths differ");
    double total = 0.0;
    for (std::size_t t = 0; t < modes.size(); ++t) {
        const auto &ch = seq.channels.at(static_cast<std::size_t>(modes[t]));
        if (!ch.present[t]) throw std::invalid_argument("active channel absent at step " + std::to_string(t));
        const double *x = ch.data.data() + t * ch.dim;
        double dot = 0.0;
        for (std::size_t i = 0; i < ch.dim; ++i) dot += x[i] * readout[i];
        total += dot;
    }
    return total / static_cast<double>(modes.size());
}

void write_synth(const std::filesystem::path &dir, const SynthData &data, std::size_t frames_per_step) {
    std::filesystem::create_directories(dir);
    save_volume_cache(dir / "dataset.jsonl", data.sequences);
    {
        std::ofstream labels(dir / "labels.jsonl", std::ios::trunc);
        std::ofstream modes(dir / "modes.jsonl", std::ios::trunc);
        if (!labels || !modes) throw FormatError("cannot write into " + dir.string());
        for (std::size_t i = 0; i < data.sequences.size(); ++i) {
            labels << json{{"id", data.sequences[i].id}, {"y", data.sequences[i].y}}.dump() << '\n';
            modes << json{{"id", data.sequences[i].id}, {"modes", data.modes[i]}}.dump() << '\n';
        }
    }
    if (frames_per_step == 0) return;

    std::vector<RawVideoRecord> records;
    for (const auto &seq : data.sequences) {
        RawVideoRecord r;
        r.id = seq.id;
        r.likes = 0;
        r.views = 1;
        r.fps = 5.0;
        for (std::size_t c = 0; c < kChannelCount; ++c) {
            const auto &src = seq.channels[c];
            auto &dst = r.channels[c];
            dst.dim = src.dim;
            for (std::size_t t = 0; t < src.length(); ++t)
                for (std::size_t k = 0; k < frames_per_step; ++k) {
                    if (src.present[t]) dst.push(src.at(t));
                    else dst.push_absent();
                }
        }
        records.push_back(std::move(r));
    }
    save_records(dir / "frames.jsonl", records);
}

std::map<std::string, std::vector<int>> load_modes(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path.string());
    std::map<std::string, std::vector<int>> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            auto j = json::parse(line);
            auto modes = j.at("modes").get<std::vector<int>>();
            for (int m : modes)
                if (m < 0 || m >= static_cast<int>(kChannelCount)) throw FormatError("mode out of range", line_no);
            out[j.at("id").get<std::string>()] = std::move(modes);
        } catch (const json::exception &e) {
            throw FormatError(e.what(), line_no);
        }
    }
    return out;
}

namespace {

void tally(const AttentionTrace &trace, std::span<const int> modes, std::size_t &hits, std::size_t &total) {
    if (trace.steps.size() != modes.size())
        throw std::invalid_argument("trace has " + std::to_string(trace.steps.size()) + " steps, modes have " +
                                    std::to_string(modes.size()));
    for (std::size_t t = 0; t < modes.size(); ++t) {
        const auto &s = trace.steps[t];
        if (s.dropped) continue;
        ++total;
        if (s.selected == modes[t]) ++hits;
    }
}

}  // namespace

double score_attention(const AttentionTrace &trace, std::span<const int> modes) {
    std::size_t hits = 0, total = 0;
    tally(trace, modes, hits, total);
    if (total == 0) throw std::invalid_argument("every step was dropped; attention score undefined");
    return static_cast<double>(hits) / static_cast<double>(total);
}

double score_attention(std::span<const AttentionTrace> traces, std::span<const std::vector<int>> modes) {
    if (traces.size() != modes.size()) throw std::invalid_argument("trace and mode counts differ");
    std::size_t hits = 0, total = 0;
    for (std::size_t i = 0; i < traces.size(); ++i) tally(traces[i], modes[i], hits, total);
    if (total == 0) throw std::invalid_argument("every step was dropped; attention score undefined");
    return static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace machan
