#include "machan/records.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "machan/labels.hpp"

namespace machan {

using nlohmann::json;

FormatError::FormatError(const std::string &what, std::size_t line)
    : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

void ChannelSeries::push(std::span<const double> v) {
    if (v.size() != dim) throw FormatError("vector of length " + std::to_string(v.size()) + ", expected " + std::to_string(dim));
    data.insert(data.end(), v.begin(), v.end());
    present.push_back(true);
}

void ChannelSeries::push_absent() {
    data.insert(data.end(), dim, 0.0);
    present.push_back(false);
}

namespace {

ChannelDims dims_of(const std::array<ChannelSeries, kChannelCount> &channels) {
    return {channels[0].dim, channels[1].dim, channels[2].dim};
}

void validate_channels(const std::array<ChannelSeries, kChannelCount> &channels, const std::string &id) {
    for (std::size_t c = 0; c < kChannelCount; ++c) {
        const auto &ch = channels[c];
        if (ch.dim == 0) throw FormatError(id + ": channel " + std::string(kChannelNames[c]) + " has dim 0");
        if (ch.data.size() != ch.length() * ch.dim) throw FormatError(id + ": channel storage inconsistent");
        if (ch.length() != channels[0].length()) throw FormatError(id + ": channels have unequal lengths");
        for (double v : ch.data)
            if (!std::isfinite(v)) throw FormatError(id + ": non-finite feature value");
    }
}

std::string read_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

template <typename F>
void for_each_line(std::string_view text, F f) {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        auto line = text.substr(pos, end - pos);
        ++line_no;
        pos = end + 1;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception &e) {
            throw FormatError(std::string("malformed JSON: ") + e.what(), line_no);
        }
        try {
            f(j, line_no);
        } catch (const FormatError &e) {
            if (e.line()) throw;
            throw FormatError(e.what(), line_no);
        } catch (const json::exception &e) {
            throw FormatError(std::string("bad field: ") + e.what(), line_no);
        }
    }
}

ChannelSeries parse_series(const json &ch, const char *key, const std::vector<bool> *present) {
    ChannelSeries s;
    auto dim = ch.at("dim").get<long long>();
    if (dim < 1) throw FormatError("channel dim must be positive");
    s.dim = static_cast<std::size_t>(dim);
    const auto &steps = ch.at(key);
    if (!steps.is_array()) throw FormatError(std::string(key) + " must be an array");
    std::vector<double> buf;
    for (const auto &step : steps) {
        if (step.is_null()) {
            s.push_absent();
            continue;
        }
        buf = step.get<std::vector<double>>();
        s.push(buf);
    }
    if (present) {
        if (present->size() != s.length()) throw FormatError("presence array length differs from volumes");
        for (std::size_t t = 0; t < s.length(); ++t)
            if ((*present)[t] != s.present[t]) throw FormatError("presence flag disagrees with null marker");
    }
    return s;
}

void check_dims_consistent(std::optional<ChannelDims> &seen, const ChannelDims &dims) {
    if (!seen) {
        seen = dims;
    } else if (*seen != dims) {
        throw FormatError("channel dimensions differ from earlier records");
    }
}

json series_to_json(const ChannelSeries &s, const char *key, bool with_presence) {
    json steps = json::array();
    for (std::size_t t = 0; t < s.length(); ++t) {
        if (!s.present[t]) {
            steps.push_back(nullptr);
        } else {
            auto v = s.at(t);
            steps.push_back(std::vector<double>(v.begin(), v.end()));
        }
    }
    json out = {{"dim", s.dim}, {key, std::move(steps)}};
    if (with_presence) out["present"] = std::vector<bool>(s.present.begin(), s.present.end());
    return out;
}

void write_lines(const std::filesystem::path &path, const std::vector<json> &lines) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write " + path.string());
    for (const auto &j : lines) out << j.dump() << '\n';
}

}  // namespace

ChannelDims RawVideoRecord::dims() const { return dims_of(channels); }

void RawVideoRecord::validate() const {
    if (views < 1) throw FormatError(id + ": views must be at least 1");
    if (!(fps > 0.0) || !std::isfinite(fps)) throw FormatError(id + ": fps must be positive");
    validate_channels(channels, id);
}

ChannelDims VolumeSequence::dims() const { return dims_of(channels); }

bool VolumeSequence::any_present(std::size_t t) const {
    for (const auto &ch : channels)
        if (ch.present[t]) return true;
    return false;
}

void VolumeSequence::validate() const {
    validate_channels(channels, id);
    if (!std::isfinite(y)) throw FormatError(id + ": non-finite label");
}

std::vector<RawVideoRecord> parse_records(std::string_view text) {
    std::vector<RawVideoRecord> records;
    std::optional<ChannelDims> dims;
    std::set<std::string> ids;
    for_each_line(text, [&](const json &j, std::size_t) {
        RawVideoRecord r;
        r.id = j.at("id").get<std::string>();
        auto likes = j.at("likes").get<long long>();
        auto views = j.at("views").get<long long>();
        if (likes < 0) throw FormatError(r.id + ": likes must be non-negative");
        if (views < 1) throw FormatError(r.id + ": views must be at least 1");
        r.likes = static_cast<std::uint64_t>(likes);
        r.views = static_cast<std::uint64_t>(views);
        r.fps = j.at("fps").get<double>();
        const auto &chans = j.at("channels");
        for (std::size_t c = 0; c < kChannelCount; ++c)
            r.channels[c] = parse_series(chans.at(std::string(kChannelNames[c])), "frames", nullptr);
        r.validate();
        check_dims_consistent(dims, r.dims());
        if (!ids.insert(r.id).second) throw FormatError("duplicate id " + r.id);
        records.push_back(std::move(r));
    });
    return records;
}

std::vector<RawVideoRecord> load_records(const std::filesystem::path &path) {
    return parse_records(read_file(path));
}

void save_records(const std::filesystem::path &path, const std::vector<RawVideoRecord> &records) {
    std::vector<json> lines;
    lines.reserve(records.size());
    for (const auto &r : records) {
        json chans;
        for (std::size_t c = 0; c < kChannelCount; ++c)
            chans[std::string(kChannelNames[c])] = series_to_json(r.channels[c], "frames", false);
        lines.push_back({{"id", r.id}, {"likes", r.likes}, {"views", r.views}, {"fps", r.fps}, {"channels", chans}});
    }
    write_lines(path, lines);
}

std::vector<VolumeSequence> parse_volume_cache(std::string_view text) {
    std::vector<VolumeSequence> out;
    std::optional<ChannelDims> dims;
    std::set<std::string> ids;
    for_each_line(text, [&](const json &j, std::size_t) {
        VolumeSequence s;
        s.id = j.at("id").get<std::string>();
        if (j.contains("y")) {
            s.y = j.at("y").get<double>();
        } else {
            auto likes = j.at("likes").get<long long>();
            auto views = j.at("views").get<long long>();
            if (likes < 0 || views < 1) throw FormatError(s.id + ": invalid likes/views");
            s.y = compute_popularity(static_cast<std::uint64_t>(likes), static_cast<std::uint64_t>(views));
        }
        const auto &chans = j.at("channels");
        for (std::size_t c = 0; c < kChannelCount; ++c) {
            const auto &ch = chans.at(std::string(kChannelNames[c]));
            auto present = ch.at("present").get<std::vector<bool>>();
            s.channels[c] = parse_series(ch, "volumes", &present);
        }
        s.validate();
        if (s.length() == 0) throw FormatError(s.id + ": sequence has no volumes");
        check_dims_consistent(dims, s.dims());
        if (!ids.insert(s.id).second) throw FormatError("duplicate id " + s.id);
        out.push_back(std::move(s));
    });
    return out;
}

std::vector<VolumeSequence> load_volume_cache(const std::filesystem::path &path) {
    return parse_volume_cache(read_file(path));
}

void save_volume_cache(const std::filesystem::path &path, const std::vector<VolumeSequence> &sequences) {
    std::vector<json> lines;
    lines.reserve(sequences.size());
    for (const auto &s : sequences) {
        json chans;
        for (std::size_t c = 0; c < kChannelCount; ++c)
            chans[std::string(kChannelNames[c])] = series_to_json(s.channels[c], "volumes", true);
        lines.push_back({{"id", s.id}, {"y", s.y}, {"channels", chans}});
    }
    write_lines(path, lines);
}

std::map<std::string, double> load_labels(const std::filesystem::path &path) {
    std::map<std::string, double> labels;
    for_each_line(read_file(path), [&](const json &j, std::size_t) {
        auto id = j.at("id").get<std::string>();
        double y = j.at("y").get<double>();
        if (!std::isfinite(y)) throw FormatError(id + ": non-finite label");
        if (!labels.emplace(id, y).second) throw FormatError("duplicate label for " + id);
    });
    return labels;
}

void apply_labels(std::vector<VolumeSequence> &sequences, const std::map<std::string, double> &labels) {
    for (auto &s : sequences) {
        auto it = labels.find(s.id);
        if (it == labels.end()) throw std::invalid_argument("no label for id " + s.id);
        s.y = it->second;
    }
}

}  // namespace machan
