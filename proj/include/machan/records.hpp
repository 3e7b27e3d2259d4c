#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace machan {

enum class Channel : std::size_t { face = 0, pose = 1, hat = 2 };

inline constexpr std::size_t kChannelCount = 3;
inline constexpr std::array<std::string_view, kChannelCount> kChannelNames = {"face", "pose", "hat"};

/// Thrown for malformed or inconsistent input files. Carries the 1-based
/// line number when the problem is tied to a line.
class FormatError : public std::runtime_error {
public:
    FormatError(const std::string &what, std::size_t line = 0);
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// A time series of fixed-dimension feature vectors with per-step presence.
/// Absent steps hold zeros.
struct ChannelSeries {
    std::size_t dim = 0;
    std::vector<double> data;   // length() * dim, row-major
    std::vector<bool> present;  // one flag per step

    std::size_t length() const noexcept { return present.size(); }
    std::span<const double> at(std::size_t t) const { return {data.data() + t * dim, dim}; }
    std::span<double> at(std::size_t t) { return {data.data() + t * dim, dim}; }

    void push(std::span<const double> v);
    void push_absent();

    friend bool operator==(const ChannelSeries &, const ChannelSeries &) = default;
};

using ChannelDims = std::array<std::size_t, kChannelCount>;

/// One video as it arrives: frame-level features for every channel.
struct RawVideoRecord {
    std::string id;
    std::uint64_t likes = 0;
    std::uint64_t views = 1;
    double fps = 5.0;
    std::array<ChannelSeries, kChannelCount> channels;

    std::size_t frame_count() const { return channels[0].length(); }
    ChannelDims dims() const;

    /// Throws FormatError when the record breaks its invariants.
    void validate() const;
};

/// One video after volume pooling: T steps per channel plus the label.
struct VolumeSequence {
    std::string id;
    std::array<ChannelSeries, kChannelCount> channels;
    double y = 0.0;

    std::size_t length() const { return channels[0].length(); }
    ChannelDims dims() const;
    bool any_present(std::size_t t) const;

    void validate() const;

    friend bool operator==(const VolumeSequence &, const VolumeSequence &) = default;
};

// --- Feature files (JSON Lines) -------------------------------------------

/// Frame-level feature file. Empty files yield an empty list.
std::vector<RawVideoRecord> load_records(const std::filesystem::path &path);
std::vector<RawVideoRecord> parse_records(std::string_view text);
void save_records(const std::filesystem::path &path, const std::vector<RawVideoRecord> &records);

/// Pooled-dataset cache: same layout with "volumes" and "present" per channel
/// and the raw label under "y".
std::vector<VolumeSequence> load_volume_cache(const std::filesystem::path &path);
std::vector<VolumeSequence> parse_volume_cache(std::string_view text);
void save_volume_cache(const std::filesystem::path &path, const std::vector<VolumeSequence> &sequences);

/// Optional labels file: {"id": str, "y": num} per line.
std::map<std::string, double> load_labels(const std::filesystem::path &path);
/// Throws std::invalid_argument when a sequence id has no label.
void apply_labels(std::vector<VolumeSequence> &sequences, const std::map<std::string, double> &labels);

}  // namespace machan
