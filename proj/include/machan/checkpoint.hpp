#pragma once

// Parameter checkpoint layout:
//
//   MACHAN1\n
//   {"config": {...}, "normalizer": {...} | null, "tensors": N}\n
//   N times:  <name> <rank> <extent>...\n  <8 * size bytes, little-endian doubles>\n
//
// Tensors are stored in parameter-id order, row-major.

#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"
#include "machan/labels.hpp"
#include "machan/model.hpp"

namespace machan {

inline constexpr const char *kCheckpointMagic = "MACHAN1";

nlohmann::json config_to_json(const ModelConfig &config);
ModelConfig config_from_json(const nlohmann::json &j);

struct Checkpoint {
    ModelParams params;
    std::optional<Normalizer> normalizer;
};

void save_checkpoint(const std::filesystem::path &path, const ModelParams &params,
                     const std::optional<Normalizer> &normalizer = std::nullopt);

/// Throws FormatError on a bad header, a layout that does not match the
/// stored config, or truncated data.
Checkpoint load_checkpoint(const std::filesystem::path &path);

}  // namespace machan
