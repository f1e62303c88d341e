#pragma once

#include <filesystem>

#include "scenmine/matcher/model.hpp"
#include "scenmine/traj/norm.hpp"

namespace scenmine::matcher {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  Model model;
  traj::NormStats norm;
};

// Binary layout, little endian: "SMCK", u32 version, u32 config length, the
// config as JSON, u32 tensor count, then per tensor u32 name length, name,
// u32 rows, u32 cols and rows*cols float32 values (row-major). The norm
// statistics are stored as tensors "norm.mean" and "norm.std".
void save_checkpoint(const std::filesystem::path& path, const Model& model,
                     const traj::NormStats& norm);
// Throws FormatError on bad magic, version mismatch, truncation or a tensor
// set that does not match the stored config.
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string config_to_json(const MatcherConfig& cfg);
MatcherConfig config_from_json(const std::string& text);

}  // namespace scenmine::matcher
