#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

#include "scenmine/traj/track.hpp"

namespace scenmine::traj {

// Track log file: line-delimited JSON. The first line is a manifest header
//   {"kind":"manifest","log_id":..,"duration":..,"frame_rate":..,"camera_ids":[..]}
// and every following line is one track
//   {"log_id":..,"track_id":..,"category":..,"states":[{"ts_ns":..,"tx":..,
//    "ty":..,"tz":..,"qw":..,"qx":..,"qy":..,"qz":..,"l":..,"w":..,"h":..}]}
// Doubles are written with round-trip precision.
void write_log(std::ostream& out, const LogManifest& log);
LogManifest read_log(std::istream& in);

void write_log_file(const std::filesystem::path& path, const LogManifest& log);
LogManifest read_log_file(const std::filesystem::path& path);

// Loads every *.jsonl file in `dir`, keyed by log_id.
std::map<std::string, LogManifest> load_log_dir(const std::filesystem::path& dir);

}  // namespace scenmine::traj
