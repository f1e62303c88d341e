#include "scenmine/traj/log_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "scenmine/errors.hpp"

namespace scenmine::traj {

using nlohmann::json;

namespace {

json state_to_json(const TrackState& s) {
  return json{{"ts_ns", s.timestamp_ns}, {"tx", s.tx}, {"ty", s.ty}, {"tz", s.tz},
              {"qw", s.qw},            {"qx", s.qx}, {"qy", s.qy}, {"qz", s.qz},
              {"l", s.length},         {"w", s.width}, {"h", s.height}};
}

TrackState state_from_json(const json& j) {
  TrackState s;
  s.timestamp_ns = j.at("ts_ns").get<std::int64_t>();
  s.tx = j.at("tx").get<double>();
  s.ty = j.at("ty").get<double>();
  s.tz = j.at("tz").get<double>();
  s.qw = j.at("qw").get<double>();
  s.qx = j.at("qx").get<double>();
  s.qy = j.at("qy").get<double>();
  s.qz = j.at("qz").get<double>();
  s.length = j.at("l").get<double>();
  s.width = j.at("w").get<double>();
  s.height = j.at("h").get<double>();
  return s;
}

}  // namespace

void write_log(std::ostream& out, const LogManifest& log) {
  json header{{"kind", "manifest"},
              {"log_id", log.log_id},
              {"duration", log.duration},
              {"frame_rate", log.frame_rate},
              {"camera_ids", log.camera_ids}};
  out << header.dump() << '\n';
  for (const auto& track : log.tracks) {
    json states = json::array();
    for (const auto& s : track.states) states.push_back(state_to_json(s));
    json line{{"log_id", log.log_id},
              {"track_id", track.track_id},
              {"category", track.category},
              {"states", std::move(states)}};
    out << line.dump() << '\n';
  }
}

LogManifest read_log(std::istream& in) {
  LogManifest log;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw FormatError("log line " + std::to_string(line_no) + ": " + e.what());
    }
    try {
      if (!have_header) {
        if (j.value("kind", "") != "manifest") {
          throw FormatError("log line 1: expected manifest header");
        }
        log.log_id = j.at("log_id").get<std::string>();
        log.duration = j.at("duration").get<double>();
        log.frame_rate = j.at("frame_rate").get<double>();
        log.camera_ids = j.at("camera_ids").get<std::vector<std::string>>();
        have_header = true;
        continue;
      }
      Track track;
      if (j.at("log_id").get<std::string>() != log.log_id) {
        throw FormatError("log line " + std::to_string(line_no) +
                          ": track belongs to a different log");
      }
      track.track_id = j.at("track_id").get<std::string>();
      track.category = j.at("category").get<std::string>();
      for (const auto& s : j.at("states")) track.states.push_back(state_from_json(s));
      log.tracks.push_back(std::move(track));
    } catch (const json::exception& e) {
      throw FormatError("log line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!have_header) throw FormatError("log file has no manifest header");
  validate(log);
  return log;
}

void write_log_file(const std::filesystem::path& path, const LogManifest& log) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  write_log(out, log);
}

LogManifest read_log_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  return read_log(in);
}

std::map<std::string, LogManifest> load_log_dir(const std::filesystem::path& dir) {
  std::map<std::string, LogManifest> logs;
  if (!std::filesystem::is_directory(dir)) {
    throw FormatError("log directory " + dir.string() + " does not exist");
  }
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".jsonl") continue;
    LogManifest log = read_log_file(entry.path());
    std::string id = log.log_id;
    logs.emplace(std::move(id), std::move(log));
  }
  return logs;
}

}  // namespace scenmine::traj
