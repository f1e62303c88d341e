#include "scenmine/traj/track.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "scenmine/errors.hpp"

namespace scenmine::traj {

std::optional<std::size_t> Track::index_at(std::int64_t timestamp_ns) const {
  auto it = std::lower_bound(
      states.begin(), states.end(), timestamp_ns,
      [](const TrackState& s, std::int64_t ts) { return s.timestamp_ns < ts; });
  if (it == states.end() || it->timestamp_ns != timestamp_ns) return std::nullopt;
  return static_cast<std::size_t>(it - states.begin());
}

const Track* LogManifest::find_track(std::string_view track_id) const {
  for (const auto& t : tracks) {
    if (t.track_id == track_id) return &t;
  }
  return nullptr;
}

bool LogManifest::in_region(std::int64_t ts) const {
  if (!region) return true;
  return std::any_of(region->begin(), region->end(),
                     [ts](const TimeInterval& iv) { return iv.contains_ns(ts); });
}

const std::vector<std::string>& default_categories() {
  static const std::vector<std::string> kCategories = {
      "VEHICLE",
      "EGO_VEHICLE",
      "REGULAR_VEHICLE",
      "PEDESTRIAN",
      "BOLLARD",
      "CONSTRUCTION_CONE",
      "CONSTRUCTION_BARREL",
      "STOP_SIGN",
      "BICYCLE",
      "LARGE_VEHICLE",
      "WHEELED_DEVICE",
      "BUS",
      "BOX_TRUCK",
      "SIGN",
      "TRUCK",
      "MOTORCYCLE",
      "BICYCLIST",
      "VEHICULAR_TRAILER",
      "TRUCK_CAB",
      "MOTORCYCLIST",
      "DOG",
      "SCHOOL_BUS",
      "WHEELED_RIDER",
      "STROLLER",
      "ARTICULATED_BUS",
      "MESSAGE_BOARD_TRAILER",
      "MOBILE_PEDESTRIAN_SIGN",
      "WHEELCHAIR",
      "RAILED_VEHICLE",
      "OFFICIAL_SIGNALER",
      "TRAFFIC_LIGHT_TRAILER",
      "ANIMAL",
      "MOBILE_PEDESTRIAN_CROSSING_SIGN",
  };
  return kCategories;
}

bool category_matches(std::string_view query, std::string_view category) {
  if (query == "ANY" || query == category) return true;
  if (query == "VEHICLE") {
    static constexpr std::string_view kVehicles[] = {
        "REGULAR_VEHICLE", "LARGE_VEHICLE", "BUS",       "BOX_TRUCK",
        "TRUCK",           "TRUCK_CAB",     "SCHOOL_BUS", "ARTICULATED_BUS",
        "VEHICULAR_TRAILER", "RAILED_VEHICLE", "MOTORCYCLE"};
    return std::find(std::begin(kVehicles), std::end(kVehicles), category) !=
           std::end(kVehicles);
  }
  return false;
}

void validate(const TrackState& s) {
  const double norm = std::sqrt(s.qw * s.qw + s.qx * s.qx + s.qy * s.qy + s.qz * s.qz);
  if (!(std::abs(norm - 1.0) <= 1e-6)) {
    std::ostringstream msg;
    msg << "state at ts " << s.timestamp_ns << ": quaternion norm " << norm
        << " is not within 1e-6 of 1";
    throw InvalidInput(msg.str());
  }
  if (!(s.length > 0 && s.width > 0 && s.height > 0)) {
    std::ostringstream msg;
    msg << "state at ts " << s.timestamp_ns << ": box dimensions must be positive";
    throw InvalidInput(msg.str());
  }
}

void validate(const Track& track) {
  if (track.states.empty()) {
    throw InvalidInput("track '" + track.track_id + "' has no states");
  }
  for (std::size_t i = 0; i < track.states.size(); ++i) {
    validate(track.states[i]);
    if (i > 0 && track.states[i].timestamp_ns <= track.states[i - 1].timestamp_ns) {
      throw InvalidInput("track '" + track.track_id +
                         "' timestamps are not strictly increasing");
    }
  }
}

void validate(const LogManifest& log) {
  if (!(log.duration > 0)) throw InvalidInput("log '" + log.log_id + "': duration must be > 0");
  if (!(log.frame_rate > 0)) throw InvalidInput("log '" + log.log_id + "': frame_rate must be > 0");
  const std::int64_t end_ns = seconds_to_ns(log.duration);
  for (std::size_t k = 0; k < log.tracks.size(); ++k) {
    const Track& t = log.tracks[k];
    for (std::size_t m = 0; m < k; ++m) {
      if (log.tracks[m].track_id == t.track_id) {
        throw InvalidInput("log '" + log.log_id + "': duplicate track id '" + t.track_id + "'");
      }
    }
    validate(t);
    if (t.states.front().timestamp_ns < 0 || t.states.back().timestamp_ns > end_ns) {
      throw InvalidInput("log '" + log.log_id + "': track '" + t.track_id +
                         "' has timestamps outside [0, duration]");
    }
  }
}

}  // namespace scenmine::traj
