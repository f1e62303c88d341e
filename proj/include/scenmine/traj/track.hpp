#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace scenmine::traj {

inline constexpr std::int64_t kNanosPerSecond = 1'000'000'000;
inline constexpr int kStateDim = 10;

using Feature = std::array<double, kStateDim>;
using Vec3 = std::array<double, 3>;

inline std::int64_t seconds_to_ns(double s) {
  return static_cast<std::int64_t>(s * 1e9 + (s >= 0 ? 0.5 : -0.5));
}
inline double ns_to_seconds(std::int64_t ns) {
  return static_cast<double>(ns) / 1e9;
}

struct Quaternion {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

// One box observation. Position is in the per-timestamp ego frame (meters),
// orientation a unit quaternion, dimensions in meters.
struct TrackState {
  std::int64_t timestamp_ns = 0;
  double tx = 0.0, ty = 0.0, tz = 0.0;
  double qw = 1.0, qx = 0.0, qy = 0.0, qz = 0.0;
  double length = 1.0, width = 1.0, height = 1.0;

  Quaternion orientation() const { return {qw, qx, qy, qz}; }
  // [tx, ty, tz, qw, qx, qy, qz, l, w, h]
  Feature features() const {
    return {tx, ty, tz, qw, qx, qy, qz, length, width, height};
  }

  bool operator==(const TrackState&) const = default;
};

struct Track {
  std::string track_id;
  std::string category;
  std::vector<TrackState> states;

  std::size_t size() const { return states.size(); }
  // Index of the state at exactly `timestamp_ns`, if any.
  std::optional<std::size_t> index_at(std::int64_t timestamp_ns) const;

  bool operator==(const Track&) const = default;
};

// Closed time interval in seconds from log start.
struct TimeInterval {
  double start = 0.0;
  double end = 0.0;

  bool contains_ns(std::int64_t ts) const {
    return ts >= seconds_to_ns(start) && ts <= seconds_to_ns(end);
  }
  bool operator==(const TimeInterval&) const = default;
};

struct LogManifest {
  std::string log_id;
  double duration = 0.0;    // seconds
  double frame_rate = 0.0;  // Hz
  std::vector<std::string> camera_ids;
  std::vector<Track> tracks;
  // Set by coarse filtering: only cells inside these intervals are evaluated
  // and reported. Absent means the whole log.
  std::optional<std::vector<TimeInterval>> region;

  const Track* find_track(std::string_view track_id) const;
  bool in_region(std::int64_t ts) const;

  bool operator==(const LogManifest&) const = default;
};

// Default category vocabulary: the Argoverse 2 object classes plus the
// VEHICLE super-category and EGO_VEHICLE.
const std::vector<std::string>& default_categories();

// True when `category` names `query` or `query` is a super-category that
// contains it ("VEHICLE" covers the motor-vehicle classes, "ANY" covers all).
bool category_matches(std::string_view query, std::string_view category);

// Invariant checks; throw InvalidInput with a message naming the offender.
void validate(const TrackState& state);
void validate(const Track& track);
void validate(const LogManifest& log);

}  // namespace scenmine::traj
