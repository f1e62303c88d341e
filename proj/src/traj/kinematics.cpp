#include "scenmine/traj/kinematics.hpp"

#include <cmath>
#include <numbers>

#include "scenmine/errors.hpp"

namespace scenmine::traj {

namespace {

// Neighbor pair used for differencing at `index`.
std::pair<std::size_t, std::size_t> difference_span(const Track& track, std::size_t index) {
  const std::size_t n = track.states.size();
  if (n < 2) {
    throw InsufficientData("track '" + track.track_id +
                           "' needs at least 2 states for differencing");
  }
  if (index >= n) throw InvalidInput("state index out of range");
  if (index == 0) return {0, 1};
  if (index == n - 1) return {n - 2, n - 1};
  return {index - 1, index + 1};
}

double dt_seconds(const TrackState& a, const TrackState& b) {
  return ns_to_seconds(b.timestamp_ns - a.timestamp_ns);
}

}  // namespace

double wrap_angle(double a) {
  constexpr double kPi = std::numbers::pi;
  a = std::remainder(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

double yaw_from_quaternion(const Quaternion& q) {
  const double norm = std::sqrt(q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z);
  if (!(std::abs(norm - 1.0) <= 1e-6)) {
    throw InvalidInput("yaw_from_quaternion: quaternion is not unit norm");
  }
  const double siny = 2.0 * (q.w * q.z + q.x * q.y);
  const double cosy = 1.0 - 2.0 * (q.y * q.y + q.z * q.z);
  const double yaw = std::atan2(siny, cosy);
  return yaw <= -std::numbers::pi ? std::numbers::pi : yaw;
}

Vec3 estimate_velocity(const Track& track, std::size_t index) {
  const auto [lo, hi] = difference_span(track, index);
  const auto& a = track.states[lo];
  const auto& b = track.states[hi];
  const double dt = dt_seconds(a, b);
  return {(b.tx - a.tx) / dt, (b.ty - a.ty) / dt, (b.tz - a.tz) / dt};
}

double estimate_speed(const Track& track, std::size_t index) {
  const Vec3 v = estimate_velocity(track, index);
  return std::hypot(v[0], v[1]);
}

double estimate_yaw_rate(const Track& track, std::size_t index) {
  const auto [lo, hi] = difference_span(track, index);
  const double y0 = yaw_from_quaternion(track.states[lo].orientation());
  const double y1 = yaw_from_quaternion(track.states[hi].orientation());
  return wrap_angle(y1 - y0) / dt_seconds(track.states[lo], track.states[hi]);
}

double estimate_acceleration(const Track& track, std::size_t index) {
  const auto [lo, hi] = difference_span(track, index);
  return (estimate_speed(track, hi) - estimate_speed(track, lo)) /
         dt_seconds(track.states[lo], track.states[hi]);
}

KinematicSeries compute_kinematics(const Track& track) {
  KinematicSeries k;
  const std::size_t n = track.states.size();
  if (n < 2) return k;
  k.velocity.resize(n);
  k.speed.resize(n);
  k.yaw.resize(n);
  k.yaw_rate.resize(n);
  k.acceleration.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    k.velocity[i] = estimate_velocity(track, i);
    k.speed[i] = std::hypot(k.velocity[i][0], k.velocity[i][1]);
    k.yaw[i] = yaw_from_quaternion(track.states[i].orientation());
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto [lo, hi] = difference_span(track, i);
    const double dt = dt_seconds(track.states[lo], track.states[hi]);
    k.yaw_rate[i] = wrap_angle(k.yaw[hi] - k.yaw[lo]) / dt;
    k.acceleration[i] = (k.speed[hi] - k.speed[lo]) / dt;
  }
  return k;
}

}  // namespace scenmine::traj
