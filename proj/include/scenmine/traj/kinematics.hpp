#pragma once

#include <cstddef>
#include <vector>

#include "scenmine/traj/track.hpp"

namespace scenmine::traj {

// Rotation about the vertical axis, in (-pi, pi]. Throws InvalidInput when
// the quaternion norm deviates from 1 by more than 1e-6.
double yaw_from_quaternion(const Quaternion& q);

// Wraps an angle into (-pi, pi].
double wrap_angle(double a);

// Central difference of position over time; one-sided at the endpoints.
// Throws InsufficientData for single-state tracks.
Vec3 estimate_velocity(const Track& track, std::size_t index);

double estimate_speed(const Track& track, std::size_t index);

// Yaw rate (rad/s) from the orientation sequence, same differencing scheme as
// estimate_velocity; angle differences are wrapped.
double estimate_yaw_rate(const Track& track, std::size_t index);

// Rate of change of planar speed (m/s^2).
double estimate_acceleration(const Track& track, std::size_t index);

// Per-index kinematic series for a whole track. Empty series for tracks with
// fewer than two states.
struct KinematicSeries {
  std::vector<Vec3> velocity;
  std::vector<double> speed;
  std::vector<double> yaw;
  std::vector<double> yaw_rate;
  std::vector<double> acceleration;
};

KinematicSeries compute_kinematics(const Track& track);

}  // namespace scenmine::traj
