#include "synthetic.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "scenmine/dsl/ast.hpp"

namespace scenmine::testing {

traj::TrackState make_state(std::int64_t ts_ns, double x, double y, double yaw, double length,
                            double width, double height) {
  traj::TrackState s;
  s.timestamp_ns = ts_ns;
  s.tx = x;
  s.ty = y;
  s.tz = 0.0;
  s.qw = std::cos(yaw / 2.0);
  s.qx = 0.0;
  s.qy = 0.0;
  s.qz = std::sin(yaw / 2.0);
  s.length = length;
  s.width = width;
  s.height = height;
  return s;
}

traj::Track make_track(std::string id, std::string category, double t0, double dt,
                       const std::vector<std::pair<double, double>>& xy,
                       const std::vector<double>& yaw) {
  traj::Track t;
  t.track_id = std::move(id);
  t.category = std::move(category);
  for (std::size_t i = 0; i < xy.size(); ++i) {
    t.states.push_back(make_state(traj::seconds_to_ns(t0 + dt * static_cast<double>(i)),
                                  xy[i].first, xy[i].second, yaw[i]));
  }
  return t;
}

traj::LogManifest random_log(std::mt19937_64& rng, std::size_t max_tracks, std::size_t steps,
                             const std::string& log_id) {
  static const char* kCats[] = {"REGULAR_VEHICLE", "PEDESTRIAN", "BUS", "BICYCLE",
                                "TRUCK", "PEDESTRIAN"};
  std::uniform_int_distribution<std::size_t> ntracks(1, max_tracks);
  std::uniform_real_distribution<double> pos(-12.0, 12.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  const double dt = 0.1;
  traj::LogManifest log;
  log.log_id = log_id;
  log.frame_rate = 10.0;
  log.duration = dt * static_cast<double>(steps);
  log.camera_ids = {"ring_front_center"};
  const std::size_t n = ntracks(rng);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t start = std::uniform_int_distribution<std::size_t>(0, steps - 1)(rng);
    std::size_t len = std::uniform_int_distribution<std::size_t>(1, steps - start)(rng);
    if (unit(rng) < 0.5) {
      start = 0;
      len = steps;
    }
    double x = pos(rng), y = pos(rng);
    double yaw = std::uniform_real_distribution<double>(-std::numbers::pi, std::numbers::pi)(rng);
    double speed = unit(rng) < 0.3 ? 0.0 : 8.0 * unit(rng);
    double yaw_rate = unit(rng) < 0.5 ? 0.0 : (unit(rng) - 0.5) * 1.2;
    const double accel = unit(rng) < 0.5 ? 0.0 : (unit(rng) - 0.5) * 6.0;
    traj::Track t;
    t.track_id = "t" + std::to_string(k);
    t.category = kCats[k % std::size(kCats)];
    for (std::size_t i = 0; i < len; ++i) {
      const std::int64_t ts = traj::seconds_to_ns(dt * static_cast<double>(start + i));
      t.states.push_back(make_state(ts, x, y, yaw));
      x += std::cos(yaw) * speed * dt + 0.02 * noise(rng);
      y += std::sin(yaw) * speed * dt + 0.02 * noise(rng);
      yaw += yaw_rate * dt;
      speed = std::max(0.0, speed + accel * dt);
    }
    log.tracks.push_back(std::move(t));
  }
  return log;
}

namespace {

std::string random_leaf(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, 11);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto num = [&](double lo, double hi) {
    return dsl::format_number(std::round((lo + (hi - lo) * unit(rng)) * 100.0) / 100.0);
  };
  switch (pick(rng)) {
    case 0: return R"(category("PEDESTRIAN"))";
    case 1: return R"(category("VEHICLE"))";
    case 2: return R"(category("BUS"))";
    case 3: return "stationary(max_speed=" + num(0.1, 2.0) + ")";
    case 4: return "moving(min_speed=" + num(0.1, 4.0) + ")";
    case 5:
      return std::string("turning(") + (unit(rng) < 0.5 ? "\"left\"" : "\"right\"") +
             ", min_yaw_rate=" + num(0.05, 0.4) + ")";
    case 6: return "accelerating(min_accel=" + num(0.2, 2.0) + ")";
    case 7: return "braking(min_decel=" + num(0.2, 2.0) + ")";
    case 8:
      return "speed_between(min_speed=" + num(0.0, 2.0) + ", max_speed=" + num(2.0, 8.0) + ")";
    case 9: return "heading_toward(max_angle=" + num(0.2, 1.5) + ")";
    default: return R"(category("ANY"))";
  }
}

std::string random_expr(std::mt19937_64& rng, int depth) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (depth <= 1 || unit(rng) < 0.25) return random_leaf(rng);
  auto sub = [&] { return random_expr(rng, depth - 1); };
  auto num = [&](double lo, double hi) {
    return dsl::format_number(std::round((lo + (hi - lo) * unit(rng)) * 10.0) / 10.0);
  };
  switch (std::uniform_int_distribution<int>(0, 8)(rng)) {
    case 0: return "and(" + sub() + ", " + sub() + ")";
    case 1: return "or(" + sub() + ", " + sub() + ")";
    case 2: return "not(" + sub() + ")";
    case 3: return "has_in_front(" + sub() + ", " + sub() + ", within=" + num(3, 20) + ")";
    case 4:
      return "has_behind(" + sub() + ", " + sub() + ", lateral_tolerance=" + num(1, 6) + ")";
    case 5: return "has_to_left(" + sub() + ", " + sub() + ", within=" + num(3, 20) + ")";
    case 6:
      return "has_to_right(" + sub() + ", " + sub() + ", longitudinal_tolerance=" + num(1, 8) +
             ")";
    case 7: return "near(" + sub() + ", " + sub() + ", distance=" + num(2, 15) + ")";
    default: return "being_crossed_by(" + sub() + ", " + sub() + ", within=" + num(5, 25) + ")";
  }
}

}  // namespace

std::string random_program(std::mt19937_64& rng, int max_depth) {
  return "output(" + random_expr(rng, max_depth) + ")";
}

traj::Track behavior_track(std::mt19937_64& rng, int behavior, std::size_t length,
                           const std::string& id, double dt) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  double x = -10.0 + 20.0 * unit(rng);
  double y = -10.0 + 20.0 * unit(rng);
  double yaw = (unit(rng) - 0.5) * 0.6;
  double speed = 6.0 + 4.0 * unit(rng);
  double yaw_rate = 0.0;
  double accel = 0.0;
  // Lane changes shift 3.5 m sideways along a smoothstep profile centered on
  // the track, with the heading following the path.
  double lane_sign = 0.0;
  switch (behavior) {
    case 1: speed = 0.0; break;
    case 2: yaw_rate = 0.35 + 0.1 * unit(rng); break;
    case 3: yaw_rate = -(0.35 + 0.1 * unit(rng)); break;
    case 4: speed = 2.0 + unit(rng); accel = 2.0 + unit(rng); break;
    case 5: speed = 14.0 + 2.0 * unit(rng); accel = -(2.0 + unit(rng)); break;
    case 6: lane_sign = 1.0; break;
    case 7: lane_sign = -1.0; break;
    default: break;
  }
  const double mid = 0.5 * dt * static_cast<double>(length);
  const double span = 2.5;
  traj::Track t;
  t.track_id = id;
  t.category = behavior == 1 ? "PEDESTRIAN" : "REGULAR_VEHICLE";
  for (std::size_t i = 0; i < length; ++i) {
    const double u = (dt * static_cast<double>(i) - mid) / span + 0.5;
    const double lateral_speed =
        (u > 0.0 && u < 1.0) ? lane_sign * 3.5 * 6.0 * u * (1.0 - u) / span : 0.0;
    const double heading = yaw + std::atan2(lateral_speed, std::max(speed, 1e-3));
    const double jitter = 0.01 * noise(rng);
    t.states.push_back(make_state(traj::seconds_to_ns(dt * static_cast<double>(i)), x, y,
                                  heading + jitter));
    x += (std::cos(yaw) * speed - std::sin(yaw) * lateral_speed) * dt;
    y += (std::sin(yaw) * speed + std::cos(yaw) * lateral_speed) * dt;
    yaw += yaw_rate * dt;
    speed = std::max(0.0, speed + accel * dt);
  }
  return t;
}

}  // namespace scenmine::testing
