#include "scenmine/metrics/box.hpp"

#include <algorithm>
#include <cmath>

#include "scenmine/traj/kinematics.hpp"

namespace scenmine::metrics {

namespace {

double cross(const Point2& o, const Point2& a, const Point2& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

Point2 line_intersection(const Point2& p, const Point2& q, const Point2& a, const Point2& b) {
  // Point on segment p->q crossing the infinite line a->b.
  const double d1 = cross(a, b, p);
  const double d2 = cross(a, b, q);
  const double t = d1 / (d1 - d2);
  return {p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])};
}

}  // namespace

Box3D box_from_state(const traj::TrackState& s) {
  return {s.tx, s.ty, s.tz, s.length, s.width, s.height,
          traj::yaw_from_quaternion(s.orientation())};
}

std::vector<Point2> footprint(const Box3D& b) {
  const double c = std::cos(b.yaw), s = std::sin(b.yaw);
  const double hl = 0.5 * b.length, hw = 0.5 * b.width;
  const std::array<std::array<double, 2>, 4> local = {{{hl, hw}, {-hl, hw}, {-hl, -hw}, {hl, -hw}}};
  std::vector<Point2> out;
  out.reserve(4);
  for (const auto& [x, y] : local) out.push_back({b.cx + c * x - s * y, b.cy + s * x + c * y});
  return out;
}

double polygon_area(const std::vector<Point2>& poly) {
  if (poly.size() < 3) return 0.0;
  double twice = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& p = poly[i];
    const auto& q = poly[(i + 1) % poly.size()];
    twice += p[0] * q[1] - q[0] * p[1];
  }
  return 0.5 * twice;
}

std::vector<Point2> clip_convex(const std::vector<Point2>& subject,
                                const std::vector<Point2>& clip) {
  std::vector<Point2> out = subject;
  for (std::size_t e = 0; e < clip.size() && !out.empty(); ++e) {
    const Point2& a = clip[e];
    const Point2& b = clip[(e + 1) % clip.size()];
    std::vector<Point2> in = std::move(out);
    out.clear();
    for (std::size_t i = 0; i < in.size(); ++i) {
      const Point2& cur = in[i];
      const Point2& prev = in[(i + in.size() - 1) % in.size()];
      const bool cur_in = cross(a, b, cur) >= 0.0;
      const bool prev_in = cross(a, b, prev) >= 0.0;
      if (cur_in) {
        if (!prev_in) out.push_back(line_intersection(prev, cur, a, b));
        out.push_back(cur);
      } else if (prev_in) {
        out.push_back(line_intersection(prev, cur, a, b));
      }
    }
  }
  return out;
}

double iou_3d(const Box3D& a, const Box3D& b) {
  const double va = a.length * a.width * a.height;
  const double vb = b.length * b.width * b.height;
  if (!(va > 0.0) || !(vb > 0.0)) return 0.0;

  const double z_lo = std::max(a.cz - 0.5 * a.height, b.cz - 0.5 * b.height);
  const double z_hi = std::min(a.cz + 0.5 * a.height, b.cz + 0.5 * b.height);
  const double dz = z_hi - z_lo;
  if (dz <= 0.0) return 0.0;

  const double area = std::max(0.0, polygon_area(clip_convex(footprint(a), footprint(b))));
  const double inter = area * dz;
  const double uni = va + vb - inter;
  if (!(uni > 0.0)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

}  // namespace scenmine::metrics
