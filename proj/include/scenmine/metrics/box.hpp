#pragma once

#include <array>
#include <vector>

#include "scenmine/traj/track.hpp"

namespace scenmine::metrics {

// Upright 3D box: center, full extents, heading about +z (radians).
struct Box3D {
  double cx = 0.0, cy = 0.0, cz = 0.0;
  double length = 1.0, width = 1.0, height = 1.0;
  double yaw = 0.0;

  bool operator==(const Box3D&) const = default;
};

using Point2 = std::array<double, 2>;

Box3D box_from_state(const traj::TrackState& state);

// Footprint corners, counter-clockwise.
std::vector<Point2> footprint(const Box3D& box);

// Shoelace area; positive for counter-clockwise input.
double polygon_area(const std::vector<Point2>& poly);

// Intersection of two convex counter-clockwise polygons (Sutherland-Hodgman).
std::vector<Point2> clip_convex(const std::vector<Point2>& subject,
                                const std::vector<Point2>& clip);

// Footprint intersection area times vertical overlap, over the union volume.
// Zero-volume pairs score 0.
double iou_3d(const Box3D& a, const Box3D& b);

}  // namespace scenmine::metrics
