#include "rig/geometry.hpp"

#include <algorithm>
#include <array>

namespace rig {

bool contains(const OrientedBox& box, Vec2 p) {
  const Vec2 local = to_local({box.center, box.heading}, p);
  return std::abs(local.x) <= box.half_extent.x && std::abs(local.y) <= box.half_extent.y;
}

namespace {

// Half-width of `box` projected on unit axis `axis`.
double projected_radius(const OrientedBox& box, Vec2 axis) {
  const Vec2 ax = heading_vector(box.heading);
  const Vec2 ay = perp(ax);
  return box.half_extent.x * std::abs(dot(ax, axis)) + box.half_extent.y * std::abs(dot(ay, axis));
}

}  // namespace

bool overlaps(const OrientedBox& a, const OrientedBox& b) {
  const Vec2 d = b.center - a.center;
  const Vec2 ax = heading_vector(a.heading);
  const Vec2 bx = heading_vector(b.heading);
  const std::array<Vec2, 4> axes{ax, perp(ax), bx, perp(bx)};
  for (const Vec2& axis : axes) {
    if (std::abs(dot(d, axis)) > projected_radius(a, axis) + projected_radius(b, axis)) return false;
  }
  return true;
}

SegmentProjection project_on_segment(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  double t = len2 > 0.0 ? dot(p - a, ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return {t, distance(p, a + ab * t)};
}

}  // namespace rig
