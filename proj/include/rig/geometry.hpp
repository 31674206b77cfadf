#pragma once

#include <cmath>
#include <numbers>

namespace rig {

// Ground-plane frame follows the simulator convention: x forward/east,
// y to the right, heading rotates +x toward +y. "Left" is negative y in an
// ego frame, which is why a left turn needs negative steer.

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator*(double k) const { return {x * k, y * k}; }
  constexpr Vec2 operator-() const { return {-x, -y}; }
  constexpr Vec2& operator+=(Vec2 o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  constexpr bool operator==(const Vec2&) const = default;
};

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }
inline Vec2 unit(Vec2 a) {
  const double n = norm(a);
  return n > 0.0 ? a * (1.0 / n) : Vec2{};
}
/// Rotates by +90 degrees in the heading sense (toward +y).
constexpr Vec2 perp(Vec2 a) { return {-a.y, a.x}; }
inline Vec2 rotate(Vec2 a, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * a.x - s * a.y, s * a.x + c * a.y};
}
inline Vec2 heading_vector(double heading) { return {std::cos(heading), std::sin(heading)}; }

/// Wraps an angle into (-pi, pi].
inline double normalize_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

struct Pose {
  Vec2 position;
  double heading = 0.0;
};

/// World point into the frame of `frame` (x forward, y right).
inline Vec2 to_local(const Pose& frame, Vec2 world) {
  const Vec2 d = world - frame.position;
  const double c = std::cos(frame.heading), s = std::sin(frame.heading);
  return {c * d.x + s * d.y, -s * d.x + c * d.y};
}

inline Vec2 to_world(const Pose& frame, Vec2 local) {
  const double c = std::cos(frame.heading), s = std::sin(frame.heading);
  return {frame.position.x + c * local.x - s * local.y, frame.position.y + s * local.x + c * local.y};
}

/// Rotation about the origin followed by a translation.
struct RigidTransform {
  double rotation = 0.0;
  Vec2 translation;

  Vec2 apply(Vec2 p) const { return rotate(p, rotation) + translation; }
  double apply_heading(double h) const { return normalize_angle(h + rotation); }
  Pose apply(const Pose& p) const { return {apply(p.position), apply_heading(p.heading)}; }
};

struct OrientedBox {
  Vec2 center;
  double heading = 0.0;
  Vec2 half_extent;  // (half length, half width)
};

bool contains(const OrientedBox& box, Vec2 p);
bool overlaps(const OrientedBox& a, const OrientedBox& b);

struct SegmentProjection {
  double t = 0.0;         // parameter along segment in [0, 1]
  double distance = 0.0;  // unsigned distance to the segment
};

SegmentProjection project_on_segment(Vec2 p, Vec2 a, Vec2 b);

}  // namespace rig
