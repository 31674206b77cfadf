#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rig/geometry.hpp"

namespace rig::sim {

struct PathProjection {
  double s = 0.0;         // station of the closest point
  double lateral = 0.0;   // signed offset, positive to the right of travel
  double distance = 0.0;  // |lateral| unless the point projects past an open end
  std::size_t segment = 0;
};

/// Polyline parameterized by arc length. Closed paths wrap stations modulo
/// their length.
class Path {
 public:
  Path() = default;
  Path(std::vector<Vec2> points, bool closed);

  double length() const { return length_; }
  bool closed() const { return closed_; }
  bool empty() const { return points_.size() < 2; }
  std::span<const Vec2> points() const { return points_; }
  std::span<const double> stations() const { return stations_; }
  std::size_t num_segments() const;

  /// Maps s into [0, length) for closed paths, clamps for open ones.
  double wrap(double s) const;
  Vec2 point_at(double s) const;
  double heading_at(double s) const;

  PathProjection project(Vec2 p) const;
  /// Closest point restricted to stations [s_begin, s_end]; s_end may exceed
  /// the length on closed paths. Returned s is unwrapped (>= s_begin).
  PathProjection project(Vec2 p, double s_begin, double s_end) const;

  Path transformed(const RigidTransform& tf) const;

 private:
  std::size_t segment_at(double wrapped_s) const;
  Vec2 segment_end(std::size_t seg) const;
  PathProjection project_segment(Vec2 p, std::size_t seg) const;

  std::vector<Vec2> points_;
  std::vector<double> stations_;  // station of each point
  double length_ = 0.0;
  bool closed_ = false;
};

}  // namespace rig::sim
