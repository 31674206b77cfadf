#include "rig/simworld/path.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace rig::sim {

Path::Path(std::vector<Vec2> points, bool closed) : points_(std::move(points)), closed_(closed) {
  if (points_.size() < 2) throw std::invalid_argument("Path needs at least two points");
  stations_.resize(points_.size());
  stations_[0] = 0.0;
  for (std::size_t i = 1; i < points_.size(); ++i)
    stations_[i] = stations_[i - 1] + distance(points_[i - 1], points_[i]);
  length_ = stations_.back();
  if (closed_) length_ += distance(points_.back(), points_.front());
  if (!(length_ > 0.0)) throw std::invalid_argument("Path has zero length");
}

std::size_t Path::num_segments() const {
  if (points_.size() < 2) return 0;
  return closed_ ? points_.size() : points_.size() - 1;
}

double Path::wrap(double s) const {
  if (closed_) {
    s = std::fmod(s, length_);
    if (s < 0.0) s += length_;
    return s;
  }
  return std::clamp(s, 0.0, length_);
}

Vec2 Path::segment_end(std::size_t seg) const {
  return seg + 1 < points_.size() ? points_[seg + 1] : points_.front();
}

std::size_t Path::segment_at(double ws) const {
  auto it = std::upper_bound(stations_.begin(), stations_.end(), ws);
  std::size_t seg = it == stations_.begin() ? 0 : static_cast<std::size_t>(it - stations_.begin()) - 1;
  return std::min(seg, num_segments() - 1);
}

Vec2 Path::point_at(double s) const {
  const double ws = wrap(s);
  const std::size_t seg = segment_at(ws);
  const Vec2 a = points_[seg];
  const Vec2 b = segment_end(seg);
  const double seg_len = distance(a, b);
  if (seg_len <= 0.0) return a;
  const double t = std::clamp((ws - stations_[seg]) / seg_len, 0.0, 1.0);
  return a + (b - a) * t;
}

double Path::heading_at(double s) const {
  const std::size_t seg = segment_at(wrap(s));
  const Vec2 d = segment_end(seg) - points_[seg];
  return std::atan2(d.y, d.x);
}

PathProjection Path::project_segment(Vec2 p, std::size_t seg) const {
  const Vec2 a = points_[seg];
  const Vec2 b = segment_end(seg);
  const SegmentProjection sp = project_on_segment(p, a, b);
  const Vec2 dir = unit(b - a);
  PathProjection out;
  out.segment = seg;
  out.s = stations_[seg] + sp.t * distance(a, b);
  out.distance = sp.distance;
  out.lateral = cross(dir, p - a);
  return out;
}

PathProjection Path::project(Vec2 p) const {
  PathProjection best;
  best.distance = std::numeric_limits<double>::infinity();
  for (std::size_t seg = 0; seg < num_segments(); ++seg) {
    const PathProjection cand = project_segment(p, seg);
    if (cand.distance < best.distance) best = cand;
  }
  return best;
}

PathProjection Path::project(Vec2 p, double s_begin, double s_end) const {
  PathProjection best;
  best.distance = std::numeric_limits<double>::infinity();
  if (!closed_) {
    s_begin = std::clamp(s_begin, 0.0, length_);
    s_end = std::clamp(s_end, 0.0, length_);
  }
  const double span = s_end - s_begin;
  if (span < 0.0) return best;
  const double base = closed_ ? s_begin - wrap(s_begin) : 0.0;
  std::size_t seg = segment_at(wrap(s_begin));
  double lap = base;
  const std::size_t n = num_segments();
  for (std::size_t visited = 0; visited <= n; ++visited) {
    PathProjection cand = project_segment(p, seg);
    cand.s += lap;
    if (cand.s >= s_begin - 1e-9 && cand.s <= s_end + 1e-9 && cand.distance < best.distance) best = cand;
    const double seg_end_s = lap + (seg + 1 < points_.size() ? stations_[seg + 1] : length_);
    if (seg_end_s >= s_end) break;
    ++seg;
    if (seg == n) {
      if (!closed_) break;
      seg = 0;
      lap += length_;
    }
  }
  return best;
}

Path Path::transformed(const RigidTransform& tf) const {
  std::vector<Vec2> pts;
  pts.reserve(points_.size());
  for (const Vec2& p : points_) pts.push_back(tf.apply(p));
  return Path(std::move(pts), closed_);
}

}  // namespace rig::sim
