#include "rig/simworld/traffic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace rig::sim {

namespace {

std::array<Vec2, 5> box_points(const OrientedBox& b) {
  const Vec2 ax = heading_vector(b.heading) * b.half_extent.x;
  const Vec2 ay = perp(heading_vector(b.heading)) * b.half_extent.y;
  return {b.center, b.center + ax + ay, b.center + ax - ay, b.center - ax + ay, b.center - ax - ay};
}

}  // namespace

double route_station(const Route& route, const Pose& pose) {
  const Path& path = route.path;
  const auto pts = path.points();
  const auto st = path.stations();
  double best_d = std::numeric_limits<double>::infinity();
  double best_s = 0.0;
  for (std::size_t seg = 0; seg < path.num_segments(); ++seg) {
    const Vec2 a = pts[seg];
    const Vec2 b = seg + 1 < pts.size() ? pts[seg + 1] : pts.front();
    const Vec2 d = b - a;
    if (dot(d, heading_vector(pose.heading)) <= 0.0) continue;
    const SegmentProjection sp = project_on_segment(pose.position, a, b);
    if (sp.distance < best_d) {
      best_d = sp.distance;
      best_s = st[seg] + sp.t * norm(d);
    }
  }
  if (!std::isfinite(best_d)) return path.project(pose.position).s;
  return best_s;
}

SpeedDecision plan_speed(const Route& route, double s, const VehicleState& self, double time,
                         const RoadGraph& town, std::span<const OrientedBox> vehicles,
                         std::span<const OrientedBox> statics, const DrivingRules& rules,
                         const VehicleParams& vehicle) {
  SpeedDecision out;
  const double v = self.speed;
  const double half_len = self.half_extent.x;
  out.target_speed = std::min(route.speed_limit_at(s), vehicle.max_speed);

  auto stop_before = [&](double gap, double margin) {
    if (gap <= margin + v * v / (2.0 * vehicle.max_brake)) out.full_brake = true;
    out.target_speed = std::min(out.target_speed, std::sqrt(2.0 * rules.comfort_decel * std::max(0.0, gap - margin)));
  };

  // Only the first stop or give-way line ahead matters.
  const double L = route.path.length();
  const StopMarker* marker = nullptr;
  double line_gap = 0.0;
  const int laps = route.closed() ? 2 : 1;
  for (int lap = 0; lap < laps && marker == nullptr; ++lap) {
    const double base = route.closed() ? (s - route.path.wrap(s)) + lap * L : 0.0;
    for (const StopMarker& m : route.stops) {
      const double gap = base + m.s - (s + half_len);
      if (gap < -0.5) continue;
      if (gap <= rules.light_range) {
        marker = &m;
        line_gap = gap;
      }
      break;
    }
  }
  if (marker != nullptr && marker->light >= 0) {
    const LightState state = town.lights()[static_cast<std::size_t>(marker->light)].state_at(time);
    const bool must_stop = state == LightState::red ||
                           (state == LightState::yellow && line_gap > v * v / (2.0 * rules.comfort_decel));
    if (must_stop) {
      out.stopping_for_light = true;
      stop_before(line_gap, rules.stop_margin);
    }
  } else if (marker != nullptr && marker->yield_edge >= 0) {
    const LaneEdge& pe = town.edges()[static_cast<std::size_t>(marker->yield_edge)];
    const Vec2 a = town.nodes()[static_cast<std::size_t>(pe.from)].position;
    const Vec2 dir = town.edge_direction(marker->yield_edge);
    const double len = pe.length;
    for (const OrientedBox& ob : vehicles) {
      const Vec2 rel = ob.center - a;
      const double remaining = len - dot(rel, dir);
      if (remaining < -3.0 || remaining > rules.yield_zone) continue;
      if (std::abs(cross(dir, rel)) > 2.5) continue;
      if (dot(heading_vector(ob.heading), dir) < 0.3) continue;
      out.yielding = true;
      break;
    }
    if (out.yielding) stop_before(line_gap, rules.yield_margin);
  }

  // Leader: nearest obstacle point inside the corridor ahead.
  const double horizon = 6.0 + 2.0 * v + v * v / (2.0 * rules.comfort_decel);
  const double corridor = self.half_extent.y + rules.corridor_margin;
  double lead_gap = std::numeric_limits<double>::infinity();
  auto scan = [&](std::span<const OrientedBox> boxes) {
    for (const OrientedBox& ob : boxes) {
      const double reach = horizon + half_len + norm(ob.half_extent) + 1.0;
      const Vec2 d = ob.center - self.position;
      if (dot(d, d) > reach * reach) continue;
      for (const Vec2& p : box_points(ob)) {
        const PathProjection pr = route.path.project(p, s, s + half_len + horizon);
        if (!std::isfinite(pr.distance) || pr.distance > corridor) continue;
        lead_gap = std::min(lead_gap, pr.s - s - half_len);
      }
    }
  };
  scan(vehicles);
  scan(statics);
  if (std::isfinite(lead_gap)) {
    out.following = true;
    if (lead_gap < rules.headway_base + rules.headway_time * v) out.full_brake = true;
    out.target_speed =
        std::min(out.target_speed, std::sqrt(2.0 * rules.comfort_decel * std::max(0.0, lead_gap - rules.min_gap)));
  }
  return out;
}

}  // namespace rig::sim
