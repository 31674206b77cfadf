#include "rig/simworld/expert.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace rig::sim {

Action longitudinal_action(double accel, double speed, double steer, const VehicleParams& vehicle) {
  const double a = accel + vehicle.drag * speed;
  if (a >= 0.0) return Action(a / vehicle.max_accel, steer, 0.0);
  return Action(0.0, steer, -a / vehicle.max_brake);
}

Action expert_action(const WorldState& world, const Route& route, const ExpertConfig& cfg) {
  if (route.path.empty()) throw std::invalid_argument("expert needs a non-empty route");
  if (!world.town) throw std::invalid_argument("expert needs a town");
  const VehicleState& ego = world.ego;
  const double s = route_station(route, ego.pose());

  const double look = std::clamp(cfg.lookahead_base + cfg.lookahead_gain * ego.speed, cfg.lookahead_min,
                                 cfg.lookahead_max);
  double target_s = s + look;
  if (!route.closed()) target_s = std::min(target_s, route.path.length());
  Vec2 target = route.path.point_at(target_s);
  if (!route.closed() && route.path.length() - s < look) {
    // Past the end: extend along the final heading.
    target = target + heading_vector(route.path.heading_at(route.path.length())) * (look - (route.path.length() - s));
  }
  const Vec2 local = to_local(ego.pose(), target);
  const double alpha = std::atan2(local.y, local.x);
  const double ld = std::max(norm(local), 1e-6);
  const double delta = std::atan(2.0 * cfg.vehicle.wheelbase * std::sin(alpha) / ld);
  const double steer = delta / cfg.vehicle.max_steer;

  std::vector<OrientedBox> vehicles;
  vehicles.reserve(world.actors.size());
  for (const Actor& a : world.actors) vehicles.push_back(a.state.box());

  const SpeedDecision d =
      plan_speed(route, s, ego, world.time, *world.town, vehicles, world.pedestrians, cfg.rules, cfg.vehicle);
  double v_des = d.target_speed;
  if (!route.closed()) {
    const double remaining = std::max(0.0, route.path.length() - s);
    v_des = std::min(v_des, std::sqrt(2.0 * cfg.rules.comfort_decel * remaining));
  }
  if (d.full_brake) return Action(0.0, steer, 1.0);
  return longitudinal_action(cfg.speed_gain * (v_des - ego.speed), ego.speed, steer, cfg.vehicle);
}

}  // namespace rig::sim
