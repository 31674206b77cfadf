#pragma once

#include "rig/simworld/route.hpp"
#include "rig/simworld/traffic.hpp"
#include "rig/simworld/world.hpp"

namespace rig::sim {

struct ExpertConfig {
  double lookahead_base = 3.0;  // pure-pursuit lookahead = base + gain * speed
  double lookahead_gain = 0.4;
  double lookahead_min = 3.0;
  double lookahead_max = 8.0;
  double speed_gain = 1.5;
  DrivingRules rules;
  VehicleParams vehicle;
};

/// Rule-based route follower: pure pursuit for steering, the shared speed
/// planner for throttle and brake. Throws std::invalid_argument for an empty
/// route.
Action expert_action(const WorldState& world, const Route& route, const ExpertConfig& cfg = {});

/// Converts a desired acceleration into throttle and brake with drag feedforward.
Action longitudinal_action(double accel, double speed, double steer, const VehicleParams& vehicle);

}  // namespace rig::sim
