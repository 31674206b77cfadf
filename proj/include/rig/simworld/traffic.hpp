#pragma once

#include <span>

#include "rig/simworld/road_graph.hpp"
#include "rig/simworld/route.hpp"
#include "rig/simworld/world.hpp"

namespace rig::sim {

/// Longitudinal driving rules shared by rail actors and the expert.
struct DrivingRules {
  double comfort_decel = 4.0;    // shapes approach speeds [m/s^2]
  double stop_margin = 5.0;      // full brake this far before a red stop line [m]
  double min_gap = 3.0;          // standstill gap to a leader [m]
  double headway_base = 2.0;     // full brake when the leader gap drops below
  double headway_time = 0.25;    //   headway_base + headway_time * speed
  double corridor_margin = 0.6;  // lateral slack around the own half width [m]
  double light_range = 40.0;     // lights further than this are ignored [m]
  double yield_margin = 1.0;     // stop this far before a give-way line [m]
  double yield_zone = 18.0;      // watch the priority lane this far upstream [m]
};

struct SpeedDecision {
  double target_speed = 0.0;
  bool full_brake = false;
  bool stopping_for_light = false;
  bool yielding = false;
  bool following = false;
};

/// Target speed at station `s` of `route` given lights, give-way lines and
/// the boxes (excluding `self`) occupying the corridor ahead. Only
/// `vehicles` can hold up a give-way entry.
SpeedDecision plan_speed(const Route& route, double s, const VehicleState& self, double time,
                         const RoadGraph& town, std::span<const OrientedBox> vehicles,
                         std::span<const OrientedBox> statics, const DrivingRules& rules = {},
                         const VehicleParams& vehicle = {});

/// Station of `pose` on the route among segments heading the same way.
double route_station(const Route& route, const Pose& pose);

}  // namespace rig::sim
