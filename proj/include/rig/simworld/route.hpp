#pragma once

#include <vector>

#include "rig/simworld/path.hpp"
#include "rig/simworld/road_graph.hpp"

namespace rig::sim {

struct StopMarker {
  double s = 0.0;  // station of the stop line along the route
  int light = -1;        // traffic light id, or -1 for a give-way line
  int yield_edge = -1;   // lane with right of way at a give-way line
  Vec2 merge;            // node where the lanes meet
};

struct RouteOptions {
  double spacing = 1.0;        // max distance between path samples [m]
  double cruise_speed = 8.0;   // town speed limit [m/s]
  double lateral_accel = 2.0;  // curve speed limit sqrt(a/kappa)
  double comfort_decel = 3.0;  // for the backward speed pass
};

/// A drivable sequence of edges, smoothed through its connectors.
struct Route {
  std::vector<int> edges;
  Path path;
  std::vector<double> speed_limit;  // per path point
  std::vector<StopMarker> stops;    // sorted by s; one lap for closed routes

  bool closed() const { return path.closed(); }
  double speed_limit_at(double s) const;
  Route transformed(const RigidTransform& tf) const;
};

/// Builds the route geometry along `edges`; consecutive edges must share a
/// node and have a connector. Closed routes also join last to first.
Route make_route(const RoadGraph& graph, std::vector<int> edges, bool closed, const RouteOptions& opts = {});

/// Shortest route between two spawn points.
Route plan_route(const RoadGraph& graph, int from_spawn, int to_spawn, const RouteOptions& opts = {});

}  // namespace rig::sim
