#pragma once

#include <filesystem>
#include <vector>

#include "rig/simworld/events.hpp"
#include "rig/simworld/world.hpp"

namespace rig::sim {

/// One row of a replay trace.
struct TraceRow {
  int step = 0;
  double time = 0.0;
  VehicleState ego;
  Action action;
  EventSet events;            // cumulative
  std::vector<Vec2> plan;     // planned waypoints in the world frame, may be empty
};

/// CSV columns: step,time,x,y,heading,speed,throttle,steer,brake,collisions,
/// lane_invasions,plan where plan is "x y;x y;...".
void write_trace_csv(const std::vector<TraceRow>& rows, const std::filesystem::path& path);
std::vector<TraceRow> read_trace_csv(const std::filesystem::path& path);

}  // namespace rig::sim
