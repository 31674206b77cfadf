#pragma once

#include "rig/simworld/world.hpp"

namespace rig::sim {

struct EventSet {
  int collisions = 0;
  int lane_invasions = 0;

  EventSet& operator+=(const EventSet& o) {
    collisions += o.collisions;
    lane_invasions += o.lane_invasions;
    return *this;
  }
  bool operator==(const EventSet&) const = default;
};

/// Events caused by the transition before -> after. A collision counts once
/// per object when the ego starts overlapping it; a lane invasion counts when
/// the ego centre leaves its lane.
EventSet detect_events(const WorldState& before, const WorldState& after);

/// True while the ego centre is within the half width of a lane heading its way.
bool in_lane(const WorldState& world);

}  // namespace rig::sim
