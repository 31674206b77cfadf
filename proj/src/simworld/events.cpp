#include "rig/simworld/events.hpp"

#include <stdexcept>

namespace rig::sim {

bool in_lane(const WorldState& world) {
  const LaneQuery q = world.town->lane_at(world.ego.pose());
  return q.found && q.offset <= q.half_width;
}

EventSet detect_events(const WorldState& before, const WorldState& after) {
  if (before.actors.size() != after.actors.size() || before.pedestrians.size() != after.pedestrians.size())
    throw std::invalid_argument("detect_events needs two states of the same episode");
  EventSet ev;
  const OrientedBox b0 = before.ego.box();
  const OrientedBox b1 = after.ego.box();
  for (std::size_t i = 0; i < after.actors.size(); ++i)
    if (overlaps(b1, after.actors[i].state.box()) && !overlaps(b0, before.actors[i].state.box())) ++ev.collisions;
  for (std::size_t i = 0; i < after.pedestrians.size(); ++i)
    if (overlaps(b1, after.pedestrians[i]) && !overlaps(b0, before.pedestrians[i])) ++ev.collisions;
  if (before.town && after.town && in_lane(before) && !in_lane(after)) ++ev.lane_invasions;
  return ev;
}

}  // namespace rig::sim
