#pragma once

#include <memory>
#include <utility>
#include <vector>

#include "rig/simworld/road_graph.hpp"
#include "rig/simworld/route.hpp"

namespace rig::sim {

inline constexpr int kNumTowns = 3;

/// Valid town ids: 1 (grid), 2 (ring road + roundabout), 3 (irregular grid
/// with diagonal streets and acute turns). Throws std::invalid_argument for
/// anything else.
RoadGraph load_town(int town_id);

/// Process-wide immutable copy of load_town(town_id).
std::shared_ptr<const RoadGraph> shared_town(int town_id);

/// (origin, destination) spawn indices of a short, nearly straight drive
/// without turns in the given town.
std::pair<int, int> canonical_straight_route(int town_id);

/// Closed loop spawn i -> spawn (61 i + 17) mod n -> spawn i for every
/// spawn point, indexed by spawn index.
std::vector<Route> build_rails(const RoadGraph& town);

/// Closed background-traffic loop for every spawn point of the town,
/// indexed by spawn index. Built once per town and shared.
std::shared_ptr<const std::vector<Route>> town_rails(int town_id);

}  // namespace rig::sim
