#include "rig/simworld/sensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace rig::sim {

Vec2 SensorConfig::cell_center(int row, int col) const {
  return {(row - resolved_anchor_row()) * meters_per_cell, (col - resolved_anchor_col()) * meters_per_cell};
}

namespace {

// Marks every cell whose centre lies inside `box` (given in the ego frame).
void stamp(std::vector<float>& grid, const SensorConfig& cfg, const OrientedBox& box, int channel) {
  const int n = cfg.grid_size;
  const double m = cfg.meters_per_cell;
  const double r = norm(box.half_extent);
  const int ar = cfg.resolved_anchor_row();
  const int ac = cfg.resolved_anchor_col();
  const int r0 = std::max(0, static_cast<int>(std::floor((box.center.x - r) / m)) + ar);
  const int r1 = std::min(n - 1, static_cast<int>(std::ceil((box.center.x + r) / m)) + ar);
  const int c0 = std::max(0, static_cast<int>(std::floor((box.center.y - r) / m)) + ac);
  const int c1 = std::min(n - 1, static_cast<int>(std::ceil((box.center.y + r) / m)) + ac);
  for (int row = r0; row <= r1; ++row)
    for (int col = c0; col <= c1; ++col)
      if (contains(box, cfg.cell_center(row, col)))
        grid[(static_cast<std::size_t>(row) * static_cast<std::size_t>(n) + static_cast<std::size_t>(col)) *
                 kChannels +
             static_cast<std::size_t>(channel)] = 1.0F;
}

OrientedBox to_ego(const Pose& ego, const OrientedBox& b) {
  return {to_local(ego, b.center), normalize_angle(b.heading - ego.heading), b.half_extent};
}

}  // namespace

std::pair<bool, LightState> light_ahead(const WorldState& world, double range) {
  const LaneQuery q = world.town->lane_at(world.ego.pose());
  if (!q.found || q.edge < 0 || q.offset > q.half_width) return {false, LightState::none};
  const auto light = world.town->light_for_edge(q.edge);
  if (!light) return {false, LightState::none};
  const LaneEdge& e = world.town->edges()[static_cast<std::size_t>(q.edge)];
  const double gap = (e.length - world.town->stop_offset(q.edge)) - q.s_on_edge - world.ego.half_extent.x;
  if (gap < -1.0 || gap > range) return {false, LightState::none};
  return {true, world.town->lights()[static_cast<std::size_t>(*light)].state_at(world.time)};
}

Observation render_observation(const WorldState& world, const SensorConfig& cfg) {
  if (cfg.grid_size <= 0 || !(cfg.meters_per_cell > 0.0))
    throw std::invalid_argument("sensor grid must be positive (grid_size " + std::to_string(cfg.grid_size) + ")");
  if (!world.town) throw std::invalid_argument("observation needs a town");
  const int n = cfg.grid_size;
  Observation obs;
  obs.grid_size = n;
  obs.visual_features.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(n) * kChannels, 0.0F);
  const Pose ego = world.ego.pose();

  for (int row = 0; row < n; ++row)
    for (int col = 0; col < n; ++col) {
      const Vec2 p = to_world(ego, cfg.cell_center(row, col));
      if (world.town->road_clearance(p) > 0.0)
        obs.visual_features[(static_cast<std::size_t>(row) * static_cast<std::size_t>(n) +
                             static_cast<std::size_t>(col)) *
                            kChannels] = 1.0F;
    }
  for (const OrientedBox& p : world.pedestrians) stamp(obs.visual_features, cfg, to_ego(ego, p), 0);
  for (const Actor& a : world.actors) stamp(obs.visual_features, cfg, to_ego(ego, a.state.box()), 1);

  obs.velocity = world.ego.speed;
  const auto [at, state] = light_ahead(world, cfg.light_range);
  obs.is_at_traffic_light = at;
  obs.traffic_light_state = state;
  return obs;
}

}  // namespace rig::sim
