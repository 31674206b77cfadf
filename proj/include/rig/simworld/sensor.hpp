#pragma once

#include <vector>

#include "rig/simworld/road_graph.hpp"
#include "rig/simworld/world.hpp"

namespace rig::sim {

/// Ego-centred bird's-eye grid. Channel 0 marks non-drivable space
/// (off-road and pedestrians), channel 1 marks other vehicles.
struct SensorConfig {
  int grid_size = 200;
  double meters_per_cell = 0.2;
  int anchor_row = -1;  // ego cell; -1 selects grid_size / 2
  int anchor_col = -1;
  double light_range = 20.0;  // stop line distance that counts as "at a light" [m]

  int resolved_anchor_row() const { return anchor_row < 0 ? grid_size / 2 : anchor_row; }
  int resolved_anchor_col() const { return anchor_col < 0 ? grid_size / 2 : anchor_col; }
  /// Ego-frame centre of cell (row, col); rows grow forward, columns to the right.
  Vec2 cell_center(int row, int col) const;
};

/// 16 x 16 cells of 1 m looking 12 m ahead: the working resolution for
/// datasets and agents. Pooled to 8 x 8 this keeps 2 m cells, fine enough
/// for the encoder to see where a lane bends.
inline SensorConfig desk_sensor_config() {
  SensorConfig c;
  c.grid_size = 16;
  c.meters_per_cell = 1.0;
  c.anchor_row = 4;
  return c;
}

inline constexpr int kChannels = 2;

struct Observation {
  int grid_size = 0;
  std::vector<float> visual_features;  // row-major (row, col, channel)
  double velocity = 0.0;
  bool is_at_traffic_light = false;
  LightState traffic_light_state = LightState::none;

  float at(int row, int col, int channel) const {
    return visual_features[(static_cast<std::size_t>(row) * static_cast<std::size_t>(grid_size) +
                            static_cast<std::size_t>(col)) *
                               kChannels +
                           static_cast<std::size_t>(channel)];
  }
};

Observation render_observation(const WorldState& world, const SensorConfig& cfg = {});

/// Light ahead of the ego on its current lane: (at light, state).
std::pair<bool, LightState> light_ahead(const WorldState& world, double range);

}  // namespace rig::sim
