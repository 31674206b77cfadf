#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rig/geometry.hpp"

namespace rig::sim {

enum class LightState : std::uint8_t { none = 0, green = 1, yellow = 2, red = 3 };

const char* to_string(LightState s);

struct TrafficLight {
  Vec2 position;  // stop line on the controlled lane
  int controlled_edge = -1;
  double green_s = 10.0;
  double yellow_s = 3.0;
  double red_s = 17.0;
  double phase_offset = 0.0;

  double period() const { return green_s + yellow_s + red_s; }
  /// Pure function of the cycle, the offset and t.
  LightState state_at(double t) const;
};

struct RoadNode {
  Vec2 position;
  int spawn_index = -1;  // -1 for junctions
};

struct LaneEdge {
  int from = -1;
  int to = -1;
  double lane_width = 4.0;
  double length = 0.0;
};

/// Circular fillet joining an incoming lane to an outgoing lane at a node.
struct Connector {
  int in_edge = -1;
  int out_edge = -1;
  double turn_angle = 0.0;  // signed heading change
  double radius = 0.0;
  double trim = 0.0;        // tangent length cut from both edges
  Vec2 start;
  Vec2 end;
  Vec2 center;

  /// Points along the arc from start to end (inclusive), at most `ds` apart.
  std::vector<Vec2> sample(double ds) const;
};

struct LightTiming {
  double green_s = 10.0;
  double yellow_s = 3.0;
  double all_red_s = 2.0;
};

/// Town generation input: geometry plus per-junction phase offsets.
struct RoadGraphSpec {
  int town_id = 0;
  std::vector<RoadNode> nodes;
  std::vector<LaneEdge> edges;  // length computed from node positions
  LightTiming timing;
  bool lights = true;
  std::vector<double> junction_offsets;  // indexed by node; empty = all zero
  double fillet_radius = 6.0;
  /// Edges with right of way into their end node; the other lanes entering
  /// that node yield instead of getting a light.
  std::vector<int> priority_edges;
};

struct LaneQuery {
  bool found = false;
  double offset = 0.0;       // distance from the lane centerline
  double half_width = 0.0;
  int edge = -1;             // -1 when the closest piece is a connector
  double s_on_edge = 0.0;    // station along the edge for straight pieces
};

/// Directed lane network of a town.
class RoadGraph {
 public:
  explicit RoadGraph(RoadGraphSpec spec);

  int town_id() const { return spec_.town_id; }
  std::span<const RoadNode> nodes() const { return spec_.nodes; }
  std::span<const LaneEdge> edges() const { return spec_.edges; }
  std::span<const TrafficLight> lights() const { return lights_; }
  std::span<const Connector> connectors() const { return connectors_; }
  const RoadGraphSpec& spec() const { return spec_; }

  std::span<const int> out_edges(int node) const { return out_[static_cast<std::size_t>(node)]; }
  std::span<const int> in_edges(int node) const { return in_[static_cast<std::size_t>(node)]; }

  int num_spawn_points() const { return static_cast<int>(spawn_nodes_.size()); }
  int spawn_node(int spawn_index) const;
  /// Spawn pose: node position, heading along its outgoing lane.
  Pose spawn_pose(int spawn_index) const;

  const Connector* connector(int in_edge, int out_edge) const;
  std::optional<int> light_for_edge(int edge) const;
  /// Edge that `edge` must give way to at its end node, or -1.
  int yield_to(int edge) const { return yield_of_edge_[static_cast<std::size_t>(edge)]; }
  /// Distance from the end node back to the stop line of the edge's light.
  double stop_offset(int edge) const;
  Vec2 edge_direction(int edge) const;

  /// Edge list of the shortest route; throws if `to` is unreachable.
  std::vector<int> shortest_route(int from_node, int to_node) const;
  bool strongly_connected() const;

  /// Signed clearance to the drivable surface: <= 0 means on the road.
  double road_clearance(Vec2 p) const;
  /// Closest lane piece whose direction agrees with `pose.heading`.
  LaneQuery lane_at(const Pose& pose) const;

  /// Versioned structured-text dump; byte-identical for identical graphs.
  std::string serialize() const;

  RoadGraph transformed(const RigidTransform& tf) const;

 private:
  struct LanePiece {
    Vec2 a;
    Vec2 b;
    double half_width = 0.0;
    double heading = 0.0;
    int edge = -1;
  };

  void build_connectors();
  void build_lights();
  void build_index();
  std::span<const int> pieces_near(Vec2 p) const;

  RoadGraphSpec spec_;
  std::vector<std::vector<int>> out_;
  std::vector<std::vector<int>> in_;
  std::vector<int> spawn_nodes_;
  std::vector<Connector> connectors_;
  std::vector<std::vector<int>> connectors_by_in_;
  std::vector<int> light_of_edge_;
  std::vector<int> yield_of_edge_;
  std::vector<double> stop_offset_;
  std::vector<TrafficLight> lights_;

  std::vector<LanePiece> pieces_;
  Vec2 grid_origin_;
  double cell_size_ = 8.0;
  int grid_cols_ = 0;
  int grid_rows_ = 0;
  std::vector<std::vector<int>> grid_;
};

}  // namespace rig::sim
