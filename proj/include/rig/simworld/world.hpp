#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "rig/geometry.hpp"
#include "rig/simworld/road_graph.hpp"
#include "rig/simworld/route.hpp"

namespace rig::sim {

/// Kinematic-bicycle and rail-actor constants.
struct VehicleParams {
  double max_accel = 3.0;    // a_max [m/s^2]
  double max_brake = 8.0;    // b_max [m/s^2]
  double max_speed = 10.0;   // v_max [m/s]
  double drag = 0.1;         // [1/s]
  double wheelbase = 2.5;    // [m]
  double max_steer = 35.0 * std::numbers::pi / 180.0;  // delta_max [rad]
  Vec2 half_extent{2.25, 1.0};
};

inline constexpr double kDefaultDt = 0.1;

struct VehicleState {
  Vec2 position;
  double heading = 0.0;  // (-pi, pi]
  double speed = 0.0;    // >= 0
  Vec2 half_extent{2.25, 1.0};

  Pose pose() const { return {position, heading}; }
  OrientedBox box() const { return {position, heading, half_extent}; }
};

/// Control input; fields are clamped on construction.
class Action {
 public:
  Action() = default;
  Action(double throttle, double steer, double brake);

  double throttle() const { return throttle_; }
  double steer() const { return steer_; }
  double brake() const { return brake_; }
  bool operator==(const Action&) const = default;

 private:
  double throttle_ = 0.0;  // [0, 1]
  double steer_ = 0.0;     // [-1, 1], negative turns left
  double brake_ = 0.0;     // [0, 1]
};

struct Actor {
  VehicleState state;
  int rail = -1;          // index into WorldState::rails
  double progress = 0.0;  // station along the rail
};

struct WorldState {
  double time = 0.0;
  VehicleState ego;
  std::vector<Actor> actors;
  std::vector<OrientedBox> pedestrians;  // static obstacles
  std::shared_ptr<const RoadGraph> town;
  std::shared_ptr<const std::vector<Route>> rails;
  std::uint64_t rng_seed = 0;

  /// Rigidly moves every piece of geometry, including the town and rails.
  WorldState transformed(const RigidTransform& tf) const;
};

/// Advances the world by dt: bicycle model for the ego, rail following for
/// actors, lights by time. Deterministic; throws if dt <= 0.
WorldState step(const WorldState& world, const Action& action, double dt = kDefaultDt,
                const VehicleParams& params = {});

/// Ego-only bicycle update, exposed for testing.
VehicleState step_ego(const VehicleState& ego, const Action& action, double dt, const VehicleParams& params = {});

struct SpawnRequest {
  int origin = 0;  // spawn index of the ego
  int num_vehicles = 0;
  int num_pedestrians = 0;
  std::uint64_t seed = 0;
};

/// Ego at rest at the origin spawn point, actors at rest on seeded spawn
/// points with their rails, pedestrians as static boxes off the road.
WorldState spawn_world(std::shared_ptr<const RoadGraph> town, const SpawnRequest& req);

}  // namespace rig::sim
