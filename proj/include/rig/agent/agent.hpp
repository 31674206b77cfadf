#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "rig/model/dim_model.hpp"
#include "rig/simworld/world.hpp"

namespace rig::agent {

struct AgentConfig {
  int num_candidates = 64;   // K
  double goal_weight = 50.0; // score bonus per metre closer to the goal
  int lookahead = 5;         // waypoint index (1-based) the controller steers at
  // 2 / (lookahead * dt): the mean-speed error to the lookahead point of a
  // constantly accelerating plan is a * lookahead * dt / 2.
  double speed_gain = 4.0;   // [1/s] acceleration per m/s of speed error
  double heading_gain = 8.0; // steer per radian of heading error
  int replan_every = 2;      // steps
  std::uint64_t seed = 0;
  bool include_mean = true;  // candidate 0 uses z = 0
  double dt = sim::kDefaultDt;
  sim::VehicleParams vehicle;

  /// Throws std::invalid_argument naming every violated field.
  void validate(int horizon) const;
};

struct Plan {
  std::vector<std::vector<double>> trajectories;  // K of horizon x 2, ego frame
  std::vector<double> log_q;
  std::vector<double> scores;  // -inf for discarded candidates
  int chosen = -1;
  const std::vector<double>& best() const { return trajectories.at(static_cast<std::size_t>(chosen)); }
};

/// Scores candidate trajectories by log q + goal_weight * (-|S_T - goal|) and
/// picks the best, lowest index on ties. Non-finite scores are discarded;
/// throws std::runtime_error when nothing is left.
Plan score_candidates(const model::DimModel& model, std::span<const double> params, std::span<const double> context,
                      std::vector<std::vector<double>> trajectories, Vec2 goal, double goal_weight);

/// P-control toward an ego-frame waypoint expected to be reached in `steps`
/// steps: heading error to steer, distance / time to target speed.
sim::Action control_toward(Vec2 waypoint, double speed, int steps, const AgentConfig& cfg);

class DimAgent {
 public:
  DimAgent(const model::DimModel& model, std::vector<double> params, AgentConfig cfg);

  /// K flow samples from the agent's seeded stream, ranked.
  Plan plan(const sim::Observation& obs, std::span<const double> past, Vec2 goal);

  /// Replans every replan_every steps; in between the last plan is reused
  /// after moving it into the current ego frame given by `pose`.
  sim::Action act(const sim::Observation& obs, std::span<const double> past, Vec2 goal, const Pose& pose);

  /// Restarts the sample stream and forgets the current plan.
  void reset(std::uint64_t seed);

  /// Current plan's chosen trajectory in the world frame (empty before the first act).
  const std::vector<Vec2>& plan_world() const { return plan_world_; }
  const AgentConfig& config() const { return cfg_; }
  const model::DimModel& model() const { return model_; }

 private:
  const model::DimModel& model_;
  std::vector<double> params_;
  AgentConfig cfg_;
  std::mt19937_64 rng_;
  std::vector<Vec2> plan_world_;
  int plan_age_ = 0;
};

}  // namespace rig::agent
