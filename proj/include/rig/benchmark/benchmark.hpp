#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "rig/agent/agent.hpp"
#include "rig/simworld/route.hpp"
#include "rig/simworld/sensor.hpp"
#include "rig/simworld/trace.hpp"
#include "rig/simworld/world.hpp"

namespace rig::bench {

struct ScenarioSpec {
  int town = 1;
  int origin = 0;
  int destination = 1;
  int num_vehicles = 0;
  int num_pedestrians = 0;
  std::uint64_t seed = 0;
  int max_steps = 1000;
  bool operator==(const ScenarioSpec&) const = default;
};

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Strict schema: exactly town, origin, destination, num_vehicles,
/// num_pedestrians, optionally seed and max_steps. Errors name the field.
ScenarioSpec parse_scenario(const std::string& json_text);
ScenarioSpec load_scenario(const std::filesystem::path& path);
std::string scenario_json(const ScenarioSpec& spec);
void validate_scenario(const ScenarioSpec& spec);

struct SuiteEntry {
  std::string id;
  std::string category;  // AbnormalTurns, BusyTown, Hills, Roundabouts
  ScenarioSpec spec;
};

/// 27 fixed scenarios: 7 AbnormalTurns, 11 BusyTown, 4 Hills, 5 Roundabouts.
/// Hills are flat stand-ins since the simulator has no elevation.
std::vector<SuiteEntry> default_suite();

struct EpisodeResult {
  std::string scenario;
  std::string category;
  int collisions = 0;
  int lane_invasions = 0;
  double distance = 0.0;
  int steps = 0;
  bool reached_goal = false;
  bool operator==(const EpisodeResult&) const = default;
};

/// Closed-loop controller under test.
class Driver {
 public:
  virtual ~Driver() = default;
  virtual void reset(const sim::WorldState& world, const sim::Route& route, std::uint64_t seed) = 0;
  virtual sim::Action act(const sim::WorldState& world) = 0;
  /// Current plan in the world frame, for replay traces.
  virtual std::vector<Vec2> plan() const { return {}; }
};

class ExpertDriver : public Driver {
 public:
  explicit ExpertDriver(sim::ExpertConfig cfg = {}) : cfg_(cfg) {}
  void reset(const sim::WorldState&, const sim::Route& route, std::uint64_t) override { route_ = route; }
  sim::Action act(const sim::WorldState& world) override;

 private:
  sim::ExpertConfig cfg_;
  sim::Route route_;
};

struct AgentDriverConfig {
  agent::AgentConfig agent;
  sim::SensorConfig sensor = sim::desk_sensor_config();
  // The route subgoal sits max(goal_distance, speed * goal_time) ahead of
  // the ego. A subgoal about where a plan at the current speed ends (horizon * dt
  // ahead) rewards direction only. Placing it further out also rewards
  // speed, and the agent then accelerates until it cannot hold a curve.
  double goal_distance = 3.0;  // [m]
  double goal_time = 1.0;      // [s]
};

/// Feeds the model agent its observation, ego-frame past and a route subgoal.
class AgentDriver : public Driver {
 public:
  AgentDriver(const model::DimModel& model, std::vector<double> params, AgentDriverConfig cfg);
  /// Samples restart from a mix of the agent seed and the scenario seed.
  void reset(const sim::WorldState& world, const sim::Route& route, std::uint64_t seed) override;
  sim::Action act(const sim::WorldState& world) override;
  std::vector<Vec2> plan() const override { return agent_.plan_world(); }

 private:
  agent::DimAgent agent_;
  AgentDriverConfig cfg_;
  sim::Route route_;
  std::vector<Vec2> history_;  // world positions, oldest first
};

using DriverFactory = std::function<std::unique_ptr<Driver>()>;

struct EpisodeOptions {
  double goal_radius = 5.0;
  std::vector<sim::TraceRow>* trace = nullptr;  // filled when set
};

/// Runs until the ego is within goal_radius of the destination or max_steps.
EpisodeResult run_episode(Driver& driver, const SuiteEntry& entry, const EpisodeOptions& options = {});

/// Runs every entry with a fresh driver, in parallel when asked; results come
/// back in suite order. Replay traces are written to trace_dir when given.
std::vector<EpisodeResult> run_suite(const DriverFactory& make_driver, const std::vector<SuiteEntry>& suite,
                                     bool parallel = true, const std::filesystem::path& trace_dir = {});

inline constexpr const char* kResultsHeader = "scenario,category,collisions,lane_invasions,distance,steps,reached_goal";

void write_results_csv(const std::vector<EpisodeResult>& results, const std::filesystem::path& path);
std::vector<EpisodeResult> read_results_csv(const std::filesystem::path& path);

}  // namespace rig::bench
