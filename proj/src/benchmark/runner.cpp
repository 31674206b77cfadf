#include <algorithm>
#include <cstdio>
#include <exception>
#include <fstream>
#include <sstream>

#include "rig/benchmark/benchmark.hpp"
#include "rig/simworld/events.hpp"
#include "rig/simworld/expert.hpp"
#include "rig/simworld/town.hpp"
#include "rig/simworld/traffic.hpp"
#include "rig/util/seed.hpp"

namespace rig::bench {

sim::Action ExpertDriver::act(const sim::WorldState& world) { return sim::expert_action(world, route_, cfg_); }

AgentDriver::AgentDriver(const model::DimModel& model, std::vector<double> params, AgentDriverConfig cfg)
    : agent_(model, std::move(params), cfg.agent), cfg_(std::move(cfg)) {
  if (cfg_.sensor.grid_size != model.config().grid_size)
    throw std::invalid_argument("sensor grid does not match the model grid");
}

void AgentDriver::reset(const sim::WorldState&, const sim::Route& route, std::uint64_t seed) {
  route_ = route;
  history_.clear();
  agent_.reset(util::mix_seed(cfg_.agent.seed, seed));
}

sim::Action AgentDriver::act(const sim::WorldState& world) {
  const int tau = agent_.model().config().tau;
  const Pose pose = world.ego.pose();
  history_.push_back(pose.position);
  if (history_.size() > static_cast<std::size_t>(tau + 1)) history_.erase(history_.begin());

  // Before the car has history it is taken to have been standing still.
  std::vector<double> past;
  past.reserve(static_cast<std::size_t>(tau + 1) * 2);
  const std::size_t have = history_.size();
  for (int k = 0; k <= tau; ++k) {
    const std::size_t need = static_cast<std::size_t>(tau + 1 - k);  // 1 = current
    const Vec2 p = need > have ? history_.front() : history_[have - need];
    const Vec2 local = need == 1 ? Vec2{} : to_local(pose, p);
    past.push_back(local.x);
    past.push_back(local.y);
  }

  const sim::Observation obs = sim::render_observation(world, cfg_.sensor);
  const double s = sim::route_station(route_, pose);
  const double ahead = std::max(cfg_.goal_distance, world.ego.speed * cfg_.goal_time);
  const double goal_s = std::min(s + ahead, route_.path.length());
  const Vec2 goal = to_local(pose, route_.path.point_at(goal_s));
  return agent_.act(obs, past, goal, pose);
}

EpisodeResult run_episode(Driver& driver, const SuiteEntry& entry, const EpisodeOptions& opt) {
  const ScenarioSpec& spec = entry.spec;
  validate_scenario(spec);
  const auto town = sim::shared_town(spec.town);
  sim::WorldState world =
      sim::spawn_world(town, sim::SpawnRequest{spec.origin, spec.num_vehicles, spec.num_pedestrians, spec.seed});
  const sim::Route route = sim::plan_route(*town, spec.origin, spec.destination);
  const Vec2 goal = route.path.point_at(route.path.length());
  driver.reset(world, route, spec.seed);

  EpisodeResult r;
  r.scenario = entry.id;
  r.category = entry.category;
  sim::EventSet events;
  if (opt.trace) opt.trace->clear();
  while (r.steps < spec.max_steps && distance(world.ego.position, goal) > opt.goal_radius) {
    const sim::Action a = driver.act(world);
    sim::WorldState next = sim::step(world, a);
    events += sim::detect_events(world, next);
    r.distance += distance(world.ego.position, next.ego.position);
    world = std::move(next);
    ++r.steps;
    if (opt.trace) opt.trace->push_back({r.steps, world.time, world.ego, a, events, driver.plan()});
  }
  r.collisions = events.collisions;
  r.lane_invasions = events.lane_invasions;
  r.reached_goal = distance(world.ego.position, goal) <= opt.goal_radius;
  return r;
}

std::vector<EpisodeResult> run_suite(const DriverFactory& make_driver, const std::vector<SuiteEntry>& suite,
                                     bool parallel, const std::filesystem::path& trace_dir) {
  std::vector<EpisodeResult> results(suite.size());
  std::vector<std::exception_ptr> errors(suite.size());
  if (!trace_dir.empty()) std::filesystem::create_directories(trace_dir);
  const auto n = static_cast<std::ptrdiff_t>(suite.size());
#pragma omp parallel for schedule(dynamic, 1) if (parallel)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    try {
      std::unique_ptr<Driver> d = make_driver();
      std::vector<sim::TraceRow> trace;
      EpisodeOptions opt;
      if (!trace_dir.empty()) opt.trace = &trace;
      results[u] = run_episode(*d, suite[u], opt);
      if (!trace_dir.empty()) sim::write_trace_csv(trace, trace_dir / (suite[u].id + ".csv"));
    } catch (...) {
      errors[u] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

void write_results_csv(const std::vector<EpisodeResult>& results, const std::filesystem::path& path) {
  if (results.empty()) throw std::invalid_argument("no results to write");
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write results to " + path.string());
  out << kResultsHeader << '\n';
  char dist[64];
  for (const EpisodeResult& r : results) {
    if (r.scenario.find(',') != std::string::npos || r.category.find(',') != std::string::npos)
      throw std::invalid_argument("scenario ids and categories cannot contain commas");
    std::snprintf(dist, sizeof dist, "%.3f", r.distance);
    out << r.scenario << ',' << r.category << ',' << r.collisions << ',' << r.lane_invasions << ',' << dist << ','
        << r.steps << ',' << (r.reached_goal ? "true" : "false") << '\n';
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::vector<EpisodeResult> read_results_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open results " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kResultsHeader)
    throw std::runtime_error("unexpected results header in " + path.string());
  std::vector<EpisodeResult> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() != 7 || (f[6] != "true" && f[6] != "false"))
      throw std::runtime_error("malformed results row: " + line);
    EpisodeResult r;
    r.scenario = f[0];
    r.category = f[1];
    r.collisions = std::stoi(f[2]);
    r.lane_invasions = std::stoi(f[3]);
    r.distance = std::stod(f[4]);
    r.steps = std::stoi(f[5]);
    r.reached_goal = f[6] == "true";
    out.push_back(r);
  }
  return out;
}

}  // namespace rig::bench
