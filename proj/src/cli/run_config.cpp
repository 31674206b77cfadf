#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "rig/cli/run_config.hpp"
#include "rig/simworld/town.hpp"

namespace rig::cli {

namespace {

std::string join_lines(const std::vector<std::string>& v) {
  std::string out = "invalid run config:";
  for (const auto& p : v) out += "\n  " + p;
  return out;
}

// Sub-configs report "invalid x config: a; b; c". Split that back into items.
void absorb(std::vector<std::string>& out, const std::string& section, const std::exception& e) {
  std::string msg = e.what();
  if (const auto colon = msg.find(": "); colon != std::string::npos) msg = msg.substr(colon + 2);
  std::size_t start = 0;
  while (start <= msg.size()) {
    const std::size_t end = msg.find("; ", start);
    out.push_back(section + "." + msg.substr(start, end == std::string::npos ? std::string::npos : end - start));
    if (end == std::string::npos) break;
    start = end + 2;
  }
}

template <typename T>
T convert(const std::string& raw) {
  std::istringstream in(raw);
  T v{};
  in >> v;
  if (in.fail() || !(in >> std::ws).eof()) throw std::invalid_argument("cannot read '" + raw + "'");
  return v;
}

template <>
bool convert<bool>(const std::string& raw) {
  if (raw == "true" || raw == "1" || raw == "yes") return true;
  if (raw == "false" || raw == "0" || raw == "no") return false;
  throw std::invalid_argument("cannot read '" + raw + "' as a boolean");
}

template <>
std::string convert<std::string>(const std::string& raw) {
  return raw;
}

template <>
std::uint64_t convert<std::uint64_t>(const std::string& raw) {
  if (raw.empty() || raw.front() == '-') throw std::invalid_argument("cannot read '" + raw + "' as a seed");
  std::size_t used = 0;
  const unsigned long long v = std::stoull(raw, &used);
  if (used != raw.size()) throw std::invalid_argument("cannot read '" + raw + "' as a seed");
  return v;
}

std::vector<int> int_list(const std::string& raw) {
  std::vector<int> out;
  std::stringstream ss(raw);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto a = item.find_first_not_of(' ');
    const auto b = item.find_last_not_of(' ');
    out.push_back(convert<int>(a == std::string::npos ? std::string() : item.substr(a, b - a + 1)));
  }
  if (out.empty()) throw std::invalid_argument("empty list");
  return out;
}

using Setter = std::function<void(const std::string&)>;
using Section = std::map<std::string, Setter>;

template <typename T>
Setter set(T& field) {
  return [&field](const std::string& raw) { field = convert<T>(raw); };
}

std::map<std::string, Section> schema(RunConfig& c) {
  auto& s = c.sensor;
  auto& d = c.dataset;
  auto& m = c.model;
  auto& t = c.trainer;
  auto& a = c.agent;
  auto& b = c.benchmark;
  return {
      {"simworld",
       {{"grid_size", set(s.grid_size)},
        {"meters_per_cell", set(s.meters_per_cell)},
        {"anchor_row", set(s.anchor_row)},
        {"anchor_col", set(s.anchor_col)},
        {"light_range", set(s.light_range)}}},
      {"dataset",
       {{"towns", [&d](const std::string& raw) { d.towns = int_list(raw); }},
        {"episodes", set(d.episodes)},
        {"tau", set(d.tau)},
        {"horizon", set(d.horizon)},
        {"stride", set(d.stride)},
        {"validation_every", set(d.validation_every)},
        {"seed", set(d.seed)},
        {"max_steps", set(d.collect.max_steps)},
        {"num_vehicles", set(d.collect.num_vehicles)},
        {"num_pedestrians", set(d.collect.num_pedestrians)},
        {"goal_radius", set(d.collect.goal_radius)},
        {"steer_noise", set(d.collect.steer_noise)},
        {"steer_noise_correlation", set(d.collect.steer_noise_correlation)}}},
      {"model",
       {{"tau", set(m.tau)},
        {"horizon", set(m.horizon)},
        {"grid_size", set(m.grid_size)},
        {"encoder_dim", set(m.encoder_dim)},
        {"merger_dim", set(m.merger_dim)},
        {"hidden_dim", set(m.hidden_dim)},
        {"sigma_min", set(m.sigma_min)}}},
      {"trainer",
       {{"num_workers", set(t.num_workers)},
        {"per_worker_batch", set(t.per_worker_batch)},
        {"epochs", set(t.epochs)},
        {"epoch_mode", [&t](const std::string& raw) { t.epoch_mode = train::epoch_mode_from_string(raw); }},
        {"optimizer", [&t](const std::string& raw) { t.optimizer = train::optimizer_from_string(raw); }},
        {"learning_rate", set(t.learning_rate)},
        {"lr_decay", set(t.lr_decay)},
        {"seed", set(t.seed)},
        {"checkpoint_every", set(t.checkpoint_every)},
        {"validate_every", set(t.validate_every)},
        {"parallel", set(t.parallel)}}},
      {"agent",
       {{"num_candidates", set(a.agent.num_candidates)},
        {"goal_weight", set(a.agent.goal_weight)},
        {"lookahead", set(a.agent.lookahead)},
        {"speed_gain", set(a.agent.speed_gain)},
        {"heading_gain", set(a.agent.heading_gain)},
        {"replan_every", set(a.agent.replan_every)},
        {"seed", set(a.agent.seed)},
        {"goal_distance", set(a.goal_distance)},
        {"goal_time", set(a.goal_time)}}},
      {"benchmark",
       {{"suite", set(b.suite)},
        {"driver", set(b.driver)},
        {"max_steps", set(b.max_steps)},
        {"parallel", set(b.parallel)},
        {"traces", set(b.traces)}}},
  };
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error(join_lines(problems)), problems_(std::move(problems)) {}

std::vector<std::string> RunConfig::problems() const {
  std::vector<std::string> out;
  auto need = [&](bool ok, const std::string& what) {
    if (!ok) out.push_back(what);
  };

  need(sensor.grid_size >= 1, "simworld.grid_size must be >= 1");
  need(sensor.meters_per_cell > 0.0, "simworld.meters_per_cell must be > 0");
  need(sensor.anchor_row < sensor.grid_size, "simworld.anchor_row must be < grid_size");
  need(sensor.anchor_col < sensor.grid_size, "simworld.anchor_col must be < grid_size");
  need(sensor.light_range >= 0.0, "simworld.light_range must be >= 0");

  for (int town : dataset.towns) need(town >= 1 && town <= sim::kNumTowns, "dataset.towns has unknown town " + std::to_string(town));
  need(!dataset.towns.empty(), "dataset.towns must not be empty");
  need(dataset.episodes >= 1, "dataset.episodes must be >= 1");
  need(dataset.tau >= 0, "dataset.tau must be >= 0");
  need(dataset.horizon >= 1, "dataset.horizon must be >= 1");
  need(dataset.stride >= 1, "dataset.stride must be >= 1");
  need(dataset.validation_every >= 0, "dataset.validation_every must be >= 0");
  need(dataset.collect.max_steps >= 1, "dataset.max_steps must be >= 1");
  need(dataset.collect.num_vehicles >= 0, "dataset.num_vehicles must be >= 0");
  need(dataset.collect.num_pedestrians >= 0, "dataset.num_pedestrians must be >= 0");
  need(dataset.collect.goal_radius > 0.0, "dataset.goal_radius must be > 0");
  need(dataset.collect.steer_noise >= 0.0, "dataset.steer_noise must be >= 0");
  need(dataset.collect.steer_noise_correlation >= 0.0 && dataset.collect.steer_noise_correlation < 1.0,
       "dataset.steer_noise_correlation must be in [0, 1)");

  try {
    model.validate();
  } catch (const std::invalid_argument& e) {
    absorb(out, "model", e);
  }
  need(model.grid_size == sensor.grid_size, "model.grid_size " + std::to_string(model.grid_size) +
                                                " must equal simworld.grid_size " + std::to_string(sensor.grid_size));
  need(model.tau == dataset.tau, "model.tau must equal dataset.tau");
  need(model.horizon == dataset.horizon, "model.horizon must equal dataset.horizon");

  try {
    trainer.validate();
  } catch (const std::invalid_argument& e) {
    absorb(out, "trainer", e);
  }
  need(trainer.validate_every == 0 || dataset.validation_every > 0,
       "trainer.validate_every needs a validation split (dataset.validation_every > 0)");

  try {
    agent.agent.validate(model.horizon);
  } catch (const std::invalid_argument& e) {
    absorb(out, "agent", e);
  }
  need(agent.goal_distance >= 0.0, "agent.goal_distance must be >= 0");
  need(agent.goal_time >= 0.0, "agent.goal_time must be >= 0");

  need(benchmark.driver == "agent" || benchmark.driver == "expert", "benchmark.driver must be agent or expert");
  need(benchmark.max_steps >= 0, "benchmark.max_steps must be >= 0");
  need(!benchmark.suite.empty(), "benchmark.suite must be 'default' or a directory");
  return out;
}

void RunConfig::validate() const {
  if (auto p = problems(); !p.empty()) throw ConfigError(std::move(p));
}

void RunConfig::override_seed(std::uint64_t seed) {
  dataset.seed = seed;
  trainer.seed = seed;
  agent.agent.seed = seed;
}

RunConfig parse_run_config(const std::string& ini_text) {
  boost::property_tree::ptree tree;
  try {
    std::istringstream in(ini_text);
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError({std::string("line ") + std::to_string(e.line()) + ": " + e.message()});
  }

  RunConfig cfg;
  std::vector<std::string> problems;
  auto sections = schema(cfg);
  for (const auto& [name, body] : tree) {
    const auto sec = sections.find(name);
    if (sec == sections.end()) {
      problems.push_back(body.empty() ? "key '" + name + "' is outside any section" : "unknown section [" + name + "]");
      continue;
    }
    for (const auto& [key, value] : body) {
      const auto setter = sec->second.find(key);
      if (setter == sec->second.end()) {
        problems.push_back("unknown key " + name + "." + key);
        continue;
      }
      try {
        setter->second(value.data());
      } catch (const std::exception& e) {
        problems.push_back(name + "." + key + ": " + e.what());
      }
    }
  }
  for (auto& p : cfg.problems()) problems.push_back(std::move(p));
  if (!problems.empty()) throw ConfigError(std::move(problems));

  cfg.dataset.collect.sensor = cfg.sensor;
  cfg.agent.sensor = cfg.sensor;
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot open config " + path.string()});
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

}  // namespace rig::cli
