#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

#include "rig/benchmark/benchmark.hpp"
#include "rig/simworld/town.hpp"

namespace rig::bench {

namespace {

const std::set<std::string> kRequired{"town", "origin", "destination", "num_vehicles", "num_pedestrians"};
const std::set<std::string> kOptional{"seed", "max_steps"};

int int_field(const nlohmann::json& j, const std::string& key) {
  const auto& v = j.at(key);
  if (!v.is_number_integer()) throw ScenarioError("scenario field '" + key + "' must be an integer");
  const auto x = v.get<long long>();
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
    throw ScenarioError("scenario field '" + key + "' is out of range");
  return static_cast<int>(x);
}

}  // namespace

void validate_scenario(const ScenarioSpec& s) {
  std::shared_ptr<const sim::RoadGraph> town;
  try {
    town = sim::shared_town(s.town);
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(std::string("scenario field 'town': ") + e.what());
  }
  const int n = town->num_spawn_points();
  auto spawn_ok = [&](int i) { return i >= 0 && i < n; };
  if (!spawn_ok(s.origin))
    throw ScenarioError("scenario field 'origin': spawn index " + std::to_string(s.origin) + " not in 0.." +
                        std::to_string(n - 1) + " for town " + std::to_string(s.town));
  if (!spawn_ok(s.destination))
    throw ScenarioError("scenario field 'destination': spawn index " + std::to_string(s.destination) +
                        " not in 0.." + std::to_string(n - 1) + " for town " + std::to_string(s.town));
  if (s.origin == s.destination) throw ScenarioError("scenario field 'destination' must differ from 'origin'");
  if (s.num_vehicles < 0) throw ScenarioError("scenario field 'num_vehicles' must be >= 0");
  if (s.num_pedestrians < 0) throw ScenarioError("scenario field 'num_pedestrians' must be >= 0");
  if (s.max_steps < 0) throw ScenarioError("scenario field 'max_steps' must be >= 0");
}

ScenarioSpec parse_scenario(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ScenarioError(std::string("scenario is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ScenarioError("scenario must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (!kRequired.count(key) && !kOptional.count(key)) throw ScenarioError("unknown scenario field '" + key + "'");
  for (const std::string& key : kRequired)
    if (!j.contains(key)) throw ScenarioError("missing scenario field '" + key + "'");

  ScenarioSpec s;
  s.town = int_field(j, "town");
  s.origin = int_field(j, "origin");
  s.destination = int_field(j, "destination");
  s.num_vehicles = int_field(j, "num_vehicles");
  s.num_pedestrians = int_field(j, "num_pedestrians");
  if (j.contains("seed")) {
    const auto& v = j.at("seed");
    if (!v.is_number_unsigned()) throw ScenarioError("scenario field 'seed' must be a non-negative integer");
    s.seed = v.get<std::uint64_t>();
  }
  if (j.contains("max_steps")) s.max_steps = int_field(j, "max_steps");
  validate_scenario(s);
  return s;
}

ScenarioSpec load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

std::string scenario_json(const ScenarioSpec& s) {
  nlohmann::ordered_json j;
  j["town"] = s.town;
  j["origin"] = s.origin;
  j["destination"] = s.destination;
  j["num_vehicles"] = s.num_vehicles;
  j["num_pedestrians"] = s.num_pedestrians;
  j["seed"] = s.seed;
  j["max_steps"] = s.max_steps;
  return j.dump(2);
}

}  // namespace rig::bench
