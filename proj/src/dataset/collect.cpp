#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "rig/dataset/dataset.hpp"
#include "rig/simworld/route.hpp"
#include "rig/simworld/town.hpp"
#include "rig/util/seed.hpp"

namespace rig::data {

EpisodeTrace collect_episode(int town_id, int episode, std::uint64_t seed, const CollectConfig& cfg) {
  const auto town = sim::shared_town(town_id);
  const int n = town->num_spawn_points();
  std::uint64_t state = util::mix_seed(seed, static_cast<std::uint64_t>(town_id), static_cast<std::uint64_t>(episode));
  auto draw = [&] { return static_cast<int>(util::splitmix64(state) % static_cast<std::uint64_t>(n)); };

  EpisodeTrace tr;
  tr.town = town_id;
  sim::Route route;
  for (;;) {
    tr.origin = draw();
    tr.destination = draw();
    if (tr.origin == tr.destination) continue;
    try {
      route = sim::plan_route(*town, tr.origin, tr.destination);
      break;
    } catch (const std::runtime_error&) {
      // unroutable pair: draw again
    }
  }

  sim::WorldState w = sim::spawn_world(
      town, {tr.origin, cfg.num_vehicles, cfg.num_pedestrians, util::splitmix64(state)});
  const Vec2 goal = route.path.point_at(route.path.length());
  std::mt19937_64 noise_rng(util::splitmix64(state));
  std::normal_distribution<double> gauss;
  const double rho = cfg.steer_noise_correlation;
  const double innovation = cfg.steer_noise * std::sqrt(std::max(0.0, 1.0 - rho * rho));
  double noise = cfg.steer_noise > 0.0 ? cfg.steer_noise * gauss(noise_rng) : 0.0;
  tr.states.reserve(static_cast<std::size_t>(cfg.max_steps) + 1);
  for (int i = 0; i < cfg.max_steps && distance(w.ego.position, goal) >= cfg.goal_radius; ++i) {
    tr.observations.push_back(sim::render_observation(w, cfg.sensor));
    sim::Action a = sim::expert_action(w, route, cfg.expert);
    if (cfg.steer_noise > 0.0) {
      a = sim::Action(a.throttle(), a.steer() + noise, a.brake());
      noise = rho * noise + innovation * gauss(noise_rng);
    }
    tr.actions.push_back(a);
    sim::WorldState next = sim::step(w, tr.actions.back());
    tr.states.push_back(std::move(w));
    w = std::move(next);
  }
  tr.states.push_back(std::move(w));
  return tr;
}

std::vector<EpisodeTrace> collect(int town_id, int episodes, std::uint64_t seed, const CollectConfig& cfg) {
  if (episodes < 1) throw std::invalid_argument("collect needs at least one episode");
  (void)sim::shared_town(town_id);  // validates the id before going parallel
  (void)sim::town_rails(town_id);
  std::vector<EpisodeTrace> out(static_cast<std::size_t>(episodes));
#pragma omp parallel for schedule(dynamic)
  for (int e = 0; e < episodes; ++e) out[static_cast<std::size_t>(e)] = collect_episode(town_id, e, seed, cfg);
  return out;
}

}  // namespace rig::data
