#include "rig/simworld/world.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "rig/simworld/town.hpp"
#include "rig/simworld/traffic.hpp"

namespace rig::sim {

namespace {

constexpr double kActorGain = 1.5;
constexpr double kSpawnSeparation = 12.0;
constexpr Vec2 kPedestrianHalf{0.3, 0.3};

}  // namespace

Action::Action(double throttle, double steer, double brake)
    : throttle_(std::clamp(throttle, 0.0, 1.0)),
      steer_(std::clamp(steer, -1.0, 1.0)),
      brake_(std::clamp(brake, 0.0, 1.0)) {
  if (!std::isfinite(throttle) || !std::isfinite(steer) || !std::isfinite(brake))
    throw std::invalid_argument("action components must be finite");
}

VehicleState step_ego(const VehicleState& ego, const Action& action, double dt, const VehicleParams& params) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive, got " + std::to_string(dt));
  VehicleState next = ego;
  const double accel =
      params.max_accel * action.throttle() - params.max_brake * action.brake() - params.drag * ego.speed;
  next.speed = std::clamp(ego.speed + accel * dt, 0.0, params.max_speed);
  const double yaw_rate = ego.speed / params.wheelbase * std::tan(action.steer() * params.max_steer);
  next.heading = normalize_angle(ego.heading + yaw_rate * dt);
  next.position = ego.position + heading_vector(next.heading) * (next.speed * dt);
  return next;
}

WorldState step(const WorldState& world, const Action& action, double dt, const VehicleParams& params) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive, got " + std::to_string(dt));
  WorldState next = world;
  next.time = world.time + dt;
  next.ego = step_ego(world.ego, action, dt, params);
  if (world.actors.empty()) return next;
  if (!world.town || !world.rails) throw std::invalid_argument("world with actors needs a town and rails");

  // Vehicles: ego, then actors, all from the previous state.
  std::vector<OrientedBox> boxes;
  boxes.reserve(1 + world.actors.size());
  boxes.push_back(world.ego.box());
  for (const Actor& a : world.actors) boxes.push_back(a.state.box());

  std::vector<OrientedBox> others;
  others.reserve(boxes.size());
  for (std::size_t i = 0; i < world.actors.size(); ++i) {
    const Actor& a = world.actors[i];
    const Route& rail = (*world.rails)[static_cast<std::size_t>(a.rail)];
    others.clear();
    for (std::size_t k = 0; k < boxes.size(); ++k)
      if (k != i + 1) others.push_back(boxes[k]);
    const SpeedDecision d = plan_speed(rail, a.progress, a.state, world.time, *world.town, others,
                                       world.pedestrians, {}, params);
    const double accel = d.full_brake ? -params.max_brake
                                      : std::clamp(kActorGain * (d.target_speed - a.state.speed), -params.max_brake,
                                                   params.max_accel);
    Actor& n = next.actors[i];
    n.state.speed = std::clamp(a.state.speed + accel * dt, 0.0, params.max_speed);
    n.progress = rail.path.wrap(a.progress + n.state.speed * dt);
    n.state.position = rail.path.point_at(n.progress);
    n.state.heading = rail.path.heading_at(n.progress);
  }
  return next;
}

WorldState WorldState::transformed(const RigidTransform& tf) const {
  WorldState out = *this;
  out.ego.position = tf.apply(ego.position);
  out.ego.heading = tf.apply_heading(ego.heading);
  for (Actor& a : out.actors) {
    a.state.position = tf.apply(a.state.position);
    a.state.heading = tf.apply_heading(a.state.heading);
  }
  for (OrientedBox& p : out.pedestrians) {
    p.center = tf.apply(p.center);
    p.heading = tf.apply_heading(p.heading);
  }
  if (town) out.town = std::make_shared<const RoadGraph>(town->transformed(tf));
  if (rails) {
    auto moved = std::make_shared<std::vector<Route>>();
    moved->reserve(rails->size());
    for (const Route& r : *rails) moved->push_back(r.transformed(tf));
    out.rails = std::move(moved);
  }
  return out;
}

WorldState spawn_world(std::shared_ptr<const RoadGraph> town, const SpawnRequest& req) {
  if (!town) throw std::invalid_argument("spawn_world needs a town");
  const int n = town->num_spawn_points();
  if (req.origin < 0 || req.origin >= n)
    throw std::out_of_range("origin spawn index " + std::to_string(req.origin) + " outside [0, " +
                            std::to_string(n) + ")");
  if (req.num_vehicles < 0 || req.num_pedestrians < 0)
    throw std::invalid_argument("vehicle and pedestrian counts must be non-negative");

  WorldState w;
  w.town = town;
  w.rng_seed = req.seed;
  const Pose start = town->spawn_pose(req.origin);
  w.ego.position = start.position;
  w.ego.heading = start.heading;

  std::mt19937_64 rng(req.seed);
  if (req.num_vehicles > 0) {
    const auto cached = town->town_id() >= 1 && town->town_id() <= 3 ? shared_town(town->town_id()) : nullptr;
    w.rails = cached == town ? town_rails(town->town_id())
                             : std::make_shared<const std::vector<Route>>(build_rails(*town));
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<Vec2> taken{w.ego.position};
    for (int idx : order) {
      if (static_cast<int>(w.actors.size()) == req.num_vehicles) break;
      const Pose p = town->spawn_pose(idx);
      const bool clear = std::all_of(taken.begin(), taken.end(),
                                     [&](Vec2 q) { return distance(p.position, q) >= kSpawnSeparation; });
      if (!clear) continue;
      Actor a;
      a.rail = idx;
      a.progress = 0.0;
      const Route& rail = (*w.rails)[static_cast<std::size_t>(idx)];
      a.state.position = rail.path.point_at(0.0);
      a.state.heading = rail.path.heading_at(0.0);
      taken.push_back(a.state.position);
      w.actors.push_back(a);
    }
    if (static_cast<int>(w.actors.size()) < req.num_vehicles)
      throw std::invalid_argument("cannot place " + std::to_string(req.num_vehicles) + " vehicles in town " +
                                  std::to_string(town->town_id()) + " (room for " +
                                  std::to_string(w.actors.size()) + ")");
  }

  // Pedestrians stand on the sidewalk beside a random lane.
  const auto edges = town->edges();
  std::uniform_int_distribution<std::size_t> pick_edge(0, edges.size() - 1);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int k = 0, attempts = 0; k < req.num_pedestrians; ++attempts) {
    if (attempts > 100 * (req.num_pedestrians + 1))
      throw std::runtime_error("could not place pedestrians off the road");
    const LaneEdge& e = edges[pick_edge(rng)];
    const Vec2 a = town->nodes()[static_cast<std::size_t>(e.from)].position;
    const Vec2 b = town->nodes()[static_cast<std::size_t>(e.to)].position;
    const double side = u01(rng) < 0.5 ? -1.0 : 1.0;
    const Vec2 dir = unit(b - a);
    const Vec2 c = a + (b - a) * (0.2 + 0.6 * u01(rng)) + perp(dir) * (side * (0.5 * e.lane_width + 1.5));
    if (town->road_clearance(c) < 1.0) continue;
    w.pedestrians.push_back({c, std::atan2(dir.y, dir.x), kPedestrianHalf});
    ++k;
  }
  return w;
}

}  // namespace rig::sim
