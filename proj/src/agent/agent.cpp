#include "rig/agent/agent.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "rig/simworld/expert.hpp"

namespace rig::agent {

void AgentConfig::validate(int horizon) const {
  std::string bad;
  auto need = [&](bool ok, const std::string& what) {
    if (!ok) bad += (bad.empty() ? "" : "; ") + what;
  };
  need(num_candidates >= 1, "num_candidates must be >= 1");
  need(goal_weight >= 0.0 && std::isfinite(goal_weight), "goal_weight must be >= 0");
  need(lookahead >= 1 && lookahead <= horizon, "lookahead must be in 1.." + std::to_string(horizon));
  need(speed_gain >= 0.0, "speed_gain must be >= 0");
  need(heading_gain >= 0.0, "heading_gain must be >= 0");
  need(replan_every >= 1, "replan_every must be >= 1");
  need(dt > 0.0, "dt must be > 0");
  if (!bad.empty()) throw std::invalid_argument("invalid agent config: " + bad);
}

Plan score_candidates(const model::DimModel& model, std::span<const double> params, std::span<const double> context,
                      std::vector<std::vector<double>> trajectories, Vec2 goal, double goal_weight) {
  Plan plan;
  plan.trajectories = std::move(trajectories);
  const double discard = -std::numeric_limits<double>::infinity();
  double best = discard;
  for (std::size_t k = 0; k < plan.trajectories.size(); ++k) {
    const std::vector<double>& S = plan.trajectories[k];
    double lq = discard, score = discard;
    bool finite = S.size() >= 2;
    for (double v : S) finite = finite && std::isfinite(v);
    if (finite) {
      lq = model.log_prob(params, context, S).log_q;
      const Vec2 end{S[S.size() - 2], S[S.size() - 1]};
      score = lq - goal_weight * distance(end, goal);
      if (!std::isfinite(score)) score = discard;
    }
    plan.log_q.push_back(lq);
    plan.scores.push_back(score);
    if (score > best) {
      best = score;
      plan.chosen = static_cast<int>(k);
    }
  }
  if (plan.chosen < 0) throw std::runtime_error("every candidate trajectory had a non-finite score");
  return plan;
}

sim::Action control_toward(Vec2 waypoint, double speed, int steps, const AgentConfig& cfg) {
  const double dist = norm(waypoint);
  const double heading_error = dist > 1e-6 ? std::atan2(waypoint.y, waypoint.x) : 0.0;
  const double steer = std::clamp(cfg.heading_gain * heading_error, -1.0, 1.0);
  // A waypoint behind the car means the plan asks to stop.
  const double target = waypoint.x > 0.0 ? dist / (steps * cfg.dt) : 0.0;
  return sim::longitudinal_action(cfg.speed_gain * (target - speed), speed, steer, cfg.vehicle);
}

DimAgent::DimAgent(const model::DimModel& model, std::vector<double> params, AgentConfig cfg)
    : model_(model), params_(std::move(params)), cfg_(cfg), rng_(cfg.seed) {
  cfg_.validate(model.config().horizon);
  if (params_.size() != model.num_params()) throw std::invalid_argument("agent params do not match the model");
}

void DimAgent::reset(std::uint64_t seed) {
  rng_.seed(seed);
  plan_world_.clear();
  plan_age_ = 0;
}

Plan DimAgent::plan(const sim::Observation& obs, std::span<const double> past, Vec2 goal) {
  if (obs.grid_size != model_.config().grid_size)
    throw std::invalid_argument("observation grid " + std::to_string(obs.grid_size) + " does not match the model's " +
                                std::to_string(model_.config().grid_size));
  const std::vector<double> ctx = model_.context(params_, obs, past);
  const std::size_t n = static_cast<std::size_t>(model_.config().horizon) * model::kDims;
  std::normal_distribution<double> n01;
  std::vector<std::vector<double>> candidates;
  candidates.reserve(static_cast<std::size_t>(cfg_.num_candidates));
  std::vector<double> z(n);
  for (int k = 0; k < cfg_.num_candidates; ++k) {
    if (k == 0 && cfg_.include_mean)
      std::fill(z.begin(), z.end(), 0.0);
    else
      for (double& v : z) v = n01(rng_);
    candidates.push_back(model_.sample(params_, ctx, z));
  }
  return score_candidates(model_, params_, ctx, std::move(candidates), goal, cfg_.goal_weight);
}

sim::Action DimAgent::act(const sim::Observation& obs, std::span<const double> past, Vec2 goal, const Pose& pose) {
  if (plan_world_.empty() || plan_age_ >= cfg_.replan_every) {
    const Plan p = plan(obs, past, goal);
    const std::vector<double>& S = p.best();
    plan_world_.clear();
    for (std::size_t i = 0; i + 1 < S.size(); i += 2) plan_world_.push_back(to_world(pose, {S[i], S[i + 1]}));
    plan_age_ = 0;
  }
  // The plan was made plan_age_ steps ago, so the waypoint due `lookahead`
  // steps from now sits that much further along it.
  const int idx = std::min(cfg_.lookahead + plan_age_, static_cast<int>(plan_world_.size())) - 1;
  const int steps = idx + 1 - plan_age_;
  const Vec2 w = to_local(pose, plan_world_[static_cast<std::size_t>(idx)]);
  ++plan_age_;
  return control_toward(w, obs.velocity, std::max(steps, 1), cfg_);
}

}  // namespace rig::agent
