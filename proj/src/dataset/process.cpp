#include <stdexcept>
#include <string>

#include "rig/dataset/dataset.hpp"

namespace rig::data {

std::vector<Sample> process(const EpisodeTrace& trace, int tau, int horizon, int stride) {
  if (tau < 0 || horizon < 1 || stride < 1)
    throw std::invalid_argument("process needs tau >= 0, horizon >= 1, stride >= 1 (got " + std::to_string(tau) +
                                ", " + std::to_string(horizon) + ", " + std::to_string(stride) + ")");
  std::vector<Sample> out;
  const int n = static_cast<int>(trace.states.size());
  const int n_obs = static_cast<int>(trace.observations.size());
  for (int a = tau; a + horizon < n; a += stride) {
    const sim::VehicleState& ego = trace.states[static_cast<std::size_t>(a)].ego;
    const Pose frame = ego.pose();
    Sample s;
    s.tau = tau;
    s.horizon = horizon;
    s.past.reserve(static_cast<std::size_t>(tau + 1) * 2);
    for (int k = a - tau; k <= a; ++k) {
      const Vec2 p = k == a ? Vec2{} : to_local(frame, trace.states[static_cast<std::size_t>(k)].ego.position);
      s.past.push_back(p.x);
      s.past.push_back(p.y);
    }
    s.future.reserve(static_cast<std::size_t>(horizon) * 2);
    for (int t = 1; t <= horizon; ++t) {
      const Vec2 p = to_local(frame, trace.states[static_cast<std::size_t>(a + t)].ego.position);
      s.future.push_back(p.x);
      s.future.push_back(p.y);
    }
    if (a < n_obs) s.obs = trace.observations[static_cast<std::size_t>(a)];
    s.obs.velocity = ego.speed;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Sample> process(const std::vector<EpisodeTrace>& traces, int tau, int horizon, int stride) {
  std::vector<Sample> out;
  for (const EpisodeTrace& t : traces) {
    std::vector<Sample> part = process(t, tau, horizon, stride);
    out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return out;
}

void quantize(Sample& s) {
  for (double& v : s.past) v = static_cast<double>(static_cast<float>(v));
  for (double& v : s.future) v = static_cast<double>(static_cast<float>(v));
  s.obs.velocity = static_cast<double>(static_cast<float>(s.obs.velocity));
}

}  // namespace rig::data
