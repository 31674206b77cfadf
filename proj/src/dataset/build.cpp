#include <stdexcept>

#include "rig/dataset/dataset.hpp"
#include "rig/simworld/town.hpp"

namespace rig::data {

SplitDataset build_dataset(const DatasetConfig& cfg) {
  if (cfg.towns.empty() || cfg.episodes < 1) throw std::invalid_argument("build_dataset needs towns and episodes");
  for (int t : cfg.towns) {
    (void)sim::shared_town(t);
    (void)sim::town_rails(t);
  }
  const auto n_towns = static_cast<int>(cfg.towns.size());
  std::vector<std::vector<Sample>> per_episode(static_cast<std::size_t>(cfg.episodes));
#pragma omp parallel for schedule(dynamic)
  for (int e = 0; e < cfg.episodes; ++e) {
    const int town = cfg.towns[static_cast<std::size_t>(e % n_towns)];
    const EpisodeTrace tr = collect_episode(town, e, cfg.seed, cfg.collect);
    std::vector<Sample> samples = process(tr, cfg.tau, cfg.horizon, cfg.stride);
    for (Sample& s : samples) quantize(s);
    per_episode[static_cast<std::size_t>(e)] = std::move(samples);
  }
  SplitDataset out;
  for (int e = 0; e < cfg.episodes; ++e) {
    auto& dst = cfg.validation_every > 0 && e % cfg.validation_every == cfg.validation_every - 1 ? out.validation
                                                                                                 : out.train;
    auto& src = per_episode[static_cast<std::size_t>(e)];
    dst.insert(dst.end(), std::make_move_iterator(src.begin()), std::make_move_iterator(src.end()));
  }
  return out;
}

}  // namespace rig::data
