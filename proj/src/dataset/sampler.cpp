#include <numeric>
#include <stdexcept>
#include <string>

#include "rig/dataset/dataset.hpp"
#include "rig/util/seed.hpp"

namespace rig::data {

std::size_t num_batches(std::size_t n, std::size_t b) {
  if (b == 0) throw std::invalid_argument("batch size must be at least 1");
  return n / b + (n % b != 0 ? 1 : 0);
}

std::vector<std::size_t> epoch_permutation(std::size_t n, int epoch, std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::uint64_t state = util::mix_seed(seed, static_cast<std::uint64_t>(epoch));
  for (std::size_t i = n; i > 1; --i) {
    // Unbiased draw in [0, i) by rejection.
    const std::uint64_t bound = static_cast<std::uint64_t>(i);
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t r;
    do r = util::splitmix64(state);
    while (r >= limit);
    std::swap(perm[i - 1], perm[static_cast<std::size_t>(r % bound)]);
  }
  return perm;
}

std::vector<std::size_t> shard_of(const std::vector<std::size_t>& perm, int num_workers, int rank) {
  if (num_workers < 1) throw std::invalid_argument("num_workers must be at least 1");
  if (rank < 0 || rank >= num_workers)
    throw std::invalid_argument("rank " + std::to_string(rank) + " outside [0, " + std::to_string(num_workers) + ")");
  if (perm.empty()) throw std::invalid_argument("cannot shard an empty dataset");
  const auto w = static_cast<std::size_t>(num_workers);
  const std::size_t per_rank = num_batches(perm.size(), w);
  std::vector<std::size_t> out;
  out.reserve(per_rank);
  for (std::size_t i = static_cast<std::size_t>(rank); i < per_rank * w; i += w) out.push_back(perm[i % perm.size()]);
  return out;
}

ShardPlan shard_indices(std::size_t n, int num_workers, int rank, int epoch, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("shard_indices needs n >= 1");
  ShardPlan plan;
  plan.epoch = epoch;
  plan.seed = seed;
  plan.num_workers = num_workers;
  plan.rank = rank;
  plan.indices = shard_of(epoch_permutation(n, epoch, seed), num_workers, rank);
  return plan;
}

}  // namespace rig::data
