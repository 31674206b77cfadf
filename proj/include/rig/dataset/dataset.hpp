#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "rig/simworld/expert.hpp"
#include "rig/simworld/sensor.hpp"
#include "rig/simworld/world.hpp"

namespace rig::data {

/// Expert demonstration: states[i], observations[i] and actions[i] describe
/// step i; states has one extra entry for the state after the last action.
struct EpisodeTrace {
  int town = 0;
  int origin = 0;
  int destination = 0;
  std::vector<sim::WorldState> states;
  std::vector<sim::Observation> observations;
  std::vector<sim::Action> actions;
};

struct CollectConfig {
  int max_steps = 600;
  int num_vehicles = 30;
  int num_pedestrians = 4;
  double goal_radius = 5.0;
  // Steering perturbation applied to the executed action, an AR(1) process
  // with this stationary std and per-step correlation. The expert keeps
  // correcting, so the recorded futures include recoveries.
  double steer_noise = 0.0;
  double steer_noise_correlation = 0.9;
  sim::SensorConfig sensor = sim::desk_sensor_config();
  sim::ExpertConfig expert;
};

/// One expert episode; spawn and goal are drawn from (seed, episode).
EpisodeTrace collect_episode(int town_id, int episode, std::uint64_t seed, const CollectConfig& cfg = {});

/// `episodes` traces in episode order; episodes run in parallel.
std::vector<EpisodeTrace> collect(int town_id, int episodes, std::uint64_t seed, const CollectConfig& cfg = {});

struct Sample {
  int tau = 0;
  int horizon = 0;
  std::vector<double> past;    // (tau + 1) x 2, ego frame at s0, past[tau] = (0, 0)
  std::vector<double> future;  // horizon x 2
  sim::Observation obs;        // taken at s0
};

/// Sliding windows of tau + 1 + horizon ego positions, anchors `stride` apart.
std::vector<Sample> process(const std::vector<EpisodeTrace>& traces, int tau, int horizon, int stride);
std::vector<Sample> process(const EpisodeTrace& trace, int tau, int horizon, int stride);

/// Rounds every stored value to what the on-disk format can hold.
void quantize(Sample& s);

/// ceil(n / b); throws std::invalid_argument for b == 0.
std::size_t num_batches(std::size_t n, std::size_t b);

struct ShardPlan {
  int epoch = 0;
  std::uint64_t seed = 0;
  int num_workers = 1;
  int rank = 0;
  std::vector<std::size_t> indices;
};

/// Seeded Fisher-Yates permutation of 0..n-1, fresh for every epoch.
std::vector<std::size_t> epoch_permutation(std::size_t n, int epoch, std::uint64_t seed);

/// Pads `perm` with its own head to a multiple of W, then deals positions
/// round robin: rank w takes positions i with i mod W == w.
std::vector<std::size_t> shard_of(const std::vector<std::size_t>& perm, int num_workers, int rank);

ShardPlan shard_indices(std::size_t n, int num_workers, int rank, int epoch, std::uint64_t seed);

class DatasetError : public std::runtime_error {
 public:
  enum class Kind { io, version, truncated, checksum, malformed };
  DatasetError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct DatasetHeader {
  int version = 1;
  std::size_t count = 0;
  int tau = 0;
  int horizon = 0;
  int grid_size = 0;
  std::uint64_t seed = 0;
  std::uint32_t crc32 = 0;
};

inline constexpr int kDatasetVersion = 1;

/// Text header then little-endian f32 records: past | grid | lambda(3) | future.
void write_dataset(const std::vector<Sample>& samples, const std::filesystem::path& path, std::uint64_t seed = 0);
std::vector<Sample> read_dataset(const std::filesystem::path& path, DatasetHeader* header = nullptr);

struct DatasetConfig {
  std::vector<int> towns{1, 2, 3};
  int episodes = 240;  // split round robin over towns
  int tau = 4;
  int horizon = 10;
  int stride = 5;
  int validation_every = 10;  // every n-th episode goes to validation
  std::uint64_t seed = 7;
  // Perturbed demonstrations: without them the learned spread is too narrow
  // for goal ranking to find a turn, and the model never sees a recovery.
  CollectConfig collect = [] {
    CollectConfig c;
    c.steer_noise = 0.4;
    return c;
  }();
};

struct SplitDataset {
  std::vector<Sample> train;
  std::vector<Sample> validation;
};

/// Collects, windows and quantizes episode by episode.
SplitDataset build_dataset(const DatasetConfig& cfg);

}  // namespace rig::data
