#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "rig/model/dim_model.hpp"

namespace rig::model {

struct OptimizerState {
  std::string kind = "sgd";
  std::uint64_t step = 0;
  std::vector<double> m;  // first moments, empty for sgd
  std::vector<double> v;  // second moments, empty for sgd
  bool operator==(const OptimizerState&) const = default;
};

struct Checkpoint {
  ModelConfig model;
  std::vector<double> params;
  OptimizerState optimizer;
  int epoch = 0;
  std::uint64_t global_step = 0;
  std::string config_digest;
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kCheckpointVersion = 1;

/// Text header (config, block registry, counters) followed by little-endian
/// f64 arrays: params, then optimizer moments. Written to a temporary file
/// beside `path` and renamed into place.
void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace rig::model
