#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rig/benchmark/benchmark.hpp"
#include "rig/dataset/dataset.hpp"
#include "rig/model/dim_model.hpp"
#include "rig/trainer/trainer.hpp"

namespace rig::cli {

/// Every problem found in a config file, one per line in what().
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

/// A referenced file is missing or does not fit the config.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BenchmarkSettings {
  std::string suite = "default";  // "default" or a directory of scenario JSON files
  std::string driver = "agent";   // agent | expert
  int max_steps = 0;              // overrides every scenario when > 0
  bool parallel = true;
  bool traces = true;
};

/// Everything one pipeline run needs. Loaded from an INI file with the
/// sections [simworld] [dataset] [model] [trainer] [agent] [benchmark];
/// absent keys keep the defaults below.
struct RunConfig {
  sim::SensorConfig sensor = sim::desk_sensor_config();
  data::DatasetConfig dataset;
  model::ModelConfig model;
  train::TrainerConfig trainer = [] {
    train::TrainerConfig t;
    t.per_worker_batch = 64;
    t.lr_decay = 0.85;
    return t;
  }();
  bench::AgentDriverConfig agent;
  BenchmarkSettings benchmark;

  /// Cross-field checks on top of each part's own validation.
  std::vector<std::string> problems() const;
  /// Throws ConfigError when problems() is not empty.
  void validate() const;
  /// Sets every seed in the run.
  void override_seed(std::uint64_t seed);
};

RunConfig parse_run_config(const std::string& ini_text);
RunConfig load_run_config(const std::filesystem::path& path);

/// Where each command reads and writes, relative to the --out directory.
struct Layout {
  std::filesystem::path root;
  std::filesystem::path train_set() const { return root / "dataset" / "train.bin"; }
  std::filesystem::path validation_set() const { return root / "dataset" / "validation.bin"; }
  std::filesystem::path checkpoint_dir() const { return root / "checkpoints"; }
  std::filesystem::path model() const { return root / "model.ckpt"; }
  std::filesystem::path metrics() const { return root / "metrics.csv"; }
  std::filesystem::path results() const { return root / "results.csv"; }
  std::filesystem::path traces() const { return root / "traces"; }
};

struct CollectSummary {
  std::size_t train = 0;
  std::size_t validation = 0;
};

CollectSummary cmd_collect(const RunConfig& cfg, const Layout& out);
train::MetricsLog cmd_train(const RunConfig& cfg, const Layout& out);
/// `checkpoint` defaults to out.model(); unused by the expert driver.
std::vector<bench::EpisodeResult> cmd_benchmark(const RunConfig& cfg, const Layout& out,
                                                const std::optional<std::filesystem::path>& checkpoint = {});
/// Long-format plot data: step,time,series,index,x,y with series "ego"
/// (index 0) or "plan" (index = waypoint number). Returns rows written.
std::size_t cmd_replay(const std::filesystem::path& trace, const std::filesystem::path& out_csv);

/// Scenario files in a directory, sorted by name; ids are the file stems.
std::vector<bench::SuiteEntry> load_suite_dir(const std::filesystem::path& dir);

}  // namespace rig::cli
