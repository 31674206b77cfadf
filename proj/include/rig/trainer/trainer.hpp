#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rig/dataset/dataset.hpp"
#include "rig/model/checkpoint.hpp"
#include "rig/model/dim_model.hpp"

namespace rig::train {

/// split: every epoch is one pass over the globally sharded data.
/// per_worker: every worker makes its own full pass per epoch, so the
/// configured epoch count is counted per worker.
enum class EpochMode { split, per_worker };
enum class OptimizerKind { sgd, adam };

const char* to_string(EpochMode m);
const char* to_string(OptimizerKind k);
EpochMode epoch_mode_from_string(const std::string& s);
OptimizerKind optimizer_from_string(const std::string& s);

struct TrainerConfig {
  int num_workers = 1;
  int per_worker_batch = 32;
  int epochs = 20;
  EpochMode epoch_mode = EpochMode::split;
  double learning_rate = 1e-3;
  double lr_decay = 1.0;  // epoch e trains at learning_rate * lr_decay^(e - 1)
  OptimizerKind optimizer = OptimizerKind::adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 1;
  int checkpoint_every = 0;  // epochs; 0 disables
  int validate_every = 1;    // epochs; 0 disables
  std::filesystem::path checkpoint_dir = "checkpoints";
  bool parallel = true;         // false runs the workers one after another
  bool check_replicas = false;  // compare replicas bitwise after every step

  /// Throws std::invalid_argument naming every violated field.
  void validate() const;
  /// Single-line summary of every field that changes the training trajectory.
  std::string digest() const;
};

class WorkerFailure : public std::runtime_error {
 public:
  WorkerFailure(int rank, const std::string& what)
      : std::runtime_error("worker " + std::to_string(rank) + " failed: " + what), rank_(rank) {}
  int rank() const { return rank_; }

 private:
  int rank_;
};

/// Elementwise mean of equal-length vectors, summed in rank order 0..W-1.
std::vector<double> all_reduce_mean(std::span<const std::vector<double>> grads);

class Optimizer {
 public:
  explicit Optimizer(const TrainerConfig& cfg, std::size_t num_params);
  void step(std::span<double> params, std::span<const double> grad);
  const model::OptimizerState& state() const { return state_; }
  void load(const model::OptimizerState& s);
  void set_learning_rate(double lr) { lr_ = lr; }

 private:
  OptimizerKind kind_;
  double lr_, beta1_, beta2_, eps_;
  model::OptimizerState state_;
};

struct WorkerState {
  int rank = 0;
  std::vector<double> params;
  Optimizer optimizer;
  std::size_t steps = 0;
};

/// Fresh replicas holding identical copies of `params`.
std::vector<WorkerState> make_workers(const TrainerConfig& cfg, const std::vector<double>& params);

/// One synchronous step, workers run one after another: local gradients,
/// all-reduce, identical update on every replica. Returns each worker's
/// pre-update batch loss.
std::vector<double> train_step(const model::DimModel& model, std::vector<WorkerState>& workers,
                               const std::vector<std::vector<const data::Sample*>>& batches);

/// Index lists each rank walks through in `epoch` (1-based).
std::vector<std::vector<std::size_t>> epoch_orders(const TrainerConfig& cfg, std::size_t n, int epoch);

/// Mean NLL over the whole set in batches of `batch`; no gradients.
double validate(const model::DimModel& model, std::span<const double> params,
                const std::vector<data::Sample>& samples, std::size_t batch);

/// Only rank 0 writes; every other rank returns false without touching disk.
bool save_checkpoint(int rank, const model::Checkpoint& ckpt, const std::filesystem::path& path);
std::filesystem::path checkpoint_path(const TrainerConfig& cfg, int epoch);

struct EpochMetrics {
  int epoch = 0;
  double train_nll = 0.0;
  std::optional<double> val_nll;
  double wall_seconds = 0.0;
  std::vector<std::size_t> steps;  // per worker, this epoch
};

struct MetricsLog {
  std::vector<EpochMetrics> rows;
  void write_csv(const std::filesystem::path& path) const;
  static MetricsLog read_csv(const std::filesystem::path& path);
};

struct FitOptions {
  std::optional<std::filesystem::path> resume_from;
  std::optional<std::vector<double>> initial_params;  // default: model.init_params(seed)
  /// Called by every worker before it computes a gradient; throwing aborts the run.
  std::function<void(int rank, std::uint64_t global_step)> before_step;
  std::function<void(const EpochMetrics&)> on_epoch;
  /// Called after every synchronous step with each worker's batch loss.
  std::function<void(std::uint64_t global_step, const std::vector<double>& losses)> on_step;
};

struct FitResult {
  std::vector<double> params;  // rank 0
  model::OptimizerState optimizer;
  MetricsLog log;
  std::uint64_t global_step = 0;
  int checkpoints_written = 0;
  bool replicas_identical = true;
};

FitResult fit(const model::DimModel& model, const TrainerConfig& cfg, const std::vector<data::Sample>& train,
              const std::vector<data::Sample>& validation, const FitOptions& options = {});

}  // namespace rig::train
