#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rig/dataset/dataset.hpp"
#include "rig/model/tape.hpp"
#include "rig/simworld/sensor.hpp"

namespace rig::model {

inline constexpr int kDims = 2;       // waypoints live on the ground plane
inline constexpr int kLambda = 6;     // velocity, at-light flag, one-hot light state
inline constexpr int kPooled = 8;     // grid is average-pooled to 8 x 8 x channels

struct ModelConfig {
  int tau = 4;
  int horizon = 10;
  int grid_size = 16;
  int encoder_dim = 32;  // E
  int merger_dim = 32;   // M
  int hidden_dim = 32;   // H
  double sigma_min = 1e-3;

  /// Throws std::invalid_argument naming every violated field.
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

struct ParamBlock {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;  // 1 for biases
  std::size_t offset = 0;
  std::size_t size() const { return rows * cols; }
  bool is_bias() const { return cols == 1; }
};

/// Shape registry of the flat parameter vector.
class Registry {
 public:
  explicit Registry(const ModelConfig& cfg);
  std::span<const ParamBlock> blocks() const { return blocks_; }
  const ParamBlock& at(const std::string& name) const;
  std::size_t total() const { return total_; }

 private:
  void add(std::string name, std::size_t rows, std::size_t cols);
  std::vector<ParamBlock> blocks_;
  std::size_t total_ = 0;
};

struct LogProbResult {
  double log_q = 0.0;
  std::vector<double> per_step;  // horizon entries summing to log_q
  std::vector<double> gradient;  // w.r.t. parameters, empty unless requested
};

struct LossResult {
  double loss = 0.0;             // mean negative log-likelihood
  std::vector<double> gradient;  // of the mean
};

/// Encoder / merger / GRU-flow decoder over a flat parameter vector.
/// Every method is pure in (params, inputs).
class DimModel {
 public:
  explicit DimModel(ModelConfig cfg);

  const ModelConfig& config() const { return cfg_; }
  const Registry& registry() const { return reg_; }
  std::size_t num_params() const { return reg_.total(); }

  /// Weights U(-0.08, 0.08), biases zero.
  std::vector<double> init_params(std::uint64_t seed) const;

  std::vector<double> encode(std::span<const double> params, std::span<const float> visual_features) const;
  std::vector<double> merge(std::span<const double> params, std::span<const double> encoded,
                            std::span<const double> lambda, std::span<const double> past) const;
  /// encode + merge for an observation.
  std::vector<double> context(std::span<const double> params, const sim::Observation& obs,
                              std::span<const double> past) const;

  LogProbResult log_prob(std::span<const double> params, std::span<const double> context,
                         std::span<const double> future, bool want_gradient = false) const;
  /// S_t = mu_t + sigma_t * z_t, autoregressively.
  std::vector<double> sample(std::span<const double> params, std::span<const double> context,
                             std::span<const double> z) const;
  /// z_t = (S_t - mu_t) / sigma_t.
  std::vector<double> invert(std::span<const double> params, std::span<const double> context,
                             std::span<const double> future) const;
  /// Per-step (mu, sigma) along a given trajectory, each horizon x 2.
  void step_distributions(std::span<const double> params, std::span<const double> context,
                          std::span<const double> future, std::vector<double>& mu,
                          std::vector<double>& sigma) const;

  /// Mean NLL over the batch, summed in the order given.
  LossResult nll_loss(std::span<const double> params, std::span<const data::Sample* const> batch,
                      bool want_gradient = true) const;
  LossResult nll_loss(std::span<const double> params, const std::vector<data::Sample>& batch,
                      bool want_gradient = true) const;
  /// Sum of NLL over the batch without gradient.
  double nll_sum(std::span<const double> params, std::span<const data::Sample* const> batch) const;

  static std::vector<double> lambda_of(const sim::Observation& obs);
  std::vector<double> pool(std::span<const float> visual_features) const;

 private:
  Var build_context(Tape& t, std::span<const float> grid, std::span<const double> lambda,
                    std::span<const double> past) const;
  Var build_context_from_pooled(Tape& t, Var pooled, std::span<const double> lambda,
                                std::span<const double> past) const;
  Var encode_on(Tape& t, Var pooled) const;
  Var merge_on(Tape& t, Var encoded, Var lambda, Var past) const;
  /// One GRU step followed by the heads; returns (h', mu, sigma).
  void decode_step(Tape& t, Var ctx, Var prev, std::span<const double> prev_value, Var& h, Var& mu,
                   Var& sigma) const;
  Var log_q_on(Tape& t, Var ctx, std::span<const double> future, std::vector<double>* per_step) const;
  void check_params(std::span<const double> params) const;

  ModelConfig cfg_;
  Registry reg_;
  std::size_t enc1_w_, enc1_b_, enc2_w_, enc2_b_, merge_w_, merge_b_, gru_wih_, gru_bih_, gru_whh_, gru_bhh_, mu_w_,
      mu_b_, rho_w_, rho_b_;
};

}  // namespace rig::model
