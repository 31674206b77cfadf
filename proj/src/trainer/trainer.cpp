#include "rig/trainer/trainer.hpp"

#include <omp.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <sstream>

#include "rig/util/seed.hpp"

namespace rig::train {

const char* to_string(EpochMode m) { return m == EpochMode::split ? "split" : "per_worker"; }
const char* to_string(OptimizerKind k) { return k == OptimizerKind::sgd ? "sgd" : "adam"; }

EpochMode epoch_mode_from_string(const std::string& s) {
  if (s == "split") return EpochMode::split;
  if (s == "per_worker") return EpochMode::per_worker;
  throw std::invalid_argument("epoch_mode must be split or per_worker, got '" + s + "'");
}

OptimizerKind optimizer_from_string(const std::string& s) {
  if (s == "sgd") return OptimizerKind::sgd;
  if (s == "adam") return OptimizerKind::adam;
  throw std::invalid_argument("optimizer must be sgd or adam, got '" + s + "'");
}

void TrainerConfig::validate() const {
  std::string bad;
  auto need = [&](bool ok, const char* what) {
    if (!ok) bad += std::string(bad.empty() ? "" : "; ") + what;
  };
  need(num_workers >= 1, "num_workers must be >= 1");
  need(per_worker_batch >= 1, "per_worker_batch must be >= 1");
  need(epochs >= 1, "epochs must be >= 1");
  need(learning_rate > 0.0 && std::isfinite(learning_rate), "learning_rate must be > 0");
  need(lr_decay > 0.0 && lr_decay <= 1.0, "lr_decay must be in (0, 1]");
  need(beta1 >= 0.0 && beta1 < 1.0, "beta1 must be in [0, 1)");
  need(beta2 >= 0.0 && beta2 < 1.0, "beta2 must be in [0, 1)");
  need(adam_eps > 0.0, "adam_eps must be > 0");
  need(checkpoint_every >= 0, "checkpoint_every must be >= 0");
  need(validate_every >= 0, "validate_every must be >= 0");
  if (!bad.empty()) throw std::invalid_argument("invalid trainer config: " + bad);
}

std::string TrainerConfig::digest() const {
  char buf[256];
  std::snprintf(buf, sizeof buf, "workers=%d batch=%d mode=%s optimizer=%s lr=%.17g decay=%.17g beta1=%.17g beta2=%.17g eps=%.17g seed=%llu",
                num_workers, per_worker_batch, to_string(epoch_mode), to_string(optimizer), learning_rate, lr_decay, beta1, beta2,
                adam_eps, static_cast<unsigned long long>(seed));
  return buf;
}

std::vector<double> all_reduce_mean(std::span<const std::vector<double>> grads) {
  if (grads.empty()) throw std::invalid_argument("all_reduce_mean needs at least one vector");
  const std::size_t n = grads[0].size();
  for (std::size_t r = 1; r < grads.size(); ++r)
    if (grads[r].size() != n)
      throw std::invalid_argument("all_reduce_mean: rank " + std::to_string(r) + " sent " +
                                  std::to_string(grads[r].size()) + " values, rank 0 sent " + std::to_string(n));
  std::vector<double> out(grads[0]);
  for (std::size_t r = 1; r < grads.size(); ++r)
    for (std::size_t i = 0; i < n; ++i) out[i] += grads[r][i];
  const double inv = 1.0 / static_cast<double>(grads.size());
  for (double& v : out) v *= inv;
  return out;
}

Optimizer::Optimizer(const TrainerConfig& cfg, std::size_t num_params)
    : kind_(cfg.optimizer), lr_(cfg.learning_rate), beta1_(cfg.beta1), beta2_(cfg.beta2), eps_(cfg.adam_eps) {
  state_.kind = to_string(kind_);
  if (kind_ == OptimizerKind::adam) {
    state_.m.assign(num_params, 0.0);
    state_.v.assign(num_params, 0.0);
  }
}

void Optimizer::step(std::span<double> params, std::span<const double> grad) {
  if (grad.size() != params.size()) throw std::invalid_argument("optimizer: gradient length differs from params");
  ++state_.step;
  if (kind_ == OptimizerKind::sgd) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr_ * grad[i];
    return;
  }
  if (state_.m.size() != params.size()) throw std::invalid_argument("optimizer: state sized for another model");
  const double t = static_cast<double>(state_.step);
  const double c1 = 1.0 - std::pow(beta1_, t);
  const double c2 = 1.0 - std::pow(beta2_, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i];
    state_.m[i] = beta1_ * state_.m[i] + (1.0 - beta1_) * g;
    state_.v[i] = beta2_ * state_.v[i] + (1.0 - beta2_) * g * g;
    params[i] -= lr_ * (state_.m[i] / c1) / (std::sqrt(state_.v[i] / c2) + eps_);
  }
}

void Optimizer::load(const model::OptimizerState& s) {
  if (s.kind != state_.kind)
    throw std::invalid_argument("optimizer state is for " + s.kind + ", trainer uses " + state_.kind);
  if (s.m.size() != state_.m.size() || s.v.size() != state_.v.size())
    throw std::invalid_argument("optimizer state sized for another model");
  state_ = s;
}

std::vector<WorkerState> make_workers(const TrainerConfig& cfg, const std::vector<double>& params) {
  std::vector<WorkerState> w;
  w.reserve(static_cast<std::size_t>(cfg.num_workers));
  for (int r = 0; r < cfg.num_workers; ++r) w.push_back(WorkerState{r, params, Optimizer(cfg, params.size()), 0});
  return w;
}

namespace {

struct LocalResult {
  double loss = 0.0;
  std::vector<double> grad;
};

LocalResult local_gradient(const model::DimModel& model, const WorkerState& w,
                           std::span<const data::Sample* const> batch) {
  model::LossResult r = model.nll_loss(w.params, batch, true);
  return {r.loss, std::move(r.gradient)};
}

void apply_update(WorkerState& w, std::span<const double> reduced) {
  w.optimizer.step(w.params, reduced);
  ++w.steps;
}

bool replicas_equal(const std::vector<WorkerState>& workers) {
  for (std::size_t r = 1; r < workers.size(); ++r)
    if (workers[r].params != workers[0].params) return false;
  return true;
}

}  // namespace

std::vector<double> train_step(const model::DimModel& model, std::vector<WorkerState>& workers,
                               const std::vector<std::vector<const data::Sample*>>& batches) {
  if (batches.size() != workers.size()) throw std::invalid_argument("train_step needs one batch per worker");
  std::vector<std::vector<double>> grads(workers.size());
  std::vector<double> losses(workers.size());
  for (std::size_t r = 0; r < workers.size(); ++r) {
    try {
      LocalResult lr = local_gradient(model, workers[r], batches[r]);
      losses[r] = lr.loss;
      grads[r] = std::move(lr.grad);
    } catch (const std::exception& e) {
      throw WorkerFailure(static_cast<int>(r), e.what());
    }
  }
  const std::vector<double> reduced = all_reduce_mean(grads);
  for (WorkerState& w : workers) apply_update(w, reduced);
  return losses;
}

std::vector<std::vector<std::size_t>> epoch_orders(const TrainerConfig& cfg, std::size_t n, int epoch) {
  std::vector<std::vector<std::size_t>> orders(static_cast<std::size_t>(cfg.num_workers));
  if (cfg.epoch_mode == EpochMode::split) {
    const std::vector<std::size_t> perm = data::epoch_permutation(n, epoch, cfg.seed);
    for (int r = 0; r < cfg.num_workers; ++r)
      orders[static_cast<std::size_t>(r)] = data::shard_of(perm, cfg.num_workers, r);
  } else {
    for (int r = 0; r < cfg.num_workers; ++r)
      orders[static_cast<std::size_t>(r)] =
          data::epoch_permutation(n, epoch, util::mix_seed(cfg.seed, static_cast<std::uint64_t>(r)));
  }
  return orders;
}

double validate(const model::DimModel& model, std::span<const double> params,
                const std::vector<data::Sample>& samples, std::size_t batch) {
  if (samples.empty()) throw std::invalid_argument("validation set is empty");
  if (batch == 0) throw std::invalid_argument("validation batch must be >= 1");
  double total = 0.0;
  std::vector<const data::Sample*> ptrs;
  for (std::size_t start = 0; start < samples.size(); start += batch) {
    const std::size_t end = std::min(samples.size(), start + batch);
    ptrs.clear();
    for (std::size_t i = start; i < end; ++i) ptrs.push_back(&samples[i]);
    total += model.nll_sum(params, ptrs);
  }
  return total / static_cast<double>(samples.size());
}

bool save_checkpoint(int rank, const model::Checkpoint& ckpt, const std::filesystem::path& path) {
  if (rank != 0) return false;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  model::write_checkpoint(ckpt, path);
  return true;
}

std::filesystem::path checkpoint_path(const TrainerConfig& cfg, int epoch) {
  char name[64];
  std::snprintf(name, sizeof name, "epoch_%04d.ckpt", epoch);
  return cfg.checkpoint_dir / name;
}

void MetricsLog::write_csv(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write metrics to " + path.string());
  out << "epoch,train_nll,val_nll,wall_seconds,steps\n";
  char buf[64];
  for (const EpochMetrics& m : rows) {
    out << m.epoch << ',';
    std::snprintf(buf, sizeof buf, "%.17g", m.train_nll);
    out << buf << ',';
    if (m.val_nll) {
      std::snprintf(buf, sizeof buf, "%.17g", *m.val_nll);
      out << buf;
    }
    std::snprintf(buf, sizeof buf, "%.6f", m.wall_seconds);
    out << ',' << buf << ',';
    for (std::size_t r = 0; r < m.steps.size(); ++r) out << (r ? ";" : "") << m.steps[r];
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

MetricsLog MetricsLog::read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open metrics " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "epoch,train_nll,val_nll,wall_seconds,steps")
    throw std::runtime_error("unexpected metrics header in " + path.string());
  MetricsLog log;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() == 4) f.emplace_back();
    if (f.size() != 5) throw std::runtime_error("malformed metrics row: " + line);
    EpochMetrics m;
    m.epoch = std::stoi(f[0]);
    m.train_nll = std::stod(f[1]);
    if (!f[2].empty()) m.val_nll = std::stod(f[2]);
    m.wall_seconds = std::stod(f[3]);
    std::stringstream ss(f[4]);
    while (std::getline(ss, cell, ';'))
      if (!cell.empty()) m.steps.push_back(std::stoull(cell));
    log.rows.push_back(m);
  }
  return log;
}

namespace {

struct EpochRun {
  double loss_weighted = 0.0;
  std::size_t samples = 0;
  bool replicas_identical = true;
};

// Bookkeeping shared by both execution modes, run once per step by rank 0.
void after_step(const std::vector<double>& losses, const std::vector<std::size_t>& sizes, std::uint64_t global_step,
                const FitOptions& opt, EpochRun& run) {
  for (std::size_t r = 0; r < losses.size(); ++r) {
    run.loss_weighted += losses[r] * static_cast<double>(sizes[r]);
    run.samples += sizes[r];
  }
  if (opt.on_step) opt.on_step(global_step, losses);
}

void fill_batch(const std::vector<data::Sample>& train, const std::vector<std::size_t>& order, std::size_t k,
                std::size_t b, std::vector<const data::Sample*>& batch) {
  batch.clear();
  const std::size_t end = std::min(order.size(), (k + 1) * b);
  for (std::size_t i = k * b; i < end; ++i) batch.push_back(&train[order[i]]);
}

EpochRun run_epoch_serial(const model::DimModel& model, const TrainerConfig& cfg, std::vector<WorkerState>& workers,
                          const std::vector<data::Sample>& train, const std::vector<std::vector<std::size_t>>& orders,
                          std::size_t steps, std::uint64_t& global_step, const FitOptions& opt) {
  EpochRun run;
  const auto W = workers.size();
  const auto b = static_cast<std::size_t>(cfg.per_worker_batch);
  std::vector<std::vector<const data::Sample*>> batches(W);
  std::vector<std::size_t> sizes(W);
  for (std::size_t k = 0; k < steps; ++k) {
    for (std::size_t r = 0; r < W; ++r) {
      fill_batch(train, orders[r], k, b, batches[r]);
      sizes[r] = batches[r].size();
      if (opt.before_step) {
        try {
          opt.before_step(static_cast<int>(r), global_step);
        } catch (const std::exception& e) {
          throw WorkerFailure(static_cast<int>(r), e.what());
        }
      }
    }
    const std::vector<double> losses = train_step(model, workers, batches);
    ++global_step;
    if (cfg.check_replicas && !replicas_equal(workers)) run.replicas_identical = false;
    after_step(losses, sizes, global_step, opt, run);
  }
  return run;
}

EpochRun run_epoch_parallel(const model::DimModel& model, const TrainerConfig& cfg, std::vector<WorkerState>& workers,
                            const std::vector<data::Sample>& train,
                            const std::vector<std::vector<std::size_t>>& orders, std::size_t steps,
                            std::uint64_t& global_step, const FitOptions& opt) {
  EpochRun run;
  const int W = cfg.num_workers;
  const auto b = static_cast<std::size_t>(cfg.per_worker_batch);
  std::vector<std::vector<double>> grads(static_cast<std::size_t>(W));
  std::vector<double> losses(static_cast<std::size_t>(W));
  std::vector<std::size_t> sizes(static_cast<std::size_t>(W));
  std::vector<std::string> errors(static_cast<std::size_t>(W));
  // Lowest failing rank, W meaning none. Gradient-phase failures and
  // update-phase failures are kept apart so every flag is only read between
  // the barriers that bracket its writes, and all threads leave together.
  std::atomic<int> failed{W};
  std::atomic<int> late_failed{W};
  int team = 0;
  const std::uint64_t step0 = global_step;

  auto fail = [&](std::atomic<int>& flag, int rank, const std::string& what) {
    int cur = flag.load();
    while (rank < cur && !flag.compare_exchange_weak(cur, rank)) {
    }
#pragma omp critical(rig_trainer_errors)
    if (errors[static_cast<std::size_t>(rank)].empty()) errors[static_cast<std::size_t>(rank)] = what;
  };

#pragma omp parallel num_threads(W)
  {
    const int r = omp_get_thread_num();
    const auto ru = static_cast<std::size_t>(r);
#pragma omp single
    team = omp_get_num_threads();
    std::vector<const data::Sample*> batch;
    for (std::size_t k = 0; team == W && k < steps; ++k) {
      try {
        fill_batch(train, orders[ru], k, b, batch);
        sizes[ru] = batch.size();
        if (opt.before_step) opt.before_step(r, step0 + k);
        LocalResult lr = local_gradient(model, workers[ru], batch);
        losses[ru] = lr.loss;
        grads[ru] = std::move(lr.grad);
      } catch (const std::exception& e) {
        fail(failed, r, e.what());
      }
#pragma omp barrier
      if (failed.load() < W) break;
      // Every replica reduces the same vectors in the same order, so the
      // updates agree bit for bit without a broadcast.
      try {
        apply_update(workers[ru], all_reduce_mean(grads));
      } catch (const std::exception& e) {
        fail(late_failed, r, e.what());
      }
#pragma omp barrier
#pragma omp master
      {
        try {
          if (cfg.check_replicas && !replicas_equal(workers)) run.replicas_identical = false;
          after_step(losses, sizes, step0 + k + 1, opt, run);
        } catch (const std::exception& e) {
          fail(late_failed, 0, e.what());
        }
      }
#pragma omp barrier
      if (late_failed.load() < W) break;
    }
  }
  if (team != W)
    throw std::runtime_error("could not start " + std::to_string(W) + " worker threads (got " + std::to_string(team) +
                             ")");
  if (const int f = std::min(failed.load(), late_failed.load()); f < W)
    throw WorkerFailure(f, errors[static_cast<std::size_t>(f)]);
  global_step = step0 + steps;
  return run;
}

}  // namespace

FitResult fit(const model::DimModel& model, const TrainerConfig& cfg, const std::vector<data::Sample>& train,
              const std::vector<data::Sample>& validation, const FitOptions& opt) {
  cfg.validate();
  if (train.empty()) throw std::invalid_argument("training set is empty");
  if (cfg.validate_every > 0 && validation.empty())
    throw std::invalid_argument("validation set is empty (set validate_every = 0 to skip validation)");

  std::vector<double> init = opt.initial_params ? *opt.initial_params : model.init_params(cfg.seed);
  if (init.size() != model.num_params()) throw std::invalid_argument("initial params do not match the model");
  std::vector<WorkerState> workers = make_workers(cfg, init);

  FitResult out;
  int first_epoch = 1;
  if (opt.resume_from) {
    const model::Checkpoint ck = model::read_checkpoint(*opt.resume_from);
    if (!(ck.model == model.config())) throw std::invalid_argument("checkpoint was written for another model config");
    if (ck.config_digest != cfg.digest())
      throw std::invalid_argument("checkpoint trainer config differs: '" + ck.config_digest + "' vs '" +
                                  cfg.digest() + "'");
    for (WorkerState& w : workers) {
      w.params = ck.params;
      w.optimizer.load(ck.optimizer);
    }
    first_epoch = ck.epoch + 1;
    out.global_step = ck.global_step;
  }

  if (cfg.parallel) omp_set_dynamic(0);
  const auto b = static_cast<std::size_t>(cfg.per_worker_batch);
  for (int epoch = first_epoch; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto orders = epoch_orders(cfg, train.size(), epoch);
    const double lr = cfg.learning_rate * std::pow(cfg.lr_decay, epoch - 1);
    for (WorkerState& w : workers) w.optimizer.set_learning_rate(lr);
    const std::size_t steps = data::num_batches(orders[0].size(), b);
    std::vector<std::size_t> before(workers.size());
    for (std::size_t r = 0; r < workers.size(); ++r) before[r] = workers[r].steps;

    const EpochRun run = cfg.parallel
                             ? run_epoch_parallel(model, cfg, workers, train, orders, steps, out.global_step, opt)
                             : run_epoch_serial(model, cfg, workers, train, orders, steps, out.global_step, opt);
    out.replicas_identical = out.replicas_identical && run.replicas_identical;

    EpochMetrics m;
    m.epoch = epoch;
    m.train_nll = run.loss_weighted / static_cast<double>(run.samples);
    if (cfg.validate_every > 0 && epoch % cfg.validate_every == 0)
      m.val_nll = validate(model, workers[0].params, validation, 5 * b);
    for (std::size_t r = 0; r < workers.size(); ++r) m.steps.push_back(workers[r].steps - before[r]);

    if (cfg.checkpoint_every > 0 && epoch % cfg.checkpoint_every == 0) {
      const std::filesystem::path path = checkpoint_path(cfg, epoch);
      for (const WorkerState& w : workers) {
        model::Checkpoint ck{model.config(), w.params, w.optimizer.state(), epoch, out.global_step, cfg.digest()};
        if (save_checkpoint(w.rank, ck, path)) ++out.checkpoints_written;
      }
    }
    m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.log.rows.push_back(m);
    if (opt.on_epoch) opt.on_epoch(m);
  }
  if (!replicas_equal(workers)) out.replicas_identical = false;
  out.params = workers[0].params;
  out.optimizer = workers[0].optimizer.state();
  return out;
}

}  // namespace rig::train
