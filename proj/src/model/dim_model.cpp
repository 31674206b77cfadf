#include "rig/model/dim_model.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace rig::model {

void ModelConfig::validate() const {
  std::string bad;
  auto need = [&](bool ok, const char* what) {
    if (!ok) bad += std::string(bad.empty() ? "" : "; ") + what;
  };
  need(tau >= 0, "tau must be >= 0");
  need(horizon >= 1, "horizon must be >= 1");
  need(grid_size >= 1, "grid_size must be >= 1");
  need(encoder_dim >= 1, "encoder_dim must be >= 1");
  need(merger_dim >= 1, "merger_dim must be >= 1");
  need(hidden_dim >= 1, "hidden_dim must be >= 1");
  need(sigma_min > 0.0 && std::isfinite(sigma_min), "sigma_min must be > 0");
  if (!bad.empty()) throw std::invalid_argument("invalid model config: " + bad);
}

Registry::Registry(const ModelConfig& cfg) {
  cfg.validate();
  const auto E = static_cast<std::size_t>(cfg.encoder_dim);
  const auto M = static_cast<std::size_t>(cfg.merger_dim);
  const auto H = static_cast<std::size_t>(cfg.hidden_dim);
  const std::size_t pooled = static_cast<std::size_t>(kPooled * kPooled * sim::kChannels);
  const std::size_t merge_in = E + kLambda + static_cast<std::size_t>(cfg.tau + 1) * kDims;
  add("encoder.0.weight", E, pooled);
  add("encoder.0.bias", E, 1);
  add("encoder.1.weight", E, E);
  add("encoder.1.bias", E, 1);
  add("merger.weight", M, merge_in);
  add("merger.bias", M, 1);
  add("decoder.gru.weight_ih", 3 * H, M + kDims);
  add("decoder.gru.bias_ih", 3 * H, 1);
  add("decoder.gru.weight_hh", 3 * H, H);
  add("decoder.gru.bias_hh", 3 * H, 1);
  add("decoder.mu.weight", kDims, H);
  add("decoder.mu.bias", kDims, 1);
  add("decoder.rho.weight", kDims, H);
  add("decoder.rho.bias", kDims, 1);
}

void Registry::add(std::string name, std::size_t rows, std::size_t cols) {
  blocks_.push_back({std::move(name), rows, cols, total_});
  total_ += rows * cols;
}

const ParamBlock& Registry::at(const std::string& name) const {
  for (const ParamBlock& b : blocks_)
    if (b.name == name) return b;
  throw std::out_of_range("no parameter block named " + name);
}

DimModel::DimModel(ModelConfig cfg) : cfg_(cfg), reg_(cfg) {
  enc1_w_ = reg_.at("encoder.0.weight").offset;
  enc1_b_ = reg_.at("encoder.0.bias").offset;
  enc2_w_ = reg_.at("encoder.1.weight").offset;
  enc2_b_ = reg_.at("encoder.1.bias").offset;
  merge_w_ = reg_.at("merger.weight").offset;
  merge_b_ = reg_.at("merger.bias").offset;
  gru_wih_ = reg_.at("decoder.gru.weight_ih").offset;
  gru_bih_ = reg_.at("decoder.gru.bias_ih").offset;
  gru_whh_ = reg_.at("decoder.gru.weight_hh").offset;
  gru_bhh_ = reg_.at("decoder.gru.bias_hh").offset;
  mu_w_ = reg_.at("decoder.mu.weight").offset;
  mu_b_ = reg_.at("decoder.mu.bias").offset;
  rho_w_ = reg_.at("decoder.rho.weight").offset;
  rho_b_ = reg_.at("decoder.rho.bias").offset;
}

std::vector<double> DimModel::init_params(std::uint64_t seed) const {
  std::vector<double> p(reg_.total(), 0.0);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.08, 0.08);
  for (const ParamBlock& b : reg_.blocks())
    if (!b.is_bias())
      for (std::size_t i = 0; i < b.size(); ++i) p[b.offset + i] = u(rng);
  return p;
}

void DimModel::check_params(std::span<const double> params) const {
  if (params.size() != reg_.total())
    throw std::invalid_argument("parameter vector has " + std::to_string(params.size()) + " entries, model needs " +
                                std::to_string(reg_.total()));
}

std::vector<double> DimModel::lambda_of(const sim::Observation& obs) {
  std::vector<double> l(kLambda, 0.0);
  l[0] = obs.velocity;
  l[1] = obs.is_at_traffic_light ? 1.0 : 0.0;
  l[2 + static_cast<int>(obs.traffic_light_state)] = 1.0;
  return l;
}

std::vector<double> DimModel::pool(std::span<const float> grid) const {
  const int C = cfg_.grid_size;
  const int ch = sim::kChannels;
  if (grid.size() != static_cast<std::size_t>(C) * C * ch)
    throw std::invalid_argument("visual features have " + std::to_string(grid.size()) + " values, expected " +
                                std::to_string(C) + "x" + std::to_string(C) + "x" + std::to_string(ch));
  std::vector<double> out(static_cast<std::size_t>(kPooled * kPooled * ch), 0.0);
  for (int pi = 0; pi < kPooled; ++pi) {
    const int r0 = pi * C / kPooled;
    const int r1 = ((pi + 1) * C + kPooled - 1) / kPooled;
    for (int pj = 0; pj < kPooled; ++pj) {
      const int c0 = pj * C / kPooled;
      const int c1 = ((pj + 1) * C + kPooled - 1) / kPooled;
      const double inv = 1.0 / static_cast<double>((r1 - r0) * (c1 - c0));
      for (int c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (int r = r0; r < r1; ++r)
          for (int q = c0; q < c1; ++q)
            acc += static_cast<double>(grid[(static_cast<std::size_t>(r) * static_cast<std::size_t>(C) +
                                             static_cast<std::size_t>(q)) *
                                                static_cast<std::size_t>(ch) +
                                            static_cast<std::size_t>(c)]);
        out[static_cast<std::size_t>((pi * kPooled + pj) * ch + c)] = acc * inv;
      }
    }
  }
  return out;
}

Var DimModel::encode_on(Tape& t, Var pooled) const {
  const auto E = static_cast<std::size_t>(cfg_.encoder_dim);
  const Var h1 = t.tanh(t.affine(pooled, enc1_w_, enc1_b_, E));
  return t.tanh(t.affine(h1, enc2_w_, enc2_b_, E));
}

Var DimModel::merge_on(Tape& t, Var encoded, Var lambda, Var past) const {
  const Var parts[] = {encoded, lambda, past};
  return t.tanh(t.affine(t.concat(parts), merge_w_, merge_b_, static_cast<std::size_t>(cfg_.merger_dim)));
}

Var DimModel::build_context_from_pooled(Tape& t, Var pooled, std::span<const double> lambda,
                                        std::span<const double> past) const {
  if (lambda.size() != kLambda) throw std::invalid_argument("lambda must have 6 entries");
  if (past.size() != static_cast<std::size_t>(cfg_.tau + 1) * kDims)
    throw std::invalid_argument("past must have (tau + 1) x 2 entries");
  return merge_on(t, encode_on(t, pooled), t.input(lambda), t.input(past));
}

Var DimModel::build_context(Tape& t, std::span<const float> grid, std::span<const double> lambda,
                            std::span<const double> past) const {
  const std::vector<double> pooled = pool(grid);
  return build_context_from_pooled(t, t.input(pooled), lambda, past);
}

std::vector<double> DimModel::encode(std::span<const double> params, std::span<const float> grid) const {
  check_params(params);
  Tape t;
  t.bind(params, {});
  const Var e = encode_on(t, t.input(pool(grid)));
  const auto v = t.value(e);
  return {v.begin(), v.end()};
}

std::vector<double> DimModel::merge(std::span<const double> params, std::span<const double> encoded,
                                    std::span<const double> lambda, std::span<const double> past) const {
  check_params(params);
  if (encoded.size() != static_cast<std::size_t>(cfg_.encoder_dim))
    throw std::invalid_argument("encoded vector must have E entries");
  if (lambda.size() != kLambda) throw std::invalid_argument("lambda must have 6 entries");
  if (past.size() != static_cast<std::size_t>(cfg_.tau + 1) * kDims)
    throw std::invalid_argument("past must have (tau + 1) x 2 entries");
  Tape t;
  t.bind(params, {});
  const Var m = merge_on(t, t.input(encoded), t.input(lambda), t.input(past));
  const auto v = t.value(m);
  return {v.begin(), v.end()};
}

std::vector<double> DimModel::context(std::span<const double> params, const sim::Observation& obs,
                                      std::span<const double> past) const {
  check_params(params);
  Tape t;
  t.bind(params, {});
  const Var c = build_context(t, obs.visual_features, lambda_of(obs), past);
  const auto v = t.value(c);
  return {v.begin(), v.end()};
}

void DimModel::decode_step(Tape& t, Var ctx, Var prev, std::span<const double> /*prev_value*/, Var& h, Var& mu,
                           Var& sigma) const {
  const auto H = static_cast<std::size_t>(cfg_.hidden_dim);
  const Var parts[] = {ctx, prev};
  const Var gi = t.affine(t.concat(parts), gru_wih_, gru_bih_, 3 * H);
  const Var gh = t.affine(h, gru_whh_, gru_bhh_, 3 * H);
  const Var r = t.sigmoid(t.add(t.slice(gi, 0, H), t.slice(gh, 0, H)));
  const Var z = t.sigmoid(t.add(t.slice(gi, H, H), t.slice(gh, H, H)));
  const Var n = t.tanh(t.add(t.slice(gi, 2 * H, H), t.mul(r, t.slice(gh, 2 * H, H))));
  h = t.add(t.mul(t.one_minus(z), n), t.mul(z, h));
  mu = t.add(prev, t.affine(h, mu_w_, mu_b_, kDims));
  sigma = t.add_const(t.softplus(t.affine(h, rho_w_, rho_b_, kDims)), cfg_.sigma_min);
}

Var DimModel::log_q_on(Tape& t, Var ctx, std::span<const double> future, std::vector<double>* per_step) const {
  const auto T = static_cast<std::size_t>(cfg_.horizon);
  if (future.size() != T * kDims) throw std::invalid_argument("future must have horizon x 2 entries");
  for (double v : future)
    if (!std::isfinite(v)) throw std::invalid_argument("future contains a non-finite value");
  const std::vector<double> zeros_h(static_cast<std::size_t>(cfg_.hidden_dim), 0.0);
  const double origin[kDims] = {0.0, 0.0};
  Var h = t.input(zeros_h);
  Var total{};
  for (std::size_t k = 0; k < T; ++k) {
    const std::span<const double> prev_v = k == 0 ? std::span<const double>(origin, kDims) : future.subspan((k - 1) * kDims, kDims);
    Var mu, sigma;
    decode_step(t, ctx, t.input(prev_v), prev_v, h, mu, sigma);
    const Var lp = t.gaussian_log_density(t.input(future.subspan(k * kDims, kDims)), mu, sigma);
    if (per_step) per_step->push_back(t.scalar_value(lp));
    total = k == 0 ? lp : t.add(total, lp);
  }
  return total;
}

LogProbResult DimModel::log_prob(std::span<const double> params, std::span<const double> context,
                                 std::span<const double> future, bool want_gradient) const {
  check_params(params);
  if (context.size() != static_cast<std::size_t>(cfg_.merger_dim))
    throw std::invalid_argument("context must have M entries");
  for (double v : context)
    if (!std::isfinite(v)) throw std::invalid_argument("context contains a non-finite value");
  LogProbResult out;
  if (want_gradient) out.gradient.assign(reg_.total(), 0.0);
  Tape t;
  t.bind(params, out.gradient);
  const Var root = log_q_on(t, t.input(context), future, &out.per_step);
  out.log_q = t.scalar_value(root);
  if (want_gradient) t.backward(root);
  return out;
}

void DimModel::step_distributions(std::span<const double> params, std::span<const double> context,
                                  std::span<const double> future, std::vector<double>& mu,
                                  std::vector<double>& sigma) const {
  check_params(params);
  const auto T = static_cast<std::size_t>(cfg_.horizon);
  if (context.size() != static_cast<std::size_t>(cfg_.merger_dim))
    throw std::invalid_argument("context must have M entries");
  if (future.size() != T * kDims) throw std::invalid_argument("future must have horizon x 2 entries");
  Tape t;
  t.bind(params, {});
  const Var ctx = t.input(context);
  const std::vector<double> zeros_h(static_cast<std::size_t>(cfg_.hidden_dim), 0.0);
  const double origin[kDims] = {0.0, 0.0};
  Var h = t.input(zeros_h);
  mu.assign(T * kDims, 0.0);
  sigma.assign(T * kDims, 0.0);
  for (std::size_t k = 0; k < T; ++k) {
    const std::span<const double> prev_v = k == 0 ? std::span<const double>(origin, kDims) : future.subspan((k - 1) * kDims, kDims);
    Var m, s;
    decode_step(t, ctx, t.input(prev_v), prev_v, h, m, s);
    for (int d = 0; d < kDims; ++d) {
      mu[k * kDims + static_cast<std::size_t>(d)] = t.value(m)[static_cast<std::size_t>(d)];
      sigma[k * kDims + static_cast<std::size_t>(d)] = t.value(s)[static_cast<std::size_t>(d)];
    }
  }
}

std::vector<double> DimModel::sample(std::span<const double> params, std::span<const double> context,
                                     std::span<const double> z) const {
  check_params(params);
  const auto T = static_cast<std::size_t>(cfg_.horizon);
  if (z.size() != T * kDims) throw std::invalid_argument("z must have horizon x 2 entries");
  if (context.size() != static_cast<std::size_t>(cfg_.merger_dim))
    throw std::invalid_argument("context must have M entries");
  Tape t;
  t.bind(params, {});
  const Var ctx = t.input(context);
  const std::vector<double> zeros_h(static_cast<std::size_t>(cfg_.hidden_dim), 0.0);
  Var h = t.input(zeros_h);
  std::vector<double> out(T * kDims, 0.0);
  double prev[kDims] = {0.0, 0.0};
  for (std::size_t k = 0; k < T; ++k) {
    Var m, s;
    decode_step(t, ctx, t.input(prev), prev, h, m, s);
    for (std::size_t d = 0; d < kDims; ++d) {
      const double v = t.value(m)[d] + t.value(s)[d] * z[k * kDims + d];
      out[k * kDims + d] = v;
      prev[d] = v;
    }
  }
  return out;
}

std::vector<double> DimModel::invert(std::span<const double> params, std::span<const double> context,
                                     std::span<const double> future) const {
  std::vector<double> mu, sigma;
  step_distributions(params, context, future, mu, sigma);
  std::vector<double> z(future.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = (future[i] - mu[i]) / sigma[i];
  return z;
}

LossResult DimModel::nll_loss(std::span<const double> params, std::span<const data::Sample* const> batch,
                              bool want_gradient) const {
  check_params(params);
  if (batch.empty()) throw std::invalid_argument("nll_loss needs a non-empty batch");
  LossResult out;
  if (want_gradient) out.gradient.assign(reg_.total(), 0.0);
  Tape t;
  t.bind(params, out.gradient);
  double sum = 0.0;
  for (const data::Sample* s : batch) {
    t.clear();
    const Var ctx = build_context(t, s->obs.visual_features, lambda_of(s->obs), s->past);
    const Var root = log_q_on(t, ctx, s->future, nullptr);
    sum += t.scalar_value(root);
    if (want_gradient) t.backward(root);
  }
  const double scale = -1.0 / static_cast<double>(batch.size());
  out.loss = sum * scale;
  for (double& g : out.gradient) g *= scale;
  return out;
}

LossResult DimModel::nll_loss(std::span<const double> params, const std::vector<data::Sample>& batch,
                              bool want_gradient) const {
  std::vector<const data::Sample*> ptrs;
  ptrs.reserve(batch.size());
  for (const data::Sample& s : batch) ptrs.push_back(&s);
  return nll_loss(params, ptrs, want_gradient);
}

double DimModel::nll_sum(std::span<const double> params, std::span<const data::Sample* const> batch) const {
  check_params(params);
  Tape t;
  t.bind(params, {});
  double sum = 0.0;
  for (const data::Sample* s : batch) {
    t.clear();
    const Var ctx = build_context(t, s->obs.visual_features, lambda_of(s->obs), s->past);
    sum -= t.scalar_value(log_q_on(t, ctx, s->future, nullptr));
  }
  return sum;
}

}  // namespace rig::model
