#include <doctest.h>

#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "rig/model/dim_model.hpp"

using namespace rig;
using model::DimModel;
using model::ModelConfig;
using model::Tape;
using model::Var;

namespace {

ModelConfig tiny_config() {
  ModelConfig c;
  c.tau = 1;
  c.horizon = 3;
  c.grid_size = 8;
  c.encoder_dim = 4;
  c.merger_dim = 4;
  c.hidden_dim = 3;
  return c;
}

std::vector<double> uniform_vec(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

data::Sample random_sample(std::mt19937_64& rng, const ModelConfig& c) {
  data::Sample s;
  s.tau = c.tau;
  s.horizon = c.horizon;
  s.past = uniform_vec(rng, static_cast<std::size_t>(c.tau + 1) * 2, -3.0, 3.0);
  s.past[s.past.size() - 2] = 0.0;
  s.past[s.past.size() - 1] = 0.0;
  s.future = uniform_vec(rng, static_cast<std::size_t>(c.horizon) * 2, -2.0, 4.0);
  s.obs.grid_size = c.grid_size;
  s.obs.visual_features.resize(static_cast<std::size_t>(c.grid_size * c.grid_size * sim::kChannels));
  std::bernoulli_distribution occ(0.3);
  for (float& f : s.obs.visual_features) f = occ(rng) ? 1.0f : 0.0f;
  s.obs.velocity = std::uniform_real_distribution<double>(0.0, 8.0)(rng);
  s.obs.is_at_traffic_light = occ(rng);
  s.obs.traffic_light_state = static_cast<sim::LightState>(rng() % 4);
  return s;
}

// Context with small weights so sigma stays well away from sigma_min.
std::vector<double> random_params(const DimModel& m, std::uint64_t seed, double scale = 0.5) {
  std::mt19937_64 rng(seed);
  return uniform_vec(rng, m.num_params(), -scale, scale);
}

double inverse_softplus(double y) { return y + std::log(-std::expm1(-y)); }

}  // namespace

TEST_CASE("tape gradients match central differences for every op") {
  std::mt19937_64 rng(3);
  const std::vector<double> params = uniform_vec(rng, 3 * 4 + 3, -1.0, 1.0);
  const std::vector<double> x0 = uniform_vec(rng, 4, -1.0, 1.0);
  const std::vector<double> y0 = uniform_vec(rng, 3, 0.5, 1.5);

  auto eval = [&](std::span<const double> p, std::span<const double> x, std::vector<double>* gp,
                  std::vector<double>* gx) {
    Tape t;
    std::vector<double> pg(gp ? p.size() : 0, 0.0);
    t.bind(p, pg);
    const Var xv = t.input(x);
    const Var a = t.affine(xv, 0, 12, 3);
    const Var y = t.input(y0);
    const Var b = t.mul(t.sigmoid(a), t.tanh(t.sub(a, y)));
    const Var c = t.add_const(t.softplus(t.one_minus(b)), 0.01);
    const Var parts[] = {b, t.slice(xv, 1, 2)};
    const Var cat = t.concat(parts);
    const Var mu = t.slice(cat, 0, 3);
    const Var root = t.add(t.gaussian_log_density(y, mu, c), t.sum(t.add(cat, cat)));
    if (gp) {
      t.backward(root);
      *gp = pg;
      const auto g = t.grad(xv);
      gx->assign(g.begin(), g.end());
    }
    return t.scalar_value(root);
  };

  std::vector<double> gp, gx;
  eval(params, x0, &gp, &gx);
  const double h = 1e-6;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params;
    p[i] += h;
    const double up = eval(p, x0, nullptr, nullptr);
    p[i] -= 2 * h;
    const double dn = eval(p, x0, nullptr, nullptr);
    CHECK(gp[i] == doctest::Approx((up - dn) / (2 * h)).epsilon(1e-6));
  }
  for (std::size_t i = 0; i < x0.size(); ++i) {
    auto x = x0;
    x[i] += h;
    const double up = eval(params, x, nullptr, nullptr);
    x[i] -= 2 * h;
    const double dn = eval(params, x, nullptr, nullptr);
    CHECK(gx[i] == doctest::Approx((up - dn) / (2 * h)).epsilon(1e-6));
  }
}

TEST_CASE("tape rejects mismatched shapes and non-scalar roots") {
  Tape t;
  const std::vector<double> a{1, 2}, b{1, 2, 3};
  const Var va = t.input(a), vb = t.input(b);
  CHECK_THROWS_AS(t.add(va, vb), std::invalid_argument);
  CHECK_THROWS_AS(t.slice(va, 1, 2), std::out_of_range);
  CHECK_THROWS_AS(t.backward(va), std::invalid_argument);
  CHECK_THROWS_AS(t.affine(va, 0, 0, 1), std::out_of_range);
}

TEST_CASE("registry lays blocks out contiguously in a fixed order") {
  const ModelConfig c;  // E = M = H = 32, tau 4
  const model::Registry reg(c);
  const auto blocks = reg.blocks();
  REQUIRE(blocks.size() == 14);
  CHECK(blocks[0].name == "encoder.0.weight");
  CHECK(blocks[0].cols == 128);
  CHECK(reg.at("merger.weight").cols == 32 + 6 + 10);
  CHECK(reg.at("decoder.gru.weight_ih").rows == 96);
  CHECK(reg.at("decoder.gru.weight_ih").cols == 34);
  std::size_t off = 0;
  for (const auto& b : blocks) {
    CHECK(b.offset == off);
    off += b.size();
  }
  CHECK(off == reg.total());
  // Independent count of every weight and bias.
  const std::size_t expect = (32 * 128 + 32) + (32 * 32 + 32) + (32 * 48 + 32) + (96 * 34 + 96) + (96 * 32 + 96) +
                             (2 * 32 + 2) * 2;
  CHECK(reg.total() == expect);
  CHECK_THROWS_AS(reg.at("nope"), std::out_of_range);
}

TEST_CASE("config validation names every bad field") {
  ModelConfig c;
  c.horizon = 0;
  c.hidden_dim = -1;
  c.sigma_min = 0.0;
  try {
    c.validate();
    FAIL("expected invalid_argument");
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("horizon") != std::string::npos);
    CHECK(msg.find("hidden_dim") != std::string::npos);
    CHECK(msg.find("sigma_min") != std::string::npos);
  }
  CHECK_THROWS_AS(DimModel{c}, std::invalid_argument);
}

TEST_CASE("init is seeded, bounded and zero on biases") {
  const DimModel m(ModelConfig{});
  const auto a = m.init_params(11), b = m.init_params(11), c = m.init_params(12);
  CHECK(a == b);
  CHECK(a != c);
  for (const auto& blk : m.registry().blocks())
    for (std::size_t i = 0; i < blk.size(); ++i) {
      const double v = a[blk.offset + i];
      if (blk.is_bias())
        CHECK(v == 0.0);
      else
        CHECK(std::abs(v) <= 0.08);
    }
}

TEST_CASE("pooling averages 4 x 4 blocks of a 32-cell grid") {
  ModelConfig cfg;
  cfg.grid_size = 32;
  const DimModel m(cfg);
  std::vector<float> grid(32 * 32 * 2);
  for (int r = 0; r < 32; ++r)
    for (int c = 0; c < 32; ++c) {
      grid[static_cast<std::size_t>((r * 32 + c) * 2)] = static_cast<float>(r);
      grid[static_cast<std::size_t>((r * 32 + c) * 2 + 1)] = static_cast<float>(c % 2);
    }
  const auto p = m.pool(grid);
  REQUIRE(p.size() == 128);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) {
      CHECK(p[static_cast<std::size_t>((i * 8 + j) * 2)] == doctest::Approx(4 * i + 1.5));
      CHECK(p[static_cast<std::size_t>((i * 8 + j) * 2 + 1)] == doctest::Approx(0.5));
    }
  CHECK_THROWS_AS(m.pool(std::vector<float>(10)), std::invalid_argument);
}

TEST_CASE("log density agrees with an independent torch implementation") {
  std::ifstream in(RIG_TEST_DATA_DIR "/dim_oracle_t2.txt");
  REQUIRE(in.good());
  ModelConfig c;
  std::map<std::string, std::vector<double>> rows;
  double expect = 0.0;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "config") {
      ls >> c.tau >> c.horizon >> c.grid_size >> c.encoder_dim >> c.merger_dim >> c.hidden_dim >> c.sigma_min;
    } else if (key == "log_q") {
      ls >> expect;
    } else {
      std::size_t n = 0;
      ls >> n;
      std::vector<double> v(n);
      for (double& x : v) ls >> x;
      rows[key] = v;
    }
  }
  const DimModel m(c);
  REQUIRE(rows["params"].size() == m.num_params());
  sim::Observation obs;
  obs.grid_size = c.grid_size;
  for (double g : rows["grid"]) obs.visual_features.push_back(static_cast<float>(g));
  const auto& lam = rows["lambda"];
  obs.velocity = lam[0];
  obs.is_at_traffic_light = lam[1] != 0.0;
  obs.traffic_light_state = sim::LightState::red;  // one-hot index 3
  CHECK(DimModel::lambda_of(obs) == lam);
  const auto ctx = m.context(rows["params"], obs, rows["past"]);
  const auto r = m.log_prob(rows["params"], ctx, rows["future"]);
  CHECK(std::abs(r.log_q - expect) < 1e-9);
  CHECK(r.per_step.size() == 2);
  CHECK(std::abs(r.per_step[0] + r.per_step[1] - r.log_q) < 1e-12);
}

TEST_CASE("zero-mean unit-sigma steps give -T ln(2 pi)") {
  for (int T : {1, 4, 10}) {
    ModelConfig c = tiny_config();
    c.horizon = T;
    const DimModel m(c);
    std::vector<double> p(m.num_params(), 0.0);
    const auto& rho_b = m.registry().at("decoder.rho.bias");
    for (std::size_t d = 0; d < 2; ++d) p[rho_b.offset + d] = inverse_softplus(1.0 - c.sigma_min);
    const std::vector<double> ctx(static_cast<std::size_t>(c.merger_dim), 0.3);
    const std::vector<double> future(static_cast<std::size_t>(T) * 2, 0.0);
    const double lq = m.log_prob(p, ctx, future).log_q;
    CHECK(lq == doctest::Approx(-T * std::log(2.0 * std::numbers::pi)).epsilon(1e-12));
  }
}

TEST_CASE("scaling every sigma by c lowers log q by 2 T ln c") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    ModelConfig c = tiny_config();
    c.horizon = 1 + static_cast<int>(rng() % 8);
    const DimModel m(c);
    const double s1 = std::uniform_real_distribution<double>(0.1, 2.0)(rng);
    const double scale = std::uniform_real_distribution<double>(0.2, 5.0)(rng);
    auto with_sigma = [&](double s) {
      std::vector<double> p(m.num_params(), 0.0);
      const auto& rho_b = m.registry().at("decoder.rho.bias");
      for (std::size_t d = 0; d < 2; ++d) p[rho_b.offset + d] = inverse_softplus(s - c.sigma_min);
      return p;
    };
    const std::vector<double> ctx = uniform_vec(rng, static_cast<std::size_t>(c.merger_dim), -1, 1);
    // With zero weights mu_t = S_{t-1}, so a standing-still trajectory sits on the mean.
    const std::vector<double> future(static_cast<std::size_t>(c.horizon) * 2, 0.0);
    const double a = m.log_prob(with_sigma(s1), ctx, future).log_q;
    const double b = m.log_prob(with_sigma(s1 * scale), ctx, future).log_q;
    CHECK(a - b == doctest::Approx(2.0 * c.horizon * std::log(scale)).epsilon(1e-9));
  }
}

TEST_CASE("sampling inverts the flow and the density follows change of variables") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 1000; ++trial) {
    ModelConfig c = tiny_config();
    c.horizon = 1 + static_cast<int>(rng() % 10);
    const DimModel m(c);
    const auto p = random_params(m, rng());
    const auto ctx = uniform_vec(rng, static_cast<std::size_t>(c.merger_dim), -1, 1);
    std::vector<double> z(static_cast<std::size_t>(c.horizon) * 2);
    for (double& v : z) v = n01(rng);
    const auto S = m.sample(p, ctx, z);
    const auto back = m.invert(p, ctx, S);
    double err = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) err = std::max(err, std::abs(back[i] - z[i]));
    CHECK(err < 1e-9);

    // And the other way round, starting from an arbitrary trajectory.
    const auto S2 = uniform_vec(rng, z.size(), -5, 5);
    const auto again = m.sample(p, ctx, m.invert(p, ctx, S2));
    err = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) err = std::max(err, std::abs(again[i] - S2[i]));
    CHECK(err < 1e-9);
    if (trial >= 100) continue;

    std::vector<double> mu, sigma;
    m.step_distributions(p, ctx, S, mu, sigma);
    double expect = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i)
      expect += -0.5 * std::log(2.0 * std::numbers::pi) - 0.5 * back[i] * back[i] - std::log(sigma[i]);
    CHECK(std::abs(m.log_prob(p, ctx, S).log_q - expect) < 1e-9);
  }
}

TEST_CASE("z = 0 yields the mean trajectory") {
  const ModelConfig c = tiny_config();
  const DimModel m(c);
  std::mt19937_64 rng(6);
  const auto p = random_params(m, 1);
  const auto ctx = uniform_vec(rng, 4, -1, 1);
  const auto S = m.sample(p, ctx, std::vector<double>(6, 0.0));
  std::vector<double> mu, sigma;
  m.step_distributions(p, ctx, S, mu, sigma);
  CHECK(S == mu);
}

TEST_CASE("encoder and merger reduce to their biases on zero input") {
  const ModelConfig c = tiny_config();
  const DimModel m(c);
  const auto p = random_params(m, 2);
  const auto& reg = m.registry();
  const std::vector<float> zero_grid(8 * 8 * 2, 0.0f);
  const auto e = m.encode(p, zero_grid);
  REQUIRE(e.size() == 4);
  CHECK(e == m.encode(p, zero_grid));
  const std::size_t w2 = reg.at("encoder.1.weight").offset, b1 = reg.at("encoder.0.bias").offset,
                    b2 = reg.at("encoder.1.bias").offset;
  for (std::size_t i = 0; i < 4; ++i) {
    double acc = p[b2 + i];
    for (std::size_t j = 0; j < 4; ++j) acc += p[w2 + i * 4 + j] * std::tanh(p[b1 + j]);
    CHECK(e[i] == doctest::Approx(std::tanh(acc)).epsilon(1e-14));
  }
  const auto mg = m.merge(p, std::vector<double>(4, 0.0), std::vector<double>(6, 0.0), std::vector<double>(4, 0.0));
  REQUIRE(mg.size() == 4);
  for (std::size_t i = 0; i < 4; ++i)
    CHECK(mg[i] == doctest::Approx(std::tanh(p[reg.at("merger.bias").offset + i])).epsilon(1e-14));
  std::vector<double> lam(6, 0.0);
  lam[0] = 3.0;
  CHECK(m.merge(p, e, lam, std::vector<double>(4, 0.0)) != m.merge(p, e, std::vector<double>(6, 0.0), std::vector<double>(4, 0.0)));
  CHECK_THROWS_AS(m.merge(p, e, std::vector<double>(5, 0.0), std::vector<double>(4, 0.0)), std::invalid_argument);
  CHECK_THROWS_AS(m.encode(p, std::vector<float>(7)), std::invalid_argument);
}

TEST_CASE("one-step density integrates to one") {
  ModelConfig c = tiny_config();
  c.horizon = 1;
  const DimModel m(c);
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 3; ++trial) {
    const auto p = random_params(m, rng());
    const auto ctx = uniform_vec(rng, static_cast<std::size_t>(c.merger_dim), -1, 1);
    std::vector<double> mu, sigma;
    m.step_distributions(p, ctx, std::vector<double>{0.0, 0.0}, mu, sigma);
    const int n = 400;
    const double hx = 20.0 * sigma[0] / n, hy = 20.0 * sigma[1] / n;
    double mass = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const std::vector<double> s{mu[0] - 10 * sigma[0] + (i + 0.5) * hx, mu[1] - 10 * sigma[1] + (j + 0.5) * hy};
        mass += std::exp(m.log_prob(p, ctx, s).log_q) * hx * hy;
      }
    CHECK(std::abs(mass - 1.0) < 1e-3);
  }
}

TEST_CASE("loss gradient matches central differences") {
  const ModelConfig c = tiny_config();
  const DimModel m(c);
  std::mt19937_64 rng(13);
  const auto p = random_params(m, 99);
  const std::vector<data::Sample> batch{random_sample(rng, c), random_sample(rng, c)};
  const auto r = m.nll_loss(p, batch, true);
  REQUIRE(r.gradient.size() == p.size());
  const double h = 1e-5;
  double worst = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    auto q = p;
    q[i] += h;
    const double up = m.nll_loss(q, batch, false).loss;
    q[i] -= 2 * h;
    const double dn = m.nll_loss(q, batch, false).loss;
    const double fd = (up - dn) / (2 * h);
    const double g = r.gradient[i];
    const double err = std::abs(g) < 1e-8 ? std::abs(fd - g) : std::abs(fd - g) / std::abs(g);
    worst = std::max(worst, err);
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("loss is the mean negative log density of each sample") {
  const ModelConfig c = tiny_config();
  const DimModel m(c);
  std::mt19937_64 rng(17);
  const auto p = random_params(m, 4);
  std::vector<data::Sample> batch;
  for (int i = 0; i < 5; ++i) batch.push_back(random_sample(rng, c));
  double acc = 0.0;
  for (const auto& s : batch) acc -= m.log_prob(p, m.context(p, s.obs, s.past), s.future).log_q;
  const auto r = m.nll_loss(p, batch, false);
  CHECK(r.loss == doctest::Approx(acc / 5).epsilon(1e-12));
  CHECK(r.gradient.empty());
  std::vector<const data::Sample*> ptrs;
  for (const auto& s : batch) ptrs.push_back(&s);
  CHECK(m.nll_sum(p, ptrs) == doctest::Approx(acc).epsilon(1e-12));

  const std::vector<data::Sample> one{batch[2]};
  CHECK(m.nll_loss(p, one, false).loss ==
        -m.log_prob(p, m.context(p, batch[2].obs, batch[2].past), batch[2].future).log_q);
  std::vector<const data::Sample*> rev(ptrs.rbegin(), ptrs.rend());
  CHECK(m.nll_loss(p, rev, false).loss == doctest::Approx(r.loss).epsilon(1e-14));
}

TEST_CASE("model inputs are checked") {
  const ModelConfig c = tiny_config();
  const DimModel m(c);
  const auto p = m.init_params(1);
  const std::vector<double> ctx(4, 0.0), fut(6, 0.0);
  CHECK_THROWS_AS(m.log_prob(std::vector<double>(3), ctx, fut), std::invalid_argument);
  CHECK_THROWS_AS(m.log_prob(p, ctx, std::vector<double>(5)), std::invalid_argument);
  CHECK_THROWS_AS(m.log_prob(p, std::vector<double>(3), fut), std::invalid_argument);
  CHECK_THROWS_AS(m.log_prob(p, ctx, std::vector<double>{0, 0, NAN, 0, 0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(m.sample(p, ctx, std::vector<double>(2)), std::invalid_argument);
  CHECK_THROWS_AS(m.nll_loss(p, std::vector<data::Sample>{}, true), std::invalid_argument);
}
