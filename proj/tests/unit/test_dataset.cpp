#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <set>

#include "rig/dataset/dataset.hpp"
#include "rig/simworld/events.hpp"
#include "rig/simworld/town.hpp"

using namespace rig;
using namespace rig::data;
namespace fs = std::filesystem;

namespace {

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

CollectConfig small_collect() {
  CollectConfig c;
  c.max_steps = 150;
  c.num_vehicles = 15;
  c.sensor.grid_size = 16;
  c.sensor.meters_per_cell = 2.0;
  return c;
}

fs::path temp_file(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "rig_dataset_tests";
  fs::create_directories(dir);
  return dir / name;
}

// Straight drive along `heading` at `speed` starting from `origin`.
EpisodeTrace straight_trace(int steps, Vec2 origin, double heading, double speed) {
  EpisodeTrace tr;
  for (int k = 0; k < steps; ++k) {
    sim::WorldState w;
    w.time = 0.1 * k;
    w.ego.position = origin + heading_vector(heading) * (speed * 0.1 * k);
    w.ego.heading = heading;
    w.ego.speed = speed;
    tr.states.push_back(w);
    sim::Observation o;
    o.grid_size = 2;
    o.visual_features.assign(8, 0.0F);
    tr.observations.push_back(o);
  }
  return tr;
}

Sample random_sample(std::mt19937_64& rng, int tau, int horizon, int grid) {
  std::normal_distribution<double> g(0.0, 5.0);
  std::bernoulli_distribution coin(0.3);
  Sample s;
  s.tau = tau;
  s.horizon = horizon;
  for (int i = 0; i < (tau + 1) * 2; ++i) s.past.push_back(i >= tau * 2 ? 0.0 : g(rng));
  for (int i = 0; i < horizon * 2; ++i) s.future.push_back(g(rng));
  s.obs.grid_size = grid;
  for (int i = 0; i < grid * grid * 2; ++i) s.obs.visual_features.push_back(coin(rng) ? 1.0F : 0.0F);
  s.obs.velocity = std::abs(g(rng));
  s.obs.is_at_traffic_light = coin(rng);
  s.obs.traffic_light_state = static_cast<sim::LightState>(rng() % 4);
  quantize(s);
  return s;
}

bool same_sample(const Sample& a, const Sample& b) {
  if (a.tau != b.tau || a.horizon != b.horizon || a.past.size() != b.past.size() ||
      a.future.size() != b.future.size() || a.obs.visual_features != b.obs.visual_features ||
      a.obs.is_at_traffic_light != b.obs.is_at_traffic_light ||
      a.obs.traffic_light_state != b.obs.traffic_light_state || !same_bits(a.obs.velocity, b.obs.velocity))
    return false;
  for (std::size_t i = 0; i < a.past.size(); ++i)
    if (!same_bits(a.past[i], b.past[i])) return false;
  for (std::size_t i = 0; i < a.future.size(); ++i)
    if (!same_bits(a.future[i], b.future[i])) return false;
  return true;
}

}  // namespace

TEST_CASE("collection is deterministic and yields the requested episode count") {
  const auto a = collect(1, 3, 7, small_collect());
  const auto b = collect(1, 3, 7, small_collect());
  REQUIRE(a.size() == 3);
  REQUIRE(b.size() == 3);
  for (std::size_t e = 0; e < a.size(); ++e) {
    REQUIRE(a[e].states.size() == b[e].states.size());
    CHECK(a[e].origin != a[e].destination);
    CHECK(a[e].states.size() == a[e].actions.size() + 1);
    CHECK(a[e].observations.size() == a[e].actions.size());
    for (std::size_t i = 0; i < a[e].states.size(); ++i) {
      CHECK(same_bits(a[e].states[i].ego.position.x, b[e].states[i].ego.position.x));
      CHECK(same_bits(a[e].states[i].ego.position.y, b[e].states[i].ego.position.y));
    }
    for (std::size_t i = 0; i < a[e].actions.size(); ++i) {
      CHECK(a[e].actions[i] == b[e].actions[i]);
      CHECK(a[e].observations[i].visual_features == b[e].observations[i].visual_features);
    }
  }
  CHECK_THROWS_AS((void)collect(1, 0, 7), std::invalid_argument);
  CHECK_THROWS_AS((void)collect(9, 1, 7), std::invalid_argument);
}

TEST_CASE("collected expert traces replay without collisions") {
  for (int town : {1, 2, 3}) {
    const auto traces = collect(town, 2, 21, small_collect());
    for (const EpisodeTrace& tr : traces) {
      sim::EventSet ev;
      for (std::size_t i = 0; i + 1 < tr.states.size(); ++i) ev += sim::detect_events(tr.states[i], tr.states[i + 1]);
      CHECK(ev.collisions == 0);
      CHECK(ev.lane_invasions == 0);
    }
  }
}

TEST_CASE("straight constant-speed trace gives evenly spaced future waypoints") {
  const int tau = 3, horizon = 10;
  const double heading = 0.9;
  const EpisodeTrace tr = straight_trace(40, {12.0, -7.0}, heading, 5.0);
  const auto samples = process(tr, tau, horizon, 4);
  REQUIRE_FALSE(samples.empty());
  for (const Sample& s : samples) {
    REQUIRE(s.future.size() == static_cast<std::size_t>(horizon) * 2);
    for (int t = 1; t <= horizon; ++t) {
      CHECK(s.future[static_cast<std::size_t>(2 * (t - 1))] == doctest::Approx(0.5 * t).epsilon(1e-12));
      CHECK(std::abs(s.future[static_cast<std::size_t>(2 * (t - 1) + 1)]) < 1e-12);
    }
    CHECK(s.past[static_cast<std::size_t>(2 * tau)] == 0.0);
    CHECK(s.past[static_cast<std::size_t>(2 * tau + 1)] == 0.0);
    CHECK(s.past[0] == doctest::Approx(-0.5 * tau).epsilon(1e-12));
  }
}

TEST_CASE("window counting at the boundary") {
  const int tau = 4, horizon = 10;
  CHECK(process(straight_trace(tau + horizon, {}, 0.0, 3.0), tau, horizon, 1).empty());
  CHECK(process(straight_trace(tau + horizon + 1, {}, 0.0, 3.0), tau, horizon, 1).size() == 1);
  CHECK(process(straight_trace(tau + horizon + 11, {}, 0.0, 3.0), tau, horizon, 5).size() == 3);
  CHECK_THROWS_AS((void)process(straight_trace(30, {}, 0.0, 3.0), -1, horizon, 1), std::invalid_argument);
  CHECK_THROWS_AS((void)process(straight_trace(30, {}, 0.0, 3.0), tau, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS((void)process(straight_trace(30, {}, 0.0, 3.0), tau, horizon, 0), std::invalid_argument);
}

TEST_CASE("processed samples match an independent frame transform and ignore rigid motion") {
  const auto traces = collect(3, 2, 5, small_collect());
  const int tau = 4, horizon = 10, stride = 3;
  const auto samples = process(traces, tau, horizon, stride);
  REQUIRE_FALSE(samples.empty());

  // Oracle: translate by -s0, rotate by -heading(s0), written out longhand.
  std::size_t k = 0;
  for (const EpisodeTrace& tr : traces) {
    const int n = static_cast<int>(tr.states.size());
    for (int a = tau; a + horizon < n; a += stride, ++k) {
      const auto& ego = tr.states[static_cast<std::size_t>(a)].ego;
      const double c = std::cos(-ego.heading), s = std::sin(-ego.heading);
      for (int t = 1; t <= horizon; ++t) {
        const Vec2 p = tr.states[static_cast<std::size_t>(a + t)].ego.position;
        const double dx = p.x - ego.position.x, dy = p.y - ego.position.y;
        CHECK(samples[k].future[static_cast<std::size_t>(2 * (t - 1))] == doctest::Approx(c * dx - s * dy).epsilon(1e-12));
        CHECK(samples[k].future[static_cast<std::size_t>(2 * (t - 1) + 1)] ==
              doctest::Approx(s * dx + c * dy).epsilon(1e-12));
      }
      CHECK(samples[k].past[static_cast<std::size_t>(2 * tau)] == 0.0);
      CHECK(samples[k].past[static_cast<std::size_t>(2 * tau + 1)] == 0.0);
    }
  }
  CHECK(k == samples.size());

  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const RigidTransform tf{u(rng) * std::numbers::pi, {u(rng) * 500.0, u(rng) * 500.0}};
    std::vector<EpisodeTrace> moved = traces;
    for (EpisodeTrace& tr : moved)
      for (sim::WorldState& w : tr.states) {
        w.ego.position = tf.apply(w.ego.position);
        w.ego.heading = tf.apply_heading(w.ego.heading);
      }
    const auto again = process(moved, tau, horizon, stride);
    REQUIRE(again.size() == samples.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      for (std::size_t j = 0; j < samples[i].past.size(); ++j)
        worst = std::max(worst, std::abs(samples[i].past[j] - again[i].past[j]));
      for (std::size_t j = 0; j < samples[i].future.size(); ++j)
        worst = std::max(worst, std::abs(samples[i].future[j] - again[i].future[j]));
    }
    CHECK(worst < 1e-9);
  }
}

TEST_CASE("batch counts use ceiling division") {
  CHECK(num_batches(200001, 512) == 391);
  CHECK(num_batches(40001, 2560) == 16);
  CHECK(num_batches(512, 512) == 1);
  CHECK(num_batches(0, 7) == 0);
  CHECK_THROWS_AS((void)num_batches(10, 0), std::invalid_argument);
}

TEST_CASE("shard examples") {
  const auto r0 = shard_indices(8, 2, 0, 0, 1).indices;
  const auto r1 = shard_indices(8, 2, 1, 0, 1).indices;
  CHECK(r0.size() == 4);
  CHECK(r1.size() == 4);
  std::set<std::size_t> all(r0.begin(), r0.end());
  all.insert(r1.begin(), r1.end());
  CHECK(all.size() == 8);

  const std::vector<std::size_t> identity{0, 1, 2, 3, 4, 5, 6};
  CHECK(shard_of(identity, 2, 0) == std::vector<std::size_t>{0, 2, 4, 6});
  CHECK(shard_of(identity, 2, 1) == std::vector<std::size_t>{1, 3, 5, 0});

  CHECK(shard_indices(50, 1, 0, 3, 9).indices == epoch_permutation(50, 3, 9));
  CHECK_THROWS_AS((void)shard_indices(8, 2, 2, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS((void)shard_indices(0, 2, 0, 0, 1), std::invalid_argument);
}

TEST_CASE("shards cover the data with exactly the padding duplicates") {
  std::mt19937_64 gen(4242);
  std::vector<std::pair<std::size_t, int>> cases{{1, 1}, {1, 16}, {2, 16}, {15, 16}, {16, 16}, {17, 16}, {10000, 16},
                                                 {10000, 7}, {9999, 1}};
  std::uniform_int_distribution<std::size_t> pick_n(1, 10000);
  std::uniform_int_distribution<int> pick_w(1, 16);
  for (int i = 0; i < 150; ++i) cases.emplace_back(pick_n(gen), pick_w(gen));
  for (const auto& [n, w] : cases) {
    for (int epoch = 0; epoch <= 5; epoch += (n > 2000 ? 5 : 1)) {
      const std::uint64_t seed = gen();
      const std::size_t per = num_batches(n, static_cast<std::size_t>(w));
      std::map<std::size_t, int> counts;
      std::size_t total = 0;
      for (int r = 0; r < w; ++r) {
        const ShardPlan plan = shard_indices(n, w, r, epoch, seed);
        REQUIRE(plan.indices.size() == per);
        for (std::size_t idx : plan.indices) {
          REQUIRE(idx < n);
          ++counts[idx];
        }
        total += plan.indices.size();
      }
      REQUIRE(counts.size() == n);
      std::size_t dups = 0;
      for (const auto& [idx, c] : counts) dups += static_cast<std::size_t>(c - 1);
      CHECK(dups == per * static_cast<std::size_t>(w) - n);
      CHECK(total == per * static_cast<std::size_t>(w));
      // Before padding the ranks are disjoint: the first n dealt positions are a permutation.
      const auto perm = epoch_permutation(n, epoch, seed);
      CHECK(std::set<std::size_t>(perm.begin(), perm.end()).size() == n);
    }
  }
}

TEST_CASE("each epoch gets a fresh order") {
  int differ = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed)
    differ += epoch_permutation(100, 2, seed) != epoch_permutation(100, 3, seed);
  CHECK(differ >= 99);
  CHECK(epoch_permutation(100, 2, 5) == epoch_permutation(100, 2, 5));
}

TEST_CASE("dataset files round trip bitwise") {
  std::mt19937_64 rng(1);
  std::vector<Sample> samples;
  for (int i = 0; i < 100; ++i) samples.push_back(random_sample(rng, 4, 10, 8));
  const fs::path p = temp_file("roundtrip.rds");
  write_dataset(samples, p, 77);
  DatasetHeader h;
  const auto back = read_dataset(p, &h);
  CHECK(h.count == 100);
  CHECK(h.seed == 77);
  CHECK(h.grid_size == 8);
  REQUIRE(back.size() == samples.size());
  for (std::size_t i = 0; i < back.size(); ++i) CHECK(same_sample(samples[i], back[i]));
}

TEST_CASE("an empty dataset is valid") {
  const fs::path p = temp_file("empty.rds");
  write_dataset({}, p);
  DatasetHeader h;
  CHECK(read_dataset(p, &h).empty());
  CHECK(h.count == 0);
}

TEST_CASE("damaged dataset files raise distinct errors") {
  std::mt19937_64 rng(2);
  std::vector<Sample> samples;
  for (int i = 0; i < 5; ++i) samples.push_back(random_sample(rng, 2, 3, 4));
  const fs::path good = temp_file("good.rds");
  write_dataset(samples, good);
  std::string bytes;
  {
    std::ifstream in(good, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  auto kind_of = [](const fs::path& p) {
    try {
      (void)read_dataset(p);
    } catch (const DatasetError& e) {
      return e.kind();
    }
    FAIL("expected a dataset error");
    return DatasetError::Kind::io;
  };
  auto write = [](const fs::path& p, const std::string& b) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(b.data(), static_cast<std::streamsize>(b.size()));
  };

  const fs::path cut = temp_file("cut.rds");
  write(cut, bytes.substr(0, bytes.size() - 10));
  CHECK(kind_of(cut) == DatasetError::Kind::truncated);

  const fs::path flipped = temp_file("flipped.rds");
  std::string f = bytes;
  f[f.size() - 7] = static_cast<char>(f[f.size() - 7] ^ 0x10);
  write(flipped, f);
  CHECK(kind_of(flipped) == DatasetError::Kind::checksum);

  const fs::path versioned = temp_file("versioned.rds");
  std::string v = bytes;
  v.replace(v.find("version 1"), 9, "version 9");
  write(versioned, v);
  CHECK(kind_of(versioned) == DatasetError::Kind::version);

  const fs::path junk = temp_file("junk.rds");
  write(junk, "hello\n");
  CHECK(kind_of(junk) == DatasetError::Kind::malformed);

  CHECK(kind_of(temp_file("missing.rds")) == DatasetError::Kind::io);
}

TEST_CASE("build_dataset splits whole episodes between training and validation") {
  DatasetConfig cfg;
  cfg.episodes = 6;
  cfg.validation_every = 3;
  cfg.collect = small_collect();
  const SplitDataset a = build_dataset(cfg);
  const SplitDataset b = build_dataset(cfg);
  CHECK_FALSE(a.train.empty());
  CHECK_FALSE(a.validation.empty());
  REQUIRE(a.train.size() == b.train.size());
  for (std::size_t i = 0; i < a.train.size(); ++i) CHECK(same_sample(a.train[i], b.train[i]));
}
