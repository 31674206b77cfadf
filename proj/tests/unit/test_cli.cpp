#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "rig/cli/run_config.hpp"
#include "rig/model/checkpoint.hpp"

using namespace rig;
using cli::ConfigError;
using cli::RunConfig;

namespace {

const std::filesystem::path kSource = RIG_SOURCE_DIR;

std::filesystem::path scratch(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("rig_cli_" + name);
  std::filesystem::remove_all(p);
  return p;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> problems_of(const std::string& ini) {
  try {
    (void)cli::parse_run_config(ini);
  } catch (const ConfigError& e) {
    return e.problems();
  }
  return {};
}

RunConfig smoke() { return cli::load_run_config(kSource / "configs/smoke.cfg"); }

}  // namespace

TEST_CASE("an empty config is the desk defaults and desk.cfg spells them out") {
  const RunConfig def = cli::parse_run_config("");
  const RunConfig desk = cli::load_run_config(kSource / "configs/desk.cfg");
  CHECK(desk.model == def.model);
  CHECK(desk.trainer.digest() == def.trainer.digest());
  CHECK(desk.trainer.epochs == def.trainer.epochs);
  CHECK(desk.dataset.towns == def.dataset.towns);
  CHECK(desk.dataset.episodes == def.dataset.episodes);
  CHECK(desk.dataset.seed == def.dataset.seed);
  CHECK(desk.dataset.collect.steer_noise == def.dataset.collect.steer_noise);
  CHECK(desk.sensor.grid_size == def.sensor.grid_size);
  CHECK(desk.sensor.meters_per_cell == def.sensor.meters_per_cell);
  CHECK(desk.agent.agent.num_candidates == def.agent.agent.num_candidates);
  CHECK(desk.agent.agent.goal_weight == def.agent.agent.goal_weight);
  CHECK(desk.agent.goal_time == def.agent.goal_time);
  CHECK(def.trainer.num_workers == 1);
  CHECK(def.trainer.per_worker_batch == 64);
  CHECK(def.trainer.lr_decay == 0.85);
}

TEST_CASE("shipped run configs mirror the three reference training runs") {
  struct Want {
    const char* file;
    int workers;
    int epochs;
    train::EpochMode mode;
    int total_passes;
  };
  for (const Want& w : {Want{"noray.cfg", 1, 200, train::EpochMode::split, 200},
                        Want{"ray200.cfg", 8, 25, train::EpochMode::per_worker, 200},
                        Want{"ray1600.cfg", 8, 200, train::EpochMode::per_worker, 1600}}) {
    CAPTURE(w.file);
    const RunConfig c = cli::load_run_config(kSource / "configs" / w.file);
    CHECK(c.trainer.num_workers == w.workers);
    CHECK(c.trainer.epochs == w.epochs);
    CHECK(c.trainer.epoch_mode == w.mode);
    const int passes = c.trainer.epoch_mode == train::EpochMode::per_worker ? c.trainer.epochs * c.trainer.num_workers
                                                                             : c.trainer.epochs;
    CHECK(passes == w.total_passes);
  }
  CHECK_NOTHROW(smoke());
  CHECK(smoke().trainer.epochs == 3);
}

TEST_CASE("config errors list every problem at once") {
  const auto p = problems_of(
      "[trainer]\nepochs = 0\nlr_decay = 2\nbogus = 1\n"
      "[model]\ngrid_size = 32\nhidden_dim = x\n"
      "[agent]\nlookahead = 20\n"
      "[benchmark]\ndriver = human\n"
      "[weather]\nrain = 1\n");
  auto has = [&](const std::string& needle) {
    for (const auto& s : p)
      if (s.find(needle) != std::string::npos) return true;
    return false;
  };
  CHECK(p.size() == 8);
  CHECK(has("trainer.bogus"));
  CHECK(has("trainer.epochs"));
  CHECK(has("trainer.lr_decay"));
  CHECK(has("model.hidden_dim"));
  CHECK(has("model.grid_size 32 must equal simworld.grid_size 16"));
  CHECK(has("agent.lookahead"));
  CHECK(has("benchmark.driver"));
  CHECK(has("[weather]"));
}

TEST_CASE("cross-field consistency") {
  CHECK_FALSE(problems_of("[dataset]\nhorizon = 12\n").empty());
  CHECK(problems_of("[dataset]\nhorizon = 12\n[model]\nhorizon = 12\n").empty());
  CHECK_FALSE(problems_of("[simworld]\ngrid_size = 24\n").empty());
  CHECK(problems_of("[simworld]\ngrid_size = 24\n[model]\ngrid_size = 24\n").empty());
  CHECK_FALSE(problems_of("[dataset]\nvalidation_every = 0\n").empty());
  CHECK(problems_of("[dataset]\nvalidation_every = 0\n[trainer]\nvalidate_every = 0\n").empty());
  CHECK_FALSE(problems_of("[dataset]\ntowns = 1, 4\n").empty());
  CHECK_FALSE(problems_of("[dataset]\nseed = -1\n").empty());
  CHECK_FALSE(problems_of("[trainer]\nepoch_mode = sometimes\n").empty());
  CHECK_FALSE(problems_of("[benchmark]\nparallel = maybe\n").empty());
}

TEST_CASE("parsed values round-trip through INI text") {
  std::mt19937_64 rng(11);
  auto pick = [&](int lo, int hi) { return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1)); };
  for (int trial = 0; trial < 50; ++trial) {
    const int horizon = pick(1, 20);
    const int grid = pick(8, 40);
    const int workers = pick(1, 16);
    const int lookahead = pick(1, horizon);
    const std::uint64_t seed = rng();
    const double lr = std::uniform_real_distribution<double>(1e-5, 1e-1)(rng);
    std::ostringstream ini;
    ini.precision(17);
    ini << "[simworld]\ngrid_size = " << grid << "\n[dataset]\nhorizon = " << horizon << "\nseed = " << seed
        << "\ntowns = " << pick(1, 3) << ", " << pick(1, 3) << "\n[model]\nhorizon = " << horizon << "\ngrid_size = " << grid
        << "\n[trainer]\nnum_workers = " << workers << "\nlearning_rate = " << lr
        << "\nepoch_mode = " << (trial % 2 ? "split" : "per_worker") << "\n[agent]\nlookahead = " << lookahead << "\n";
    const RunConfig c = cli::parse_run_config(ini.str());
    CHECK(c.sensor.grid_size == grid);
    CHECK(c.dataset.collect.sensor.grid_size == grid);
    CHECK(c.agent.sensor.grid_size == grid);
    CHECK(c.dataset.horizon == horizon);
    CHECK(c.dataset.seed == seed);
    CHECK(c.trainer.num_workers == workers);
    CHECK(c.trainer.learning_rate == lr);
    CHECK(c.agent.agent.lookahead == lookahead);
  }
}

TEST_CASE("seed override reaches every stage") {
  RunConfig c = smoke();
  c.override_seed(99);
  CHECK(c.dataset.seed == 99);
  CHECK(c.trainer.seed == 99);
  CHECK(c.agent.agent.seed == 99);
}

TEST_CASE("collect is byte-identical for a fixed seed") {
  const RunConfig c = smoke();
  const cli::Layout a{scratch("collect_a")}, b{scratch("collect_b")}, other{scratch("collect_c")};
  const auto sa = cli::cmd_collect(c, a);
  (void)cli::cmd_collect(c, b);
  CHECK(sa.train > 0);
  CHECK(sa.validation > 0);
  CHECK(slurp(a.train_set()) == slurp(b.train_set()));
  CHECK(slurp(a.validation_set()) == slurp(b.validation_set()));
  RunConfig reseeded = c;
  reseeded.override_seed(c.dataset.seed + 1);
  (void)cli::cmd_collect(reseeded, other);
  CHECK(slurp(a.train_set()) != slurp(other.train_set()));
  for (const auto& l : {a, b, other}) std::filesystem::remove_all(l.root);
}

TEST_CASE("smoke pipeline: train writes one metrics row per epoch and benchmark writes 27 rows") {
  const RunConfig c = smoke();
  const cli::Layout out{scratch("pipeline")};
  CHECK_THROWS_AS(cli::cmd_train(c, out), cli::InputError);
  (void)cli::cmd_collect(c, out);

  const train::MetricsLog log = cli::cmd_train(c, out);
  CHECK(log.rows.size() == 3);
  CHECK(train::MetricsLog::read_csv(out.metrics()).rows.size() == 3);
  int ckpts = 0;
  for (const auto& e : std::filesystem::directory_iterator(out.checkpoint_dir())) ckpts += e.path().extension() == ".ckpt";
  CHECK(ckpts == 3);
  const model::Checkpoint ck = model::read_checkpoint(out.model());
  CHECK(ck.model == c.model);
  CHECK(ck.epoch == 3);

  const auto results = cli::cmd_benchmark(c, out);
  CHECK(results.size() == 27);
  std::ifstream in(out.results());
  std::string header;
  std::getline(in, header);
  CHECK(header == bench::kResultsHeader);
  const auto back = bench::read_results_csv(out.results());
  REQUIRE(back.size() == results.size());
  for (std::size_t i = 0; i < results.size(); ++i) {
    CHECK(back[i].scenario == results[i].scenario);
    CHECK(back[i].steps == results[i].steps);
    CHECK(std::abs(back[i].distance - results[i].distance) <= 5e-4);  // written with 3 decimals
    CHECK(results[i].steps <= c.benchmark.max_steps);
  }

  // Replay: one ego row per step plus one per planned waypoint.
  const auto trace = out.traces() / "Roundabouts_0.csv";
  const auto rows = sim::read_trace_csv(trace);
  std::size_t expect = 0;
  for (const auto& r : rows) expect += 1 + r.plan.size();
  const auto plot = out.root / "plot.csv";
  CHECK(cli::cmd_replay(trace, plot) == expect);
  std::ifstream pin(plot);
  std::string line;
  std::size_t lines = 0;
  std::getline(pin, line);
  CHECK(line == "step,time,series,index,x,y");
  while (std::getline(pin, line)) ++lines;
  CHECK(lines == expect);
  CHECK_THROWS_AS(cli::cmd_replay(out.root / "missing.csv", plot), cli::InputError);
  std::filesystem::remove_all(out.root);
}

TEST_CASE("benchmark runs a scenario directory with the expert") {
  RunConfig c = smoke();
  c.benchmark.suite = (kSource / "scenarios").string();
  c.benchmark.driver = "expert";
  c.benchmark.traces = false;
  const cli::Layout out{scratch("expert")};
  const auto results = cli::cmd_benchmark(c, out);
  REQUIRE(results.size() == 1);
  CHECK(results[0].scenario == "abnormal_turns_0");
  CHECK(results[0].category == "abnormal_turns");
  CHECK(results[0].steps == c.benchmark.max_steps);
  CHECK_FALSE(std::filesystem::exists(out.traces()));
  c.benchmark.suite = (out.root / "nowhere").string();
  CHECK_THROWS_AS(cli::cmd_benchmark(c, out), cli::InputError);
  std::filesystem::remove_all(out.root);
}

TEST_CASE("agent benchmark needs a checkpoint of the configured grid") {
  const RunConfig c = smoke();
  const cli::Layout out{scratch("grid")};
  CHECK_THROWS_AS(cli::cmd_benchmark(c, out), cli::InputError);
  model::ModelConfig mc;
  mc.grid_size = 24;
  model::Checkpoint ck;
  ck.model = mc;
  ck.params = model::DimModel(mc).init_params(1);
  std::filesystem::create_directories(out.root);
  model::write_checkpoint(ck, out.model());
  CHECK_THROWS_AS(cli::cmd_benchmark(c, out), cli::InputError);
  std::filesystem::remove_all(out.root);
}
