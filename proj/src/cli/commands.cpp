#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "rig/cli/run_config.hpp"
#include "rig/model/checkpoint.hpp"

namespace rig::cli {

namespace {

void require_file(const std::filesystem::path& p, const char* what) {
  if (!std::filesystem::is_regular_file(p))
    throw InputError(std::string(what) + " not found: " + p.string());
}

void check_shape(const data::DatasetHeader& h, const RunConfig& cfg, const std::filesystem::path& p) {
  if (h.tau != cfg.model.tau || h.horizon != cfg.model.horizon || h.grid_size != cfg.model.grid_size)
    throw InputError(p.string() + " holds tau " + std::to_string(h.tau) + ", horizon " + std::to_string(h.horizon) +
                     ", grid " + std::to_string(h.grid_size) + " but the config expects " +
                     std::to_string(cfg.model.tau) + ", " + std::to_string(cfg.model.horizon) + ", " +
                     std::to_string(cfg.model.grid_size));
}

}  // namespace

CollectSummary cmd_collect(const RunConfig& cfg, const Layout& out) {
  cfg.validate();
  data::DatasetConfig dc = cfg.dataset;
  dc.collect.sensor = cfg.sensor;
  spdlog::info("collecting {} episodes over {} town(s), seed {}", dc.episodes, dc.towns.size(), dc.seed);
  const data::SplitDataset ds = data::build_dataset(dc);
  std::filesystem::create_directories(out.train_set().parent_path());
  data::write_dataset(ds.train, out.train_set(), dc.seed);
  data::write_dataset(ds.validation, out.validation_set(), dc.seed);
  spdlog::info("wrote {} train and {} validation samples to {}", ds.train.size(), ds.validation.size(),
               out.train_set().parent_path().string());
  return {ds.train.size(), ds.validation.size()};
}

train::MetricsLog cmd_train(const RunConfig& cfg, const Layout& out) {
  cfg.validate();
  require_file(out.train_set(), "training set");
  data::DatasetHeader h;
  const auto train_set = data::read_dataset(out.train_set(), &h);
  check_shape(h, cfg, out.train_set());
  std::vector<data::Sample> val_set;
  if (cfg.trainer.validate_every > 0) {
    require_file(out.validation_set(), "validation set");
    val_set = data::read_dataset(out.validation_set(), &h);
    check_shape(h, cfg, out.validation_set());
  }

  const model::DimModel model(cfg.model);
  train::TrainerConfig tc = cfg.trainer;
  tc.checkpoint_dir = out.checkpoint_dir();
  spdlog::info("training {} parameters on {} samples: {}", model.num_params(), train_set.size(), tc.digest());

  train::FitOptions opt;
  opt.on_epoch = [](const train::EpochMetrics& m) {
    if (m.val_nll)
      spdlog::info("epoch {:3d}  train {:9.4f}  val {:9.4f}  {:.1f}s", m.epoch, m.train_nll, *m.val_nll, m.wall_seconds);
    else
      spdlog::info("epoch {:3d}  train {:9.4f}  {:.1f}s", m.epoch, m.train_nll, m.wall_seconds);
  };
  const train::FitResult fr = train::fit(model, tc, train_set, val_set, opt);

  model::Checkpoint ck;
  ck.model = cfg.model;
  ck.params = fr.params;
  ck.optimizer = fr.optimizer;
  ck.epoch = tc.epochs;
  ck.global_step = fr.global_step;
  ck.config_digest = tc.digest();
  model::write_checkpoint(ck, out.model());
  fr.log.write_csv(out.metrics());
  spdlog::info("wrote {} and {}", out.model().string(), out.metrics().string());
  return fr.log;
}

std::vector<bench::SuiteEntry> load_suite_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw InputError("suite directory not found: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw InputError("no scenario files in " + dir.string());
  std::vector<bench::SuiteEntry> suite;
  for (const auto& f : files) {
    // abnormal_turns_0.json -> category abnormal_turns
    const std::string id = f.stem().string();
    const auto cut = id.find_last_of('_');
    const bool numbered = cut != std::string::npos && cut + 1 < id.size() &&
                          std::all_of(id.begin() + static_cast<long>(cut) + 1, id.end(), ::isdigit);
    suite.push_back({id, numbered ? id.substr(0, cut) : id, bench::load_scenario(f)});
  }
  return suite;
}

std::vector<bench::EpisodeResult> cmd_benchmark(const RunConfig& cfg, const Layout& out,
                                                const std::optional<std::filesystem::path>& checkpoint) {
  cfg.validate();
  std::vector<bench::SuiteEntry> suite =
      cfg.benchmark.suite == "default" ? bench::default_suite() : load_suite_dir(cfg.benchmark.suite);
  if (cfg.benchmark.max_steps > 0)
    for (auto& e : suite) e.spec.max_steps = cfg.benchmark.max_steps;

  std::optional<model::DimModel> model;
  std::vector<double> params;
  bench::DriverFactory make;
  if (cfg.benchmark.driver == "expert") {
    make = [] { return std::make_unique<bench::ExpertDriver>(); };
  } else {
    const std::filesystem::path ck_path = checkpoint.value_or(out.model());
    require_file(ck_path, "checkpoint");
    model::Checkpoint ck = model::read_checkpoint(ck_path);
    if (ck.model.grid_size != cfg.sensor.grid_size)
      throw InputError("checkpoint grid " + std::to_string(ck.model.grid_size) +
                       " does not match simworld.grid_size " + std::to_string(cfg.sensor.grid_size));
    model.emplace(ck.model);
    params = std::move(ck.params);
    bench::AgentDriverConfig ac = cfg.agent;
    ac.sensor = cfg.sensor;
    ac.agent.validate(ck.model.horizon);
    make = [&model, &params, ac] { return std::make_unique<bench::AgentDriver>(*model, params, ac); };
  }

  spdlog::info("running {} scenarios with the {} driver", suite.size(), cfg.benchmark.driver);
  const auto results =
      bench::run_suite(make, suite, cfg.benchmark.parallel, cfg.benchmark.traces ? out.traces() : std::filesystem::path{});
  bench::write_results_csv(results, out.results());
  int clean = 0;
  for (const auto& r : results) {
    const bool pass = r.reached_goal && r.collisions == 0 && r.lane_invasions == 0;
    clean += pass;
    spdlog::debug("{:18s} {} collisions {} invasions {} distance {:.1f} steps {}", r.scenario, pass ? "pass" : "fail",
                  r.collisions, r.lane_invasions, r.distance, r.steps);
  }
  spdlog::info("{}/{} scenarios reached the goal cleanly; results in {}", clean, results.size(), out.results().string());
  return results;
}

std::size_t cmd_replay(const std::filesystem::path& trace, const std::filesystem::path& out_csv) {
  require_file(trace, "trace");
  const auto rows = sim::read_trace_csv(trace);
  if (out_csv.has_parent_path()) std::filesystem::create_directories(out_csv.parent_path());
  std::ofstream out(out_csv, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + out_csv.string());
  out << "step,time,series,index,x,y\n";
  std::size_t n = 0;
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%.2f,ego,0,%.4f,%.4f\n", r.step, r.time, r.ego.position.x, r.ego.position.y);
    out << buf;
    ++n;
    for (std::size_t i = 0; i < r.plan.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%d,%.2f,plan,%zu,%.4f,%.4f\n", r.step, r.time, i + 1, r.plan[i].x, r.plan[i].y);
      out << buf;
      ++n;
    }
  }
  if (!out) throw std::runtime_error("write failed for " + out_csv.string());
  return n;
}

}  // namespace rig::cli
