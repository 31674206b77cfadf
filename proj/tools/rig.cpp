// rig: collect -> train -> benchmark -> replay, driven by one INI config.
//
// Exit codes: 0 ok, 1 usage, 2 config, 3 input data, 4 run failure.

#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <cstdlib>
#include <optional>

#include "rig/benchmark/benchmark.hpp"
#include "rig/cli/run_config.hpp"
#include "rig/model/checkpoint.hpp"

namespace {

enum Exit { kOk = 0, kUsage = 1, kConfig = 2, kInput = 3, kRun = 4 };

bool set_log_level() {
  const char* env = std::getenv("RIG_LOG_LEVEL");
  const std::string level = env ? env : "info";
  if (level == "error")
    spdlog::set_level(spdlog::level::err);
  else if (level == "info")
    spdlog::set_level(spdlog::level::info);
  else if (level == "debug")
    spdlog::set_level(spdlog::level::debug);
  else
    return false;
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  if (!set_log_level()) {
    spdlog::error("RIG_LOG_LEVEL must be error, info or debug");
    return kUsage;
  }

  CLI::App app{"Driving imitation rig: expert data, flow model training and closed-loop benchmark"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "run";
  std::string checkpoint;
  std::optional<std::uint64_t> seed;
  std::string trace;

  auto with_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "INI run config")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory")->capture_default_str();
    sub->add_option("--seed", seed, "overrides every seed in the config");
  };
  CLI::App* collect = app.add_subcommand("collect", "record expert demonstrations into a dataset");
  with_config(collect);
  CLI::App* train = app.add_subcommand("train", "fit the model on the collected dataset");
  with_config(train);
  CLI::App* benchmark = app.add_subcommand("benchmark", "run the scenario suite and write results.csv");
  with_config(benchmark);
  benchmark->add_option("--checkpoint", checkpoint, "model checkpoint (default: <out>/model.ckpt)");
  CLI::App* replay = app.add_subcommand("replay", "turn an episode trace into plot data");
  replay->add_option("trace", trace, "trace CSV written by benchmark")->required();
  replay->add_option("--out", out_dir, "output CSV path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (replay->parsed()) {
      const std::size_t n = rig::cli::cmd_replay(trace, out_dir);
      spdlog::info("wrote {} plot rows to {}", n, out_dir);
      return kOk;
    }
    rig::cli::RunConfig cfg = rig::cli::load_run_config(config_path);
    if (seed) cfg.override_seed(*seed);
    const rig::cli::Layout layout{out_dir};
    if (collect->parsed()) rig::cli::cmd_collect(cfg, layout);
    if (train->parsed()) rig::cli::cmd_train(cfg, layout);
    if (benchmark->parsed())
      rig::cli::cmd_benchmark(cfg, layout,
                              checkpoint.empty() ? std::nullopt : std::optional<std::filesystem::path>(checkpoint));
    return kOk;
  } catch (const rig::cli::ConfigError& e) {
    spdlog::error("config error: {}", e.what());
    return kConfig;
  } catch (const rig::cli::InputError& e) {
    spdlog::error("input error: {}", e.what());
    return kInput;
  } catch (const rig::data::DatasetError& e) {
    spdlog::error("input error: {}", e.what());
    return kInput;
  } catch (const rig::model::CheckpointError& e) {
    spdlog::error("input error: {}", e.what());
    return kInput;
  } catch (const rig::bench::ScenarioError& e) {
    spdlog::error("input error: {}", e.what());
    return kInput;
  } catch (const std::exception& e) {
    spdlog::error("run error: {}", e.what());
    return kRun;
  }
}
