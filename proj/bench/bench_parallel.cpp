// Serial reference vs OpenMP team for the two parallel kernels: one
// synchronous trainer epoch and a suite run. Range argument: worker count
// for the trainer, scenario count for the suite.

#include <benchmark/benchmark.h>

#include "rig/benchmark/benchmark.hpp"
#include "rig/trainer/trainer.hpp"

using namespace rig;

namespace {

const std::vector<data::Sample>& samples() {
  static const std::vector<data::Sample> s = [] {
    data::DatasetConfig dc;
    dc.towns = {1};
    dc.episodes = 12;
    return data::build_dataset(dc).train;
  }();
  return s;
}

void trainer_epoch(benchmark::State& state, bool parallel) {
  const model::DimModel m{model::ModelConfig{}};
  train::TrainerConfig c;
  c.num_workers = static_cast<int>(state.range(0));
  c.per_worker_batch = 16;
  c.epochs = 1;
  c.validate_every = 0;
  c.parallel = parallel;
  const auto& data = samples();  // built outside the timed loop
  for (auto _ : state) benchmark::DoNotOptimize(train::fit(m, c, data, {}).params.data());
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * data.size()));
}

void suite_run(benchmark::State& state, bool parallel) {
  auto suite = bench::default_suite();
  suite.resize(static_cast<std::size_t>(state.range(0)));
  for (auto& e : suite) e.spec.max_steps = 150;
  for (auto _ : state) {
    const auto r = bench::run_suite([] { return std::make_unique<bench::ExpertDriver>(); }, suite, parallel);
    benchmark::DoNotOptimize(r.data());
  }
}

}  // namespace

BENCHMARK_CAPTURE(trainer_epoch, serial, false)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK_CAPTURE(trainer_epoch, omp, true)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK_CAPTURE(suite_run, serial, false)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK_CAPTURE(suite_run, omp, true)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
