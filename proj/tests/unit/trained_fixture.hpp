#pragma once

#include <vector>

#include "rig/dataset/dataset.hpp"
#include "rig/model/dim_model.hpp"
#include "rig/trainer/trainer.hpp"

namespace rig::testing {

struct TrainedModel {
  model::DimModel model{model::ModelConfig{}};
  std::vector<double> params;
};

/// Default-architecture model fitted on 40 noisy expert episodes in town 1.
/// Trained once per test binary (about 6 s).
inline const TrainedModel& town1_trained_model() {
  static const TrainedModel tm = [] {
    TrainedModel t;
    data::DatasetConfig dc;
    dc.towns = {1};
    dc.episodes = 40;
    const data::SplitDataset ds = data::build_dataset(dc);
    train::TrainerConfig tc;
    tc.epochs = 8;
    tc.per_worker_batch = 64;
    tc.lr_decay = 0.85;
    t.params = train::fit(t.model, tc, ds.train, ds.validation, {}).params;
    return t;
  }();
  return tm;
}

}  // namespace rig::testing
