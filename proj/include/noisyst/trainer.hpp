#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "noisyst/model.hpp"
#include "noisyst/optimizer.hpp"

namespace noisyst {

struct TrainSchedule {
  std::size_t max_updates = 4000;
  std::size_t batch_size = 32;
  std::uint64_t seed = 1;
  // Stop after this many evaluations without improvement; 0 disables.
  std::size_t patience = 0;
  std::size_t eval_interval = 100;
  LrSchedule lr;
  double clip_norm = 5.0;
  // When false the model trains without dropout.
  bool dropout = true;
  // Whether the starting point itself competes in checkpoint selection.
  bool select_initial = true;

  bool operator==(const TrainSchedule&) const = default;
};

struct HistoryRecord {
  std::size_t update = 0;
  double train_loss = 0.0;  // mean batch loss since the previous record (NaN at update 0)
  double valid_loss = 0.0;
};

struct TrainResult {
  ModelParams best;
  std::size_t best_update = 0;
  double best_valid_loss = 0.0;
  std::vector<HistoryRecord> history;
};

// Rewrites a training source before batching, e.g. input noise. Receives the
// epoch and the example's index in the training set.
using SourceTransform =
    std::function<Sequence(const Sequence&, std::size_t epoch, std::size_t index)>;

// Mini-batch Adam training with checkpoint selection by validation loss.
// With schedule.select_initial the starting point competes too, so the
// result is never worse on the validation set than `init`. An empty
// validation set selects the last iterate. Deterministic given the seed.
TrainResult train(const ModelParams& init, const Dataset& train_set,
                  const Dataset& valid_set, const TrainSchedule& schedule,
                  const SourceTransform& transform = nullptr);

// Token-weighted mean loss in eval mode.
double evaluate_loss(const ModelParams& params, const Dataset& data,
                     std::size_t batch_size = 256);

}  // namespace noisyst
