#include "noisyst/trainer.hpp"

#include <limits>
#include <numeric>

#include "noisyst/errors.hpp"
#include "noisyst/rng.hpp"

namespace noisyst {

double evaluate_loss(const ModelParams& params, const Dataset& data,
                     std::size_t batch_size) {
  if (data.empty()) return std::numeric_limits<double>::quiet_NaN();
  double total = 0.0;
  std::size_t tokens = 0;
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    const std::size_t n = std::min(batch_size, data.size() - start);
    const Batch batch =
        Batch::from_examples(std::span(data).subspan(start, n), 0);
    const LossResult r = forward_loss(params, batch, false);
    total += r.loss * static_cast<double>(r.tokens);
    tokens += r.tokens;
  }
  return total / static_cast<double>(tokens);
}

TrainResult train(const ModelParams& init, const Dataset& train_set,
                  const Dataset& valid_set, const TrainSchedule& schedule,
                  const SourceTransform& transform) {
  if (train_set.empty()) throw UsageError("empty training set");
  if (schedule.batch_size == 0 || schedule.eval_interval == 0) {
    throw UsageError("batch_size and eval_interval must be positive");
  }
  init.validate();

  ModelParams params = init;
  OptimizerState opt = OptimizerState::fresh(params, schedule.lr);
  TrainResult result;
  result.best = params;
  const double initial_valid = valid_set.empty() ? std::numeric_limits<double>::quiet_NaN()
                                                 : evaluate_loss(params, valid_set);
  result.history.push_back({0, std::numeric_limits<double>::quiet_NaN(), initial_valid});
  result.best_valid_loss = (schedule.select_initial && !valid_set.empty())
                               ? initial_valid
                               : std::numeric_limits<double>::infinity();

  std::vector<std::size_t> order(train_set.size());
  std::vector<ParallelExample> batch_examples;
  std::size_t update = 0;
  std::size_t epoch = 0;
  std::size_t stale = 0;
  double loss_sum = 0.0;
  std::size_t loss_count = 0;
  bool stop = false;

  while (!stop && update < schedule.max_updates) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(mix_seed(schedule.seed, epoch));
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.below(i)]);
    }
    for (std::size_t start = 0; start < order.size() && !stop; start += schedule.batch_size) {
      const std::size_t end = std::min(order.size(), start + schedule.batch_size);
      batch_examples.clear();
      for (std::size_t j = start; j < end; ++j) {
        const ParallelExample& ex = train_set[order[j]];
        if (transform) {
          batch_examples.push_back({transform(ex.source, epoch, order[j]), ex.target});
        } else {
          batch_examples.push_back(ex);
        }
      }
      const Batch batch = Batch::from_examples(
          batch_examples, mix_seed(schedule.seed ^ 0xd1b54a32d192ed03ULL, update));
      const LossAndGrad lg = loss_and_grad(params, batch, schedule.dropout);
      adam_step(params, opt, lg.grads, schedule.clip_norm);
      ++update;
      loss_sum += lg.loss.loss;
      ++loss_count;

      if (update % schedule.eval_interval == 0 || update == schedule.max_updates) {
        HistoryRecord rec{update, loss_sum / static_cast<double>(loss_count),
                          std::numeric_limits<double>::quiet_NaN()};
        loss_sum = 0.0;
        loss_count = 0;
        if (valid_set.empty()) {
          result.best = params;
          result.best_update = update;
        } else {
          rec.valid_loss = evaluate_loss(params, valid_set);
          if (rec.valid_loss < result.best_valid_loss) {
            result.best_valid_loss = rec.valid_loss;
            result.best = params;
            result.best_update = update;
            stale = 0;
          } else if (schedule.patience > 0 && ++stale >= schedule.patience) {
            stop = true;
          }
        }
        result.history.push_back(rec);
      }
      if (update >= schedule.max_updates) stop = true;
    }
    ++epoch;
  }
  if (valid_set.empty()) result.best_valid_loss = std::numeric_limits<double>::quiet_NaN();
  return result;
}

}  // namespace noisyst
