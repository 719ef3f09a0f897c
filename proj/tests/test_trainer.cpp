#include <gtest/gtest.h>

#include "noisyst/trainer.hpp"

namespace noisyst {
namespace {

ModelConfig tiny() {
  ModelConfig c;
  c.vocab_size = 9;
  c.embed_dim = 8;
  c.hidden_dim = 8;
  return c;
}

Dataset copy_task() {
  Dataset d;
  for (TokenId a = 6; a < 9; ++a) {
    for (TokenId b = 6; b < 9; ++b) d.push_back({{a, b}, {b, a}});
  }
  return d;
}

TrainSchedule quick(std::size_t updates) {
  TrainSchedule s;
  s.max_updates = updates;
  s.batch_size = 4;
  s.eval_interval = 50;
  s.lr = {1e-2, 20, false};
  s.seed = 5;
  return s;
}

TEST(Trainer, LearnsASmallMapping) {
  const Dataset d = copy_task();
  const ModelParams init = init_params(tiny(), 3);
  TrainSchedule s = quick(600);
  s.dropout = false;
  const TrainResult r = train(init, d, d, s);
  EXPECT_LT(r.best_valid_loss, 0.5 * evaluate_loss(init, d));
  EXPECT_GT(r.best_update, 0u);
  EXPECT_EQ(r.history.front().update, 0u);
}

TEST(Trainer, IsDeterministic) {
  const Dataset d = copy_task();
  const ModelParams init = init_params(tiny(), 3);
  const TrainResult a = train(init, d, d, quick(100));
  const TrainResult b = train(init, d, d, quick(100));
  EXPECT_EQ(a.best, b.best);
  EXPECT_EQ(a.best_update, b.best_update);
  TrainSchedule other = quick(100);
  other.seed = 6;
  EXPECT_NE(train(init, d, d, other).best.fingerprint(), a.best.fingerprint());
}

TEST(Trainer, EmptyValidationKeepsLastIterate) {
  const Dataset d = copy_task();
  const TrainResult r = train(init_params(tiny(), 3), d, {}, quick(120));
  EXPECT_EQ(r.best_update, 120u);
}

TEST(Trainer, InitialPointCompetesOnlyWhenRequested) {
  const Dataset d = copy_task();
  TrainSchedule s = quick(100);
  s.lr.peak_lr = 10.0;  // diverges away from a trained optimum
  s.dropout = false;
  TrainSchedule good = quick(600);
  good.dropout = false;
  const ModelParams trained = train(init_params(tiny(), 3), d, d, good).best;

  const TrainResult kept = train(trained, d, d, s);
  EXPECT_EQ(kept.best_update, 0u);
  EXPECT_EQ(kept.best, trained);
  s.select_initial = false;
  EXPECT_GT(train(trained, d, d, s).best_update, 0u);
}

TEST(Trainer, TransformSeesEpochAndIndex) {
  const Dataset d = copy_task();
  std::size_t max_epoch = 0, calls = 0;
  TrainSchedule s = quick(10);
  train(init_params(tiny(), 3), d, d, s, [&](const Sequence& x, std::size_t epoch, std::size_t index) {
    EXPECT_LT(index, d.size());
    EXPECT_EQ(x, d[index].source);
    max_epoch = std::max(max_epoch, epoch);
    ++calls;
    return x;
  });
  EXPECT_EQ(calls, 3u * 9u + 4u);  // three full epochs plus one batch of 4
  EXPECT_EQ(max_epoch, 3u);
}

}  // namespace
}  // namespace noisyst
