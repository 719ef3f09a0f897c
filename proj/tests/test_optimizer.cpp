#include <gtest/gtest.h>

#include <cmath>

#include "noisyst/optimizer.hpp"
#include "oracles.hpp"

namespace noisyst {
namespace {

TEST(LrSchedule, WarmupThenInverseSqrt) {
  const LrSchedule s{1e-3, 100, true};
  EXPECT_DOUBLE_EQ(s.rate(1), 1e-5);
  EXPECT_DOUBLE_EQ(s.rate(50), 5e-4);
  EXPECT_DOUBLE_EQ(s.rate(100), 1e-3);
  EXPECT_DOUBLE_EQ(s.rate(400), 5e-4);
  const LrSchedule flat{2e-3, 10, false};
  EXPECT_DOUBLE_EQ(flat.rate(5), 1e-3);
  EXPECT_DOUBLE_EQ(flat.rate(5000), 2e-3);
}

// Scalar Adam written out per entry, as in the original algorithm with the
// bias-corrected step size folded into the learning rate.
struct ScalarAdam {
  double m = 0, v = 0;
  int t = 0;
  double step(double param, double g, double lr) {
    ++t;
    m = 0.9 * m + 0.1 * g;
    v = 0.98 * v + 0.02 * g * g;
    const double mhat = m / (1 - std::pow(0.9, t));
    const double vhat = v / (1 - std::pow(0.98, t));
    return param - lr * mhat / (std::sqrt(vhat) + 1e-8);
  }
};

TEST(Adam, MatchesScalarReference) {
  ModelParams p = testing::zero_model(7, 2, 2);
  const LrSchedule sched{1e-2, 3, false};
  OptimizerState state = OptimizerState::fresh(p, sched);
  std::vector<ScalarAdam> ref(p.num_values());
  std::vector<double> expected;
  for (const auto& t : p.tensors) expected.insert(expected.end(), t.data.begin(), t.data.end());

  for (int step = 1; step <= 5; ++step) {
    Gradients g = zero_gradients(p);
    std::size_t k = 0;
    for (auto& t : g.tensors) {
      for (double& x : t.data) x = std::sin(0.3 * static_cast<double>(k++) + step) * 0.1;
    }
    adam_step(p, state, g, 0.0);
    k = 0;
    for (const auto& t : g.tensors) {
      for (double x : t.data) {
        expected[k] = ref[k].step(expected[k], x, sched.rate(step));
        ++k;
      }
    }
  }
  std::size_t k = 0;
  for (const auto& t : p.tensors) {
    for (double x : t.data) EXPECT_NEAR(x, expected[k++], 1e-14);
  }
}

TEST(Adam, ClipsByGlobalNorm) {
  ModelParams p = testing::zero_model(7, 2, 2);
  Gradients g = zero_gradients(p);
  g[ParamId::kOutBias].data[0] = 3.0;
  g[ParamId::kOutBias].data[1] = 4.0;
  EXPECT_DOUBLE_EQ(g.global_norm(), 5.0);

  // After clipping to norm 1 the first Adam step is still lr * sign(g), so
  // compare the second moments instead.
  OptimizerState clipped = OptimizerState::fresh(p, {1e-3, 0, false});
  ModelParams q = p;
  EXPECT_DOUBLE_EQ(adam_step(q, clipped, g, 1.0), 5.0);
  const auto& v = clipped.second_moment[static_cast<std::size_t>(ParamId::kOutBias)].data;
  EXPECT_NEAR(v[0], 0.02 * 0.6 * 0.6, 1e-15);
  EXPECT_NEAR(v[1], 0.02 * 0.8 * 0.8, 1e-15);
}

}  // namespace
}  // namespace noisyst
