#pragma once

#include <cstdint>
#include <vector>

#include "noisyst/model.hpp"

namespace noisyst {

// Linear warmup to `peak_lr`, then peak_lr * sqrt(warmup / step) when
// `inverse_sqrt` is set (constant otherwise). Steps are 1-based.
struct LrSchedule {
  double peak_lr = 5e-4;
  std::size_t warmup_steps = 400;
  bool inverse_sqrt = true;

  double rate(std::uint64_t step) const;
  bool operator==(const LrSchedule&) const = default;
};

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-8;
};

struct OptimizerState {
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
  std::uint64_t step = 0;
  LrSchedule schedule;
  AdamHyper hyper;

  static OptimizerState fresh(const ModelParams& params, LrSchedule schedule,
                              AdamHyper hyper = {});
};

// Global-norm clipping (disabled when clip_norm <= 0) followed by a
// bias-corrected Adam update. Returns the pre-clip gradient norm.
double adam_step(ModelParams& params, OptimizerState& state,
                 const Gradients& grads, double clip_norm);

}  // namespace noisyst
