#include "noisyst/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "noisyst/errors.hpp"

namespace noisyst {

double LrSchedule::rate(std::uint64_t step) const {
  const double s = static_cast<double>(std::max<std::uint64_t>(step, 1));
  const double warmup = static_cast<double>(warmup_steps);
  if (warmup_steps > 0 && s <= warmup) return peak_lr * s / warmup;
  if (!inverse_sqrt) return peak_lr;
  return peak_lr * std::sqrt(std::max(warmup, 1.0) / s);
}

OptimizerState OptimizerState::fresh(const ModelParams& params,
                                     LrSchedule schedule, AdamHyper hyper) {
  OptimizerState st;
  st.schedule = schedule;
  st.hyper = hyper;
  for (const auto& t : params.tensors) {
    Tensor zero{t.name, t.shape, std::vector<double>(t.data.size(), 0.0)};
    st.first_moment.push_back(zero);
    st.second_moment.push_back(std::move(zero));
  }
  return st;
}

double adam_step(ModelParams& params, OptimizerState& state,
                 const Gradients& grads, double clip_norm) {
  if (grads.tensors.size() != params.tensors.size() ||
      state.first_moment.size() != params.tensors.size()) {
    throw ConfigError("optimizer state does not match parameters");
  }
  const double norm = grads.global_norm();
  if (!std::isfinite(norm)) throw NumericError("non-finite gradient norm");
  const double clip = (clip_norm > 0.0 && norm > clip_norm) ? clip_norm / norm : 1.0;

  ++state.step;
  const auto& hp = state.hyper;
  const double lr = state.schedule.rate(state.step);
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(hp.beta1, t);
  const double bc2 = 1.0 - std::pow(hp.beta2, t);

  for (std::size_t i = 0; i < params.tensors.size(); ++i) {
    auto& p = params.tensors[i].data;
    const auto& g = grads.tensors[i].data;
    auto& m = state.first_moment[i].data;
    auto& v = state.second_moment[i].data;
    if (g.size() != p.size() || m.size() != p.size()) {
      throw ConfigError("shape mismatch in '" + params.tensors[i].name + "'");
    }
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double gj = g[j] * clip;
      m[j] = hp.beta1 * m[j] + (1.0 - hp.beta1) * gj;
      v[j] = hp.beta2 * v[j] + (1.0 - hp.beta2) * gj * gj;
      const double update = lr * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + hp.eps);
      if (!std::isfinite(update)) {
        throw NumericError("non-finite update in '" + params.tensors[i].name + "'");
      }
      p[j] -= update;
    }
  }
  return norm;
}

}  // namespace noisyst
