#pragma once

// Reference computations used by the tests. They are written directly from
// the definitions and share no code with the library beyond data types.

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "noisyst/model.hpp"

namespace noisyst::testing {

// Smallest model with every parameter set to zero.
inline ModelParams zero_model(std::size_t vocab, std::size_t embed, std::size_t hidden) {
  ModelConfig cfg;
  cfg.vocab_size = vocab;
  cfg.embed_dim = embed;
  cfg.hidden_dim = hidden;
  ModelParams p = init_params(cfg, 1);
  for (auto& t : p.tensors) std::fill(t.data.begin(), t.data.end(), 0.0);
  return p;
}

// Model whose next-token distribution ignores the input: softmax(bias).
inline ModelParams bias_only_model(std::size_t vocab, const std::vector<double>& bias) {
  ModelParams p = zero_model(vocab, 2, 2);
  p[ParamId::kOutBias].data = bias;
  return p;
}

// Central interval [lo, hi] of Binomial(n, p) that holds at least `level`
// of the mass, cutting at most (1 - level) / 2 from each tail.
inline std::pair<int, int> binomial_interval(int n, double p, double level) {
  std::vector<double> pmf(n + 1);
  for (int k = 0; k <= n; ++k) {
    pmf[k] = std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) +
                      k * std::log(p) + (n - k) * std::log1p(-p));
  }
  const double tail = (1.0 - level) / 2.0;
  int lo = 0;
  double acc = 0.0;
  while (lo < n && acc + pmf[lo] <= tail) acc += pmf[lo++];
  int hi = n;
  acc = 0.0;
  while (hi > 0 && acc + pmf[hi] <= tail) acc += pmf[hi--];
  return {lo, hi};
}

// Central finite difference of `f` with respect to one parameter entry.
template <typename F>
double central_difference(ModelParams params, std::size_t tensor, std::size_t index, double step,
                          F&& f) {
  const double orig = params.tensors[tensor].data[index];
  params.tensors[tensor].data[index] = orig + step;
  const double plus = f(params);
  params.tensors[tensor].data[index] = orig - step;
  const double minus = f(params);
  return (plus - minus) / (2.0 * step);
}

}  // namespace noisyst::testing
