#include "noisyst/noise.hpp"

#include <algorithm>
#include <numeric>

#include "noisyst/errors.hpp"
#include "noisyst/rng.hpp"

namespace noisyst {

namespace {

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

}  // namespace

void NoiseSpec::validate() const {
  if (!is_probability(drop_prob) || !is_probability(blank_prob) ||
      !is_probability(swap_prob)) {
    throw UsageError("noise probabilities must lie in [0, 1]");
  }
  if (!(shuffle_window >= 0.0)) throw UsageError("shuffle_window must be >= 0");
}

Sequence synthetic_noise(const Sequence& x, const NoiseSpec& spec,
                         std::uint64_t example_seed) {
  if (spec.kind != NoiseKind::kSynthetic) {
    throw UsageError("synthetic_noise called with a non-synthetic spec");
  }
  spec.validate();
  if (x.empty()) return x;
  Rng rng(mix_seed(spec.seed_stream, example_seed));

  Sequence kept;
  kept.reserve(x.size());
  for (TokenId t : x) {
    if (!rng.bernoulli(spec.drop_prob)) kept.push_back(t);
  }
  if (kept.empty()) kept.push_back(x[rng.below(x.size())]);

  for (TokenId& t : kept) {
    if (rng.bernoulli(spec.blank_prob)) t = kBlank;
  }

  if (spec.shuffle_window > 0.0 && kept.size() > 1) {
    std::vector<double> keys(kept.size());
    for (std::size_t i = 0; i < keys.size(); ++i) {
      keys[i] = static_cast<double>(i) + rng.uniform() * spec.shuffle_window;
    }
    std::vector<std::size_t> order(kept.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
    Sequence shuffled;
    shuffled.reserve(kept.size());
    for (std::size_t i : order) shuffled.push_back(kept[i]);
    kept = std::move(shuffled);
  }
  return kept;
}

Sequence operand_swap(const Sequence& x) {
  const auto seps = std::count(x.begin(), x.end(), kSep);
  if (seps != 1) throw UsageError("operand_swap needs exactly one separator");
  const auto sep = std::find(x.begin(), x.end(), kSep);
  if (sep == x.begin() || sep + 1 == x.end()) {
    throw UsageError("operand_swap needs tokens on both sides of the separator");
  }
  Sequence out(sep + 1, x.end());
  out.push_back(kSep);
  out.insert(out.end(), x.begin(), sep);
  return out;
}

Perturber make_perturber(const NoiseSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case NoiseKind::kNone:
      return [](const Sequence& x, std::uint64_t) { return x; };
    case NoiseKind::kSynthetic:
      return [spec](const Sequence& x, std::uint64_t seed) {
        return synthetic_noise(x, spec, seed);
      };
    case NoiseKind::kOperandSwap:
      return [spec](const Sequence& x, std::uint64_t seed) {
        Rng rng(mix_seed(spec.seed_stream, seed));
        return rng.bernoulli(spec.swap_prob) ? operand_swap(x) : x;
      };
  }
  throw UsageError("unknown noise kind");
}

std::uint64_t noise_example_seed(std::uint64_t epoch, std::uint64_t index) {
  return mix_seed(epoch, index);
}

}  // namespace noisyst
