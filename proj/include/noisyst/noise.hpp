#pragma once

#include <cstdint>
#include <functional>

#include "noisyst/vocab.hpp"

namespace noisyst {

enum class NoiseKind { kNone, kSynthetic, kOperandSwap };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::kNone;
  double drop_prob = 0.1;
  double blank_prob = 0.2;
  double shuffle_window = 3.0;
  // operand_swap perturbers exchange the operands with this probability.
  double swap_prob = 0.5;
  std::uint64_t seed_stream = 0;

  void validate() const;
  bool operator==(const NoiseSpec&) const = default;
};

// Drop, then blank, then locally shuffle (positions i + U[0, window],
// stable sort). If every token is dropped one uniformly chosen token is
// kept. Deterministic given (spec.seed_stream, example_seed).
Sequence synthetic_noise(const Sequence& x, const NoiseSpec& spec,
                         std::uint64_t example_seed);

// "a SEP b" -> "b SEP a". Requires exactly one SEP with tokens on both sides.
Sequence operand_swap(const Sequence& x);

using Perturber = std::function<Sequence(const Sequence&, std::uint64_t example_seed)>;

Perturber make_perturber(const NoiseSpec& spec);

// Per-epoch, per-example seed so that noise is redrawn every epoch.
std::uint64_t noise_example_seed(std::uint64_t epoch, std::uint64_t index);

}  // namespace noisyst
