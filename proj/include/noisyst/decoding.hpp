#pragma once

#include <cstdint>

#include "noisyst/model.hpp"

namespace noisyst {

enum class DecodeMode { kBeam, kSample, kGreedy };

struct DecodeSpec {
  DecodeMode mode = DecodeMode::kBeam;
  std::size_t beam_size = 5;
  // Maximum number of decoding steps, EOS included.
  std::size_t max_len = 8;
  bool length_normalize = true;
  double temperature = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const DecodeSpec&) const = default;
};

struct ScoredHypothesis {
  Sequence sequence;  // without EOS
  // Sum of per-token log-probabilities (EOS included when finished).
  double logprob = 0.0;
  // logprob / scored tokens when length normalization is on.
  double normalized_score = 0.0;
  bool finished = false;
};

// All decoders run the model in eval mode and never emit PAD or BOS.
// Exactly equal scores are broken in favour of the lower token id.
ScoredHypothesis beam_search(const ModelParams& params, const Sequence& source,
                             const DecodeSpec& spec);
// Ancestral sampling at spec.temperature; argmax when temperature < 1e-6.
// Reported scores are the untempered model log-probabilities.
ScoredHypothesis sample_decode(const ModelParams& params, const Sequence& source,
                               const DecodeSpec& spec);
ScoredHypothesis greedy_decode(const ModelParams& params, const Sequence& source,
                               const DecodeSpec& spec);
// Dispatches on spec.mode.
ScoredHypothesis decode(const ModelParams& params, const Sequence& source,
                        const DecodeSpec& spec);

}  // namespace noisyst
