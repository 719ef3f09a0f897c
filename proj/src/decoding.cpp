#include "noisyst/decoding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "noisyst/errors.hpp"
#include "noisyst/rng.hpp"

namespace noisyst {

namespace {

constexpr double kArgmaxTemperature = 1e-6;

bool emittable(TokenId t) { return t != kPad && t != kBos; }

double normalized(double logprob, std::size_t scored, bool normalize) {
  return normalize ? logprob / static_cast<double>(std::max<std::size_t>(scored, 1))
                   : logprob;
}

// Compares prefix + token scores exactly as beam search does, so a beam of
// one reproduces greedy decoding bit for bit.
TokenId argmax_token(double prefix, const Eigen::VectorXd& logprobs) {
  TokenId best = -1;
  double best_score = 0.0;
  for (Eigen::Index v = 0; v < logprobs.size(); ++v) {
    const auto t = static_cast<TokenId>(v);
    if (!emittable(t)) continue;
    const double score = prefix + logprobs(v);
    if (best < 0 || score > best_score) {
      best = t;
      best_score = score;
    }
  }
  return best;
}

struct Hyp {
  Sequence tokens;
  double logprob = 0.0;
  RecurrentState state;
};

}  // namespace

void DecodeSpec::validate() const {
  if (beam_size < 1) throw UsageError("beam_size must be >= 1");
  if (max_len < 1) throw UsageError("max_len must be >= 1");
  if (!(temperature > 0.0)) throw UsageError("temperature must be > 0");
}

ScoredHypothesis beam_search(const ModelParams& params, const Sequence& source,
                             const DecodeSpec& spec) {
  spec.validate();
  struct Candidate {
    double score;
    std::size_t parent;
    TokenId token;
  };

  std::vector<Hyp> beam(1);
  beam[0].state = encode_source(params, source);
  std::vector<ScoredHypothesis> finished;
  Eigen::VectorXd logprobs;
  std::vector<Candidate> candidates;
  std::vector<RecurrentState> next_states;

  for (std::size_t step = 0; step < spec.max_len && !beam.empty(); ++step) {
    candidates.clear();
    next_states.clear();
    for (std::size_t p = 0; p < beam.size(); ++p) {
      const TokenId input = beam[p].tokens.empty() ? kBos : beam[p].tokens.back();
      next_states.push_back(decoder_step(params, beam[p].state, input, logprobs));
      for (Eigen::Index v = 0; v < logprobs.size(); ++v) {
        const auto t = static_cast<TokenId>(v);
        if (emittable(t)) candidates.push_back({beam[p].logprob + logprobs(v), p, t});
      }
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& b) {
                       if (a.score != b.score) return a.score > b.score;
                       if (a.parent != b.parent) return a.parent < b.parent;
                       return a.token < b.token;
                     });
    // EOS among the top `beam_size` candidates completes a hypothesis; the
    // live beam is refilled from the best non-EOS candidates.
    std::vector<Hyp> next;
    for (std::size_t rank = 0; rank < candidates.size() && next.size() < spec.beam_size; ++rank) {
      const Candidate& c = candidates[rank];
      if (c.token == kEos) {
        if (rank < spec.beam_size) {
          ScoredHypothesis h;
          h.sequence = beam[c.parent].tokens;
          h.logprob = c.score;
          h.finished = true;
          h.normalized_score = normalized(c.score, h.sequence.size() + 1, spec.length_normalize);
          finished.push_back(std::move(h));
        }
        continue;
      }
      Hyp h;
      h.tokens = beam[c.parent].tokens;
      h.tokens.push_back(c.token);
      h.logprob = c.score;
      h.state = next_states[c.parent];
      next.push_back(std::move(h));
    }
    beam = std::move(next);
    if (finished.size() >= spec.beam_size) break;
  }

  auto better = [](const ScoredHypothesis& a, const ScoredHypothesis& b) {
    return a.normalized_score > b.normalized_score;
  };
  if (!finished.empty()) {
    return *std::min_element(finished.begin(), finished.end(),
                             [&](const auto& a, const auto& b) { return better(a, b); });
  }
  ScoredHypothesis best;
  best.normalized_score = -std::numeric_limits<double>::infinity();
  for (const Hyp& h : beam) {
    ScoredHypothesis s{h.tokens, h.logprob,
                       normalized(h.logprob, h.tokens.size(), spec.length_normalize), false};
    if (better(s, best)) best = std::move(s);
  }
  return best;
}

ScoredHypothesis sample_decode(const ModelParams& params, const Sequence& source,
                               const DecodeSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  RecurrentState state = encode_source(params, source);
  ScoredHypothesis out;
  Eigen::VectorXd logprobs;
  std::vector<double> weights;
  TokenId input = kBos;
  for (std::size_t step = 0; step < spec.max_len; ++step) {
    state = decoder_step(params, state, input, logprobs);
    TokenId choice;
    if (spec.temperature < kArgmaxTemperature) {
      choice = argmax_token(out.logprob, logprobs);
    } else {
      // Tempered distribution restricted to emittable tokens.
      double mx = -std::numeric_limits<double>::infinity();
      for (Eigen::Index v = 0; v < logprobs.size(); ++v) {
        if (emittable(static_cast<TokenId>(v))) mx = std::max(mx, logprobs(v));
      }
      weights.assign(static_cast<std::size_t>(logprobs.size()), 0.0);
      double total = 0.0;
      for (Eigen::Index v = 0; v < logprobs.size(); ++v) {
        if (!emittable(static_cast<TokenId>(v))) continue;
        const double w = std::exp((logprobs(v) - mx) / spec.temperature);
        weights[static_cast<std::size_t>(v)] = w;
        total += w;
      }
      double u = rng.uniform() * total;
      choice = -1;
      for (std::size_t v = 0; v < weights.size(); ++v) {
        if (weights[v] <= 0.0) continue;
        choice = static_cast<TokenId>(v);
        if (u < weights[v]) break;
        u -= weights[v];
      }
    }
    out.logprob += logprobs(choice);
    if (choice == kEos) {
      out.finished = true;
      break;
    }
    out.sequence.push_back(choice);
    input = choice;
  }
  const std::size_t scored = out.sequence.size() + (out.finished ? 1 : 0);
  out.normalized_score = normalized(out.logprob, scored, spec.length_normalize);
  return out;
}

ScoredHypothesis greedy_decode(const ModelParams& params, const Sequence& source,
                               const DecodeSpec& spec) {
  spec.validate();
  RecurrentState state = encode_source(params, source);
  ScoredHypothesis out;
  Eigen::VectorXd logprobs;
  TokenId input = kBos;
  for (std::size_t step = 0; step < spec.max_len; ++step) {
    state = decoder_step(params, state, input, logprobs);
    const TokenId choice = argmax_token(out.logprob, logprobs);
    out.logprob += logprobs(choice);
    if (choice == kEos) {
      out.finished = true;
      break;
    }
    out.sequence.push_back(choice);
    input = choice;
  }
  const std::size_t scored = out.sequence.size() + (out.finished ? 1 : 0);
  out.normalized_score = normalized(out.logprob, scored, spec.length_normalize);
  return out;
}

ScoredHypothesis decode(const ModelParams& params, const Sequence& source,
                        const DecodeSpec& spec) {
  switch (spec.mode) {
    case DecodeMode::kBeam:
      return beam_search(params, source, spec);
    case DecodeMode::kSample:
      return sample_decode(params, source, spec);
    case DecodeMode::kGreedy:
      return greedy_decode(params, source, spec);
  }
  throw UsageError("unknown decode mode");
}

}  // namespace noisyst
