#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "noisyst/vocab.hpp"

namespace noisyst {

// Single-layer LSTM encoder-decoder without attention. The decoder starts
// from the final encoder state; one embedding table is shared by both sides.
struct ModelConfig {
  std::size_t vocab_size = 16;
  std::size_t embed_dim = 32;
  std::size_t hidden_dim = 32;
  double dropout_rate = 0.3;
  double label_smoothing = 0.1;
  std::size_t max_decode_len = 8;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

struct Tensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> data;

  std::size_t rows() const { return shape.at(0); }
  std::size_t cols() const { return shape.size() > 1 ? shape[1] : 1; }
  bool operator==(const Tensor&) const = default;
};

// Parameter arrays, in storage order.
enum class ParamId : std::size_t {
  kEmbedding = 0,  // vocab x embed
  kEncWeight,      // 4*hidden x (embed + hidden), gate rows i, f, g, o
  kEncBias,        // 4*hidden
  kDecWeight,
  kDecBias,
  kOutWeight,  // vocab x hidden
  kOutBias,    // vocab
  kCount
};

struct ModelParams {
  ModelConfig config;
  std::vector<Tensor> tensors;

  Tensor& operator[](ParamId id) { return tensors[static_cast<std::size_t>(id)]; }
  const Tensor& operator[](ParamId id) const {
    return tensors[static_cast<std::size_t>(id)];
  }
  std::size_t num_values() const;
  // Throws ConfigError on shape mismatch, NumericError on non-finite entries.
  void validate() const;
  // Order-sensitive hash of every value; identifies a teacher snapshot.
  std::uint64_t fingerprint() const;
  bool operator==(const ModelParams&) const = default;
};

struct Gradients {
  std::vector<Tensor> tensors;

  Tensor& operator[](ParamId id) { return tensors[static_cast<std::size_t>(id)]; }
  const Tensor& operator[](ParamId id) const {
    return tensors[static_cast<std::size_t>(id)];
  }
  double global_norm() const;
};

// Uniform(-a, a) with a = 1/sqrt(hidden_dim) for every entry.
ModelParams init_params(const ModelConfig& config, std::uint64_t seed);
Gradients zero_gradients(const ModelParams& params);

// Padded mini-batch. Matrices are row-major (one row per example).
struct Batch {
  std::size_t size = 0;
  std::size_t source_width = 0;
  std::size_t target_width = 0;
  std::vector<TokenId> source;
  std::vector<std::size_t> source_lengths;
  std::vector<TokenId> target;
  std::vector<std::size_t> target_lengths;
  std::uint64_t dropout_seed = 0;

  static Batch from_examples(std::span<const ParallelExample> examples,
                             std::uint64_t dropout_seed);
  TokenId source_at(std::size_t b, std::size_t t) const {
    return source[b * source_width + t];
  }
  TokenId target_at(std::size_t b, std::size_t t) const {
    return target[b * target_width + t];
  }
};

struct LossResult {
  // Mean label-smoothed NLL over all scored target tokens (targets + EOS).
  double loss = 0.0;
  std::size_t tokens = 0;
  // Unsmoothed log p(y_t | y_<t, x) per example, EOS included.
  std::vector<std::vector<double>> token_logprobs;
};

LossResult forward_loss(const ModelParams& params, const Batch& batch,
                        bool train_mode);

struct LossAndGrad {
  LossResult loss;
  Gradients grads;
};

// Analytic gradient of forward_loss; the dropout mask comes from the batch
// seed, so forward and backward agree. Throws NumericError naming the array
// on non-finite gradients.
LossAndGrad loss_and_grad(const ModelParams& params, const Batch& batch,
                          bool train_mode);
Gradients grad(const ModelParams& params, const Batch& batch, bool train_mode);

// Incremental single-example interface used by the decoders (eval mode).
struct RecurrentState {
  Eigen::VectorXd h;
  Eigen::VectorXd c;
};

RecurrentState encode_source(const ModelParams& params, const Sequence& source);
// Feeds `input` to the decoder; `logprobs` receives log p(next token).
RecurrentState decoder_step(const ModelParams& params,
                            const RecurrentState& state, TokenId input,
                            Eigen::VectorXd& logprobs);

// Sum of log p(target, EOS | source) in eval mode via the batched path.
double score_sequence(const ModelParams& params, const Sequence& source,
                      const Sequence& target);

}  // namespace noisyst
