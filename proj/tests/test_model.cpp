#include <gtest/gtest.h>

#include <cmath>

#include "noisyst/checkpoint.hpp"
#include "noisyst/errors.hpp"
#include "noisyst/model.hpp"
#include "noisyst/rng.hpp"
#include "oracles.hpp"

namespace noisyst {
namespace {

ModelConfig small_config() {
  ModelConfig c;
  c.vocab_size = 8;
  c.embed_dim = 4;
  c.hidden_dim = 5;
  return c;
}

Dataset small_data() {
  return {{{6, 7, 5}, {7, 6}}, {{7}, {6, 6, 7}}, {{6, 6, 6, 7}, {}}};
}

TEST(Model, InitIsBoundedAndSeeded) {
  const ModelParams a = init_params(small_config(), 3);
  const ModelParams b = init_params(small_config(), 3);
  const ModelParams c = init_params(small_config(), 4);
  EXPECT_EQ(a, b);
  EXPECT_NE(a.fingerprint(), c.fingerprint());
  const double bound = 1.0 / std::sqrt(5.0);
  for (const auto& t : a.tensors) {
    for (double v : t.data) EXPECT_LE(std::abs(v), bound);
  }
  EXPECT_EQ(a[ParamId::kEncWeight].shape, (std::vector<std::size_t>{20, 9}));
}

TEST(Model, UniformOutputGivesLogVocabLoss) {
  const ModelParams p = testing::zero_model(8, 4, 5);
  const Batch batch = Batch::from_examples(small_data(), 0);
  const LossResult r = forward_loss(p, batch, false);
  EXPECT_NEAR(r.loss, std::log(8.0), 1e-12);
  EXPECT_EQ(r.tokens, 3u + 4u + 1u);
  for (const auto& ex : r.token_logprobs) {
    for (double lp : ex) EXPECT_NEAR(lp, -std::log(8.0), 1e-12);
  }
}

TEST(Model, PaddingDoesNotLeakAcrossExamples) {
  const ModelParams p = init_params(small_config(), 11);
  const Dataset one = {small_data()[0]};
  const Dataset all = small_data();
  const LossResult alone = forward_loss(p, Batch::from_examples(one, 0), false);
  const LossResult batched = forward_loss(p, Batch::from_examples(all, 0), false);
  ASSERT_EQ(alone.token_logprobs[0].size(), batched.token_logprobs[0].size());
  for (std::size_t t = 0; t < alone.token_logprobs[0].size(); ++t) {
    EXPECT_NEAR(alone.token_logprobs[0][t], batched.token_logprobs[0][t], 1e-12);
  }
}

TEST(Model, IncrementalScoringMatchesBatchedPath) {
  const ModelParams p = init_params(small_config(), 5);
  const Sequence src = {6, 5, 7, 7};
  const Sequence tgt = {7, 6, 6};
  RecurrentState state = encode_source(p, src);
  Eigen::VectorXd logprobs;
  double total = 0.0;
  TokenId input = kBos;
  for (TokenId next : {TokenId{7}, TokenId{6}, TokenId{6}, kEos}) {
    state = decoder_step(p, state, input, logprobs);
    total += logprobs[next];
    input = next;
  }
  EXPECT_NEAR(score_sequence(p, src, tgt), total, 1e-12);
}

TEST(Model, DropoutMaskFollowsBatchSeed) {
  const ModelParams p = init_params(small_config(), 5);
  const Batch a = Batch::from_examples(small_data(), 42);
  const Batch b = Batch::from_examples(small_data(), 43);
  EXPECT_EQ(forward_loss(p, a, true).loss, forward_loss(p, a, true).loss);
  EXPECT_NE(forward_loss(p, a, true).loss, forward_loss(p, b, true).loss);
  EXPECT_EQ(forward_loss(p, a, false).loss, forward_loss(p, b, false).loss);
}

TEST(Model, GradientMatchesFiniteDifferences) {
  ModelConfig cfg = small_config();
  const ModelParams p = init_params(cfg, 9);
  for (bool train_mode : {false, true}) {
    const Batch batch = Batch::from_examples(small_data(), 77);
    const Gradients g = grad(p, batch, train_mode);
    Rng rng(train_mode ? 1 : 2);
    for (int k = 0; k < 40; ++k) {
      const std::size_t t = rng.below(p.tensors.size());
      const std::size_t i = rng.below(p.tensors[t].data.size());
      const double numeric = testing::central_difference(
          p, t, i, 1e-4, [&](const ModelParams& q) { return forward_loss(q, batch, train_mode).loss; });
      const double analytic = g.tensors[t].data[i];
      const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-7});
      EXPECT_LE(std::abs(analytic - numeric) / scale, 1e-4)
          << p.tensors[t].name << "[" << i << "] train=" << train_mode;
    }
  }
}

TEST(Model, NonFiniteParametersAreReported) {
  ModelParams p = init_params(small_config(), 1);
  p[ParamId::kDecBias].data[3] = std::nan("");
  EXPECT_THROW(p.validate(), NumericError);
}

TEST(Model, EmptySourceIsRejected) {
  const Dataset bad = {{{}, {6}}};
  EXPECT_THROW(Batch::from_examples(bad, 0), UsageError);
}

TEST(Checkpoint, RoundTripIsExact) {
  const Checkpoint ck{init_params(small_config(), 21), 99, "unit test"};
  const Checkpoint back = deserialize_checkpoint(serialize_checkpoint(ck));
  EXPECT_EQ(back, ck);
  std::string bytes = serialize_checkpoint(ck);
  bytes[0] = 'X';
  EXPECT_ANY_THROW(deserialize_checkpoint(bytes));
  EXPECT_ANY_THROW(deserialize_checkpoint(serialize_checkpoint(ck).substr(0, 40)));
}

}  // namespace
}  // namespace noisyst
