#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "noisyst/errors.hpp"
#include "noisyst/noise.hpp"
#include "noisyst/toysum.hpp"

namespace noisyst {
namespace {

NoiseSpec synthetic(double drop, double blank, double window) {
  NoiseSpec s;
  s.kind = NoiseKind::kSynthetic;
  s.drop_prob = drop;
  s.blank_prob = blank;
  s.shuffle_window = window;
  return s;
}

Sequence ten_tokens() {
  Sequence x(10);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<TokenId>(10 + i);
  return x;
}

TEST(SyntheticNoise, ZeroNoiseIsIdentity) {
  const Sequence x = ten_tokens();
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    EXPECT_EQ(synthetic_noise(x, synthetic(0, 0, 0), seed), x);
  }
}

TEST(SyntheticNoise, BlankOneMasksEverything) {
  EXPECT_EQ(synthetic_noise({6, 7, 8}, synthetic(0, 1, 0), 3), (Sequence{kBlank, kBlank, kBlank}));
}

TEST(SyntheticNoise, DropRateMatchesBinomialMean) {
  const Sequence x = ten_tokens();
  const NoiseSpec s = synthetic(0.5, 0, 0);
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    total += static_cast<double>(synthetic_noise(x, s, seed).size());
  }
  const double mean = total / 10000.0;
  EXPECT_GE(mean, 4.7);
  EXPECT_LE(mean, 5.3);
}

TEST(SyntheticNoise, KeepsAtLeastOneToken) {
  const Sequence x = ten_tokens();
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const Sequence y = synthetic_noise(x, synthetic(1.0, 0, 2), seed);
    ASSERT_EQ(y.size(), 1u);
    EXPECT_NE(std::find(x.begin(), x.end(), y[0]), x.end());
  }
}

TEST(SyntheticNoise, ShuffleIsLocal) {
  const Sequence x = ten_tokens();
  for (double window : {0.5, 1.5, 3.0}) {
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
      const Sequence y = synthetic_noise(x, synthetic(0, 0, window), seed);
      ASSERT_TRUE(std::is_permutation(x.begin(), x.end(), y.begin()));
      for (std::size_t j = 0; j < y.size(); ++j) {
        const double moved = std::abs(static_cast<double>(y[j] - 10) - static_cast<double>(j));
        EXPECT_LE(moved, window);
      }
    }
  }
}

TEST(SyntheticNoise, DeterministicPerSeed) {
  const Sequence x = ten_tokens();
  const NoiseSpec s = synthetic(0.1, 0.2, 3);
  EXPECT_EQ(synthetic_noise(x, s, 17), synthetic_noise(x, s, 17));
  NoiseSpec other = s;
  other.seed_stream = 1;
  int differ = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    differ += synthetic_noise(x, s, seed) != synthetic_noise(x, other, seed);
  }
  EXPECT_GT(differ, 10);
}

TEST(SyntheticNoise, RejectsWrongKindAndBadParameters) {
  NoiseSpec s;
  EXPECT_THROW(synthetic_noise({6}, s, 0), UsageError);
  EXPECT_THROW(synthetic_noise({6}, synthetic(1.5, 0, 0), 0), UsageError);
  EXPECT_THROW(synthetic_noise({6}, synthetic(0, 0, -1), 0), UsageError);
}

TEST(OperandSwap, SwapsAroundSeparator) {
  const Sequence x = toysum::encode_pair(12, 7);
  EXPECT_EQ(operand_swap(x), toysum::encode_pair(7, 12));
  EXPECT_EQ(operand_swap(toysum::encode_pair(5, 5)), toysum::encode_pair(5, 5));
}

TEST(OperandSwap, InvolutionOverTheGrid) {
  for (int a = 0; a < toysum::kRange; ++a) {
    for (int b = 0; b < toysum::kRange; ++b) {
      const Sequence x = toysum::encode_pair(a, b);
      const Sequence y = operand_swap(x);
      ASSERT_EQ(y, toysum::encode_pair(b, a));
      ASSERT_EQ(operand_swap(y), x);
      ASSERT_TRUE(std::is_permutation(x.begin(), x.end(), y.begin()));
    }
  }
}

TEST(OperandSwap, RejectsMalformedInput) {
  EXPECT_THROW(operand_swap({6, 7}), UsageError);
  EXPECT_THROW(operand_swap({kSep, 7}), UsageError);
  EXPECT_THROW(operand_swap({6, kSep}), UsageError);
  EXPECT_THROW(operand_swap({6, kSep, 7, kSep, 8}), UsageError);
}

TEST(Perturber, NoneIsIdentityAndSyntheticDelegates) {
  const Sequence x = ten_tokens();
  const Perturber none = make_perturber(NoiseSpec{});
  EXPECT_EQ(none(x, 5), x);
  const NoiseSpec s = synthetic(0.3, 0.3, 2);
  const Perturber p = make_perturber(s);
  for (std::uint64_t seed = 0; seed < 20; ++seed) EXPECT_EQ(p(x, seed), synthetic_noise(x, s, seed));
}

// With drop 0.5 on 10 distinct tokens each output is a subset chosen with
// probability 2^-10, so two seeds collide with probability 2^-10 and 100
// seeds give 4950 * 2^-10 ~ 4.8 colliding pairs on average.
TEST(Perturber, DistinctSeedsRarelyCollide) {
  const Sequence x = ten_tokens();
  const Perturber p = make_perturber(synthetic(0.5, 0, 0));
  std::vector<Sequence> outs;
  for (std::uint64_t seed = 0; seed < 100; ++seed) outs.push_back(p(x, noise_example_seed(0, seed)));
  int pairs = 0;
  for (std::size_t i = 0; i < outs.size(); ++i) {
    for (std::size_t j = i + 1; j < outs.size(); ++j) pairs += outs[i] == outs[j];
  }
  EXPECT_LE(pairs, 15);
}

TEST(Perturber, OperandSwapHonoursProbability) {
  NoiseSpec s;
  s.kind = NoiseKind::kOperandSwap;
  const Sequence x = toysum::encode_pair(31, 4);
  const Perturber p = make_perturber(s);
  int swapped = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) swapped += p(x, seed) != x;
  EXPECT_GT(swapped, 430);
  EXPECT_LT(swapped, 570);
  s.swap_prob = 1.0;
  EXPECT_EQ(make_perturber(s)(x, 0), operand_swap(x));
}

TEST(Perturber, EpochsGetFreshSeeds) {
  std::set<std::uint64_t> seeds;
  for (std::uint64_t e = 0; e < 10; ++e) {
    for (std::uint64_t i = 0; i < 10; ++i) seeds.insert(noise_example_seed(e, i));
  }
  EXPECT_EQ(seeds.size(), 100u);
}

}  // namespace
}  // namespace noisyst
