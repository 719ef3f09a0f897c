#include "noisyst/toysum.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "noisyst/decoding.hpp"
#include "noisyst/errors.hpp"
#include "noisyst/parallel.hpp"
#include "noisyst/rng.hpp"

namespace noisyst::toysum {

namespace {

constexpr TokenId kFirstDigit = static_cast<TokenId>(kNumReserved);

void check_operand(int x) {
  if (x < 0 || x >= kRange) {
    throw UsageError("toy operand " + std::to_string(x) + " outside [0, 99]");
  }
}

void append_digits(Sequence& seq, int value) {
  const std::string digits = std::to_string(value);
  for (char ch : digits) seq.push_back(digit_token(ch - '0'));
}

}  // namespace

ToySplit gen_toy_dataset(std::uint64_t seed) {
  std::vector<std::size_t> perm(kGridSize);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);

  auto take = [&, pos = std::size_t{0}](std::size_t n) mutable {
    std::vector<Point> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i, ++pos) {
      out.push_back({static_cast<int>(perm[pos] / kRange), static_cast<int>(perm[pos] % kRange)});
    }
    return out;
  };
  ToySplit split;
  split.train = take(kTrainSize);
  split.valid = take(kValidSize);
  split.test = take(kTestSize);
  split.unlabeled = take(kUnlabeledSize);
  return split;
}

const Vocabulary& toy_vocabulary() {
  static const Vocabulary vocab({"0", "1", "2", "3", "4", "5", "6", "7", "8", "9"});
  return vocab;
}

TokenId digit_token(int digit) {
  if (digit < 0 || digit > 9) throw UsageError("not a digit");
  return kFirstDigit + digit;
}

Sequence encode_pair(int x1, int x2) {
  check_operand(x1);
  check_operand(x2);
  Sequence seq;
  append_digits(seq, x1);
  seq.push_back(kSep);
  append_digits(seq, x2);
  return seq;
}

Sequence encode_sum(int s) {
  if (s < 0 || s > 2 * (kRange - 1)) {
    throw UsageError("toy sum " + std::to_string(s) + " outside [0, 198]");
  }
  Sequence seq;
  append_digits(seq, s);
  return seq;
}

std::optional<int> parse_prediction(const Sequence& seq) {
  int value = 0;
  std::size_t digits = 0;
  for (TokenId t : seq) {
    if (t == kEos) break;
    if (t < kFirstDigit || t > kFirstDigit + 9) return std::nullopt;
    if (++digits > 3) return std::nullopt;
    value = value * 10 + (t - kFirstDigit);
  }
  if (digits == 0) return std::nullopt;
  return value;
}

Dataset to_dataset(const std::vector<Point>& points) {
  Dataset data;
  data.reserve(points.size());
  for (const Point& p : points) data.push_back({encode_pair(p.x1, p.x2), encode_sum(p.sum())});
  return data;
}

std::vector<Sequence> to_sources(const std::vector<Point>& points) {
  std::vector<Sequence> out;
  out.reserve(points.size());
  for (const Point& p : points) out.push_back(encode_pair(p.x1, p.x2));
  return out;
}

GridPrediction predict_grid(const ModelParams& params, std::size_t threads) {
  DecodeSpec spec;
  spec.mode = DecodeMode::kGreedy;
  spec.max_len = params.config.max_decode_len;
  GridPrediction grid;
  parallel_for(kGridSize, threads, [&](std::size_t i) {
    const int x1 = static_cast<int>(i / kRange);
    const int x2 = static_cast<int>(i % kRange);
    const auto hyp = greedy_decode(params, encode_pair(x1, x2), spec);
    const auto value = hyp.finished ? parse_prediction(hyp.sequence) : std::nullopt;
    grid.values[i] = value.value_or(kParseFailure);
  });
  return grid;
}

GridPrediction grid_from(const std::function<std::optional<int>(int, int)>& f) {
  GridPrediction grid;
  for (int x1 = 0; x1 < kRange; ++x1) {
    for (int x2 = 0; x2 < kRange; ++x2) {
      grid.values[static_cast<std::size_t>(x1 * kRange + x2)] = f(x1, x2).value_or(kParseFailure);
    }
  }
  return grid;
}

double point_error(const GridPrediction& grid, int x1, int x2) {
  if (grid.failed(x1, x2)) return kFailurePenalty;
  return std::abs(grid.at(x1, x2) - (x1 + x2));
}

double mean_test_error(const GridPrediction& grid, const std::vector<Point>& test) {
  if (test.empty()) throw UsageError("empty test split");
  double total = 0.0;
  for (const Point& p : test) total += point_error(grid, p.x1, p.x2);
  return total / static_cast<double>(test.size());
}

double smoothness(const GridPrediction& grid) {
  double total = 0.0;
  for (int x1 = 0; x1 < kRange; ++x1) {
    for (int x2 = 0; x2 < kRange; ++x2) {
      double values[9];
      int n = 0;
      for (int a = std::max(0, x1 - 1); a <= std::min(kRange - 1, x1 + 1); ++a) {
        for (int b = std::max(0, x2 - 1); b <= std::min(kRange - 1, x2 + 1); ++b) {
          if (!grid.failed(a, b)) values[n++] = grid.at(a, b);
        }
      }
      if (n < 2) continue;
      double mean = 0.0;
      for (int i = 0; i < n; ++i) mean += values[i];
      mean /= n;
      double var = 0.0;
      for (int i = 0; i < n; ++i) var += (values[i] - mean) * (values[i] - mean);
      total += std::sqrt(var / n);
    }
  }
  return total / static_cast<double>(kGridSize);
}

double symmetry(const GridPrediction& grid) {
  double total = 0.0;
  for (int x1 = 0; x1 < kRange; ++x1) {
    for (int x2 = 0; x2 < kRange; ++x2) {
      if (x1 == x2) continue;
      if (grid.failed(x1, x2) || grid.failed(x2, x1)) {
        total += kFailurePenalty;
      } else {
        total += std::abs(grid.at(x1, x2) - grid.at(x2, x1));
      }
    }
  }
  return total / static_cast<double>(kGridSize);
}

double failure_rate(const GridPrediction& grid) {
  const auto failures = std::count(grid.values.begin(), grid.values.end(), kParseFailure);
  return static_cast<double>(failures) / static_cast<double>(kGridSize);
}

std::vector<double> error_heatmap(const GridPrediction& grid) {
  std::vector<double> out(kGridSize);
  for (int x1 = 0; x1 < kRange; ++x1) {
    for (int x2 = 0; x2 < kRange; ++x2) {
      out[static_cast<std::size_t>(x1 * kRange + x2)] = point_error(grid, x1, x2);
    }
  }
  return out;
}

}  // namespace noisyst::toysum
