#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "noisyst/model.hpp"
#include "noisyst/vocab.hpp"

namespace noisyst::toysum {

inline constexpr int kRange = 100;  // operands in [0, 99]
inline constexpr std::size_t kGridSize = kRange * kRange;
inline constexpr std::size_t kTrainSize = 250;
inline constexpr std::size_t kValidSize = 100;
inline constexpr std::size_t kTestSize = 5000;
inline constexpr std::size_t kUnlabeledSize = 4000;
// Error charged for an unparseable prediction.
inline constexpr double kFailurePenalty = 100.0;
inline constexpr int kParseFailure = -1;

struct Point {
  int x1 = 0;
  int x2 = 0;

  int sum() const { return x1 + x2; }
  std::size_t index() const { return static_cast<std::size_t>(x1 * kRange + x2); }
  bool operator==(const Point&) const = default;
};

struct ToySplit {
  std::vector<Point> train, valid, test, unlabeled;
};

// Disjoint random split of the 100x100 grid (650 points stay unused).
ToySplit gen_toy_dataset(std::uint64_t seed);

// Reserved tokens followed by the digits "0".."9".
const Vocabulary& toy_vocabulary();
TokenId digit_token(int digit);

// Digits of x1, SEP, digits of x2; no zero padding.
Sequence encode_pair(int x1, int x2);
Sequence encode_sum(int s);
// Digits only, 1..3 of them; EOS (if present) terminates the number.
std::optional<int> parse_prediction(const Sequence& seq);

Dataset to_dataset(const std::vector<Point>& points);
std::vector<Sequence> to_sources(const std::vector<Point>& points);

// Predicted value at every grid point, kParseFailure for failures.
struct GridPrediction {
  std::vector<int> values = std::vector<int>(kGridSize, kParseFailure);

  int at(int x1, int x2) const { return values[static_cast<std::size_t>(x1 * kRange + x2)]; }
  bool failed(int x1, int x2) const { return at(x1, x2) == kParseFailure; }
};

GridPrediction predict_grid(const ModelParams& params, std::size_t threads = 1);
GridPrediction grid_from(const std::function<std::optional<int>(int, int)>& f);

double point_error(const GridPrediction& grid, int x1, int x2);
double mean_test_error(const GridPrediction& grid, const std::vector<Point>& test);
double smoothness(const GridPrediction& grid);
double symmetry(const GridPrediction& grid);
double failure_rate(const GridPrediction& grid);
// Row-major [x1][x2] absolute errors.
std::vector<double> error_heatmap(const GridPrediction& grid);

}  // namespace noisyst::toysum
