#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "noisyst/toysum.hpp"

namespace noisyst {

// One row of metrics.csv. Metrics that do not apply are NaN (empty cells).
struct MetricsRecord {
  std::string run;
  std::size_t iteration = 0;
  std::string stage;  // baseline | PT | FT
  double train_loss = 0.0;
  double valid_loss = 0.0;
  double test_error = 0.0;
  double smoothness = 0.0;
  double symmetry = 0.0;
  double failure_rate = 0.0;
  std::size_t pseudo_examples = 0;
  std::uint64_t seed = 0;
  std::string config_hash;
};

const std::string& metrics_csv_header();
std::string format_metrics_csv(const std::vector<MetricsRecord>& records);
// Throws UsageError when the header differs from metrics_csv_header().
std::vector<MetricsRecord> parse_metrics_csv(const std::string& text,
                                             const std::string& origin = "<memory>");
void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<MetricsRecord>& records);
std::vector<MetricsRecord> read_metrics_csv(const std::filesystem::path& path);

// Median ignoring NaNs; NaN when nothing is left.
double median(std::vector<double> values);

struct ComparisonRow {
  std::string run;
  std::size_t iteration = 0;
  std::string stage;
  std::size_t seeds = 0;
  double valid_loss = 0.0;
  double test_error = 0.0;
  double smoothness = 0.0;
  double symmetry = 0.0;
  double failure_rate = 0.0;
};

// Groups records by (run, iteration, stage) and takes per-seed medians. With
// `final_only` each metrics file contributes only its last record.
std::vector<ComparisonRow> compare_runs(const std::vector<std::vector<MetricsRecord>>& runs,
                                        bool final_only = true);
std::string render_comparison(const std::vector<ComparisonRow>& rows);
std::string render_summary(const std::vector<MetricsRecord>& records);

// Heat maps: CSV rows (x1, x2, predicted, error, failed) and an 8-bit binary
// graymap where error 0 is white and errors >= the failure penalty are black.
std::string format_heatmap_csv(const toysum::GridPrediction& grid);
std::string format_heatmap_pgm(const std::vector<double>& heatmap);
void write_text(const std::filesystem::path& path, const std::string& content);

}  // namespace noisyst
