#pragma once

#include <filesystem>
#include <ostream>
#include <vector>

#include "noisyst/config.hpp"
#include "noisyst/report.hpp"

namespace noisyst {

struct RunOutcome {
  std::filesystem::path dir;
  std::vector<MetricsRecord> records;
};

// Executes one expanded config and writes its artifacts under run_dir():
//   metrics.csv, summary.txt, run.log (wall times), config.txt,
//   {iter}/{stage}.ckpt, {iter}/pseudo.tsv, {iter}/{stage}_heatmap.{csv,pgm}.
// Progress lines go to `progress` when given.
RunOutcome run_experiment(const RunConfig& config, std::ostream* progress = nullptr);

}  // namespace noisyst
