#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "noisyst/selftrain.hpp"

namespace noisyst {

// Flat `key = value` text with `[section]` headers and `#` comments. A value
// holding commas is a sweep list; expand_config() turns the cartesian
// product of all lists into separate runs.
struct ConfigEntry {
  std::string key;  // "section.key", or "run_name" at top level
  std::string value;
  std::size_t line = 0;
};

struct ConfigDocument {
  std::string origin;
  std::vector<ConfigEntry> entries;
};

ConfigDocument parse_config_text(const std::string& text,
                                 const std::string& origin = "<memory>");
ConfigDocument load_config(const std::filesystem::path& path);

enum class RunMode { kBaseline, kSelfTrain };
enum class TaskKind { kToy, kCorpus };

struct TaskSpec {
  TaskKind kind = TaskKind::kToy;
  std::uint64_t toy_seed = 0;
  std::size_t unlabeled_size = 0;
  std::filesystem::path train, valid, test, unlabeled;
};

struct RunConfig {
  std::string run_name;
  RunMode mode = RunMode::kSelfTrain;
  TaskSpec task;
  ExperimentPlan plan;
  std::filesystem::path output_dir;
  bool write_checkpoints = true;
  // Every key with its resolved value (defaults included).
  std::map<std::string, std::string> values;

  // Sorted key=value lines of everything that affects results.
  std::string canonical_text() const;
  // 16 hex digits (FNV-1a 64 of canonical_text()).
  std::string config_hash() const;
  std::filesystem::path run_dir() const;
};

// Builds one RunConfig per point of the sweep grid. Unknown keys, bad values
// and a missing run_name throw ConfigError. Swept keys other than the master
// seed are appended to the run name as "@key=value".
std::vector<RunConfig> expand_config(const ConfigDocument& doc);

// Default value of every recognised key.
const std::map<std::string, std::string>& config_defaults();

}  // namespace noisyst
