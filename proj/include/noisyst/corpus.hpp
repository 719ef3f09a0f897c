#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "noisyst/vocab.hpp"

namespace noisyst {

// One line of a TSV corpus: space-separated source tokens, optionally a TAB
// and space-separated target tokens, optionally a TAB and a confidence.
struct RawExample {
  std::size_t line = 0;  // 1-based
  std::vector<std::string> source;
  std::vector<std::string> target;
  std::optional<double> confidence;
};

enum class CorpusKind { kParallel, kUnlabeled };

// Throws UsageError naming the offending line for malformed input, and for
// empty files.
std::vector<RawExample> read_tsv(const std::filesystem::path& path, CorpusKind kind);
std::vector<RawExample> parse_tsv(const std::string& text, CorpusKind kind,
                                  const std::string& origin = "<memory>");

// Adds every token of `raw` to `vocab` in order of first appearance.
void extend_vocabulary(Vocabulary& vocab, const std::vector<RawExample>& raw);
Dataset to_dataset(const std::vector<RawExample>& raw, const Vocabulary& vocab);
std::vector<Sequence> to_sources(const std::vector<RawExample>& raw,
                                 const Vocabulary& vocab);

struct IngestedCorpus {
  Dataset examples;
  Vocabulary vocab;
  std::vector<std::size_t> lines;
};

// Reads one parallel corpus and builds its vocabulary (reserved tokens first).
IngestedCorpus ingest_corpus(const std::filesystem::path& path);

// Writes `data` as TSV; a third column carries `confidence` when given.
void write_tsv(const std::filesystem::path& path, const Dataset& data,
               const Vocabulary& vocab,
               const std::vector<double>* confidence = nullptr);
void write_unlabeled_tsv(const std::filesystem::path& path,
                         const std::vector<Sequence>& sources, const Vocabulary& vocab);

}  // namespace noisyst
