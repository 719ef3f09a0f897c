#include "noisyst/corpus.hpp"

#include <fstream>
#include <sstream>

#include "noisyst/errors.hpp"

namespace noisyst {

namespace {

std::vector<std::string> split_tokens(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

[[noreturn]] void malformed(const std::string& origin, std::size_t line,
                            const std::string& why) {
  throw UsageError(origin + ":" + std::to_string(line) + ": " + why);
}

}  // namespace

std::vector<RawExample> parse_tsv(const std::string& text, CorpusKind kind,
                                  const std::string& origin) {
  std::vector<RawExample> out;
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto fields = split_tabs(line);
    RawExample ex;
    ex.line = number;
    ex.source = split_tokens(fields[0]);
    if (ex.source.empty()) malformed(origin, number, "empty source");
    if (kind == CorpusKind::kParallel) {
      if (fields.size() < 2) malformed(origin, number, "missing TAB-separated target");
      if (fields.size() > 3) malformed(origin, number, "too many TAB-separated fields");
      ex.target = split_tokens(fields[1]);
      if (ex.target.empty()) malformed(origin, number, "empty target");
      if (fields.size() == 3) {
        try {
          std::size_t used = 0;
          ex.confidence = std::stod(fields[2], &used);
          if (used != fields[2].size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
          malformed(origin, number, "confidence column is not a number");
        }
      }
    } else if (fields.size() > 1) {
      malformed(origin, number, "unexpected TAB in unlabeled corpus");
    }
    out.push_back(std::move(ex));
  }
  if (out.empty()) throw UsageError(origin + ": empty corpus");
  return out;
}

std::vector<RawExample> read_tsv(const std::filesystem::path& path, CorpusKind kind) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read corpus " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_tsv(ss.str(), kind, path.string());
}

void extend_vocabulary(Vocabulary& vocab, const std::vector<RawExample>& raw) {
  for (const auto& ex : raw) {
    for (const auto& t : ex.source) vocab.add(t);
    for (const auto& t : ex.target) vocab.add(t);
  }
}

Dataset to_dataset(const std::vector<RawExample>& raw, const Vocabulary& vocab) {
  Dataset data;
  data.reserve(raw.size());
  for (const auto& ex : raw) data.push_back({vocab.encode(ex.source), vocab.encode(ex.target)});
  return data;
}

std::vector<Sequence> to_sources(const std::vector<RawExample>& raw,
                                 const Vocabulary& vocab) {
  std::vector<Sequence> out;
  out.reserve(raw.size());
  for (const auto& ex : raw) out.push_back(vocab.encode(ex.source));
  return out;
}

IngestedCorpus ingest_corpus(const std::filesystem::path& path) {
  const auto raw = read_tsv(path, CorpusKind::kParallel);
  IngestedCorpus out;
  extend_vocabulary(out.vocab, raw);
  out.examples = to_dataset(raw, out.vocab);
  for (const auto& ex : raw) out.lines.push_back(ex.line);
  return out;
}

void write_tsv(const std::filesystem::path& path, const Dataset& data,
               const Vocabulary& vocab, const std::vector<double>* confidence) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write " + path.string());
  out.precision(17);
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << vocab.decode(data[i].source) << '\t' << vocab.decode(data[i].target);
    if (confidence) out << '\t' << (*confidence)[i];
    out << '\n';
  }
}

void write_unlabeled_tsv(const std::filesystem::path& path,
                         const std::vector<Sequence>& sources, const Vocabulary& vocab) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write " + path.string());
  for (const auto& s : sources) out << vocab.decode(s) << '\n';
}

}  // namespace noisyst
