// Command-line front end: run configs, compare metrics, generate the toy
// data set and preview input noise.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "noisyst/config.hpp"
#include "noisyst/corpus.hpp"
#include "noisyst/errors.hpp"
#include "noisyst/noise.hpp"
#include "noisyst/report.hpp"
#include "noisyst/runner.hpp"
#include "noisyst/toysum.hpp"

namespace {

using namespace noisyst;

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

std::size_t parse_threads(const std::string& text) {
  try {
    std::size_t used = 0;
    const long n = std::stol(text, &used);
    if (used == text.size() && n > 0) return static_cast<std::size_t>(n);
  } catch (const std::exception&) {
  }
  throw ConfigError("NOISYST_THREADS: expected a positive integer, got '" + text + "'");
}

int cmd_run(const std::string& config_path, const std::string& output_dir, std::size_t threads,
            bool quiet) {
  auto runs = expand_config(load_config(config_path));
  std::optional<std::string> dir = output_dir.empty() ? env("NOISYST_OUTPUT_DIR")
                                                      : std::optional<std::string>(output_dir);
  if (threads == 0) {
    if (auto t = env("NOISYST_THREADS")) threads = parse_threads(*t);
  }
  for (auto& cfg : runs) {
    if (dir) cfg.output_dir = *dir;
    if (threads > 0) cfg.plan.threads = threads;
  }
  for (const auto& cfg : runs) {
    const RunOutcome out = run_experiment(cfg, quiet ? nullptr : &std::cerr);
    std::cout << render_summary(out.records) << "artifacts: " << out.dir.string() << "\n\n";
  }
  return 0;
}

int cmd_compare(const std::vector<std::string>& paths, bool all_stages) {
  std::vector<std::vector<MetricsRecord>> runs;
  for (const auto& p : paths) runs.push_back(read_metrics_csv(p));
  std::cout << render_comparison(compare_runs(runs, !all_stages));
  return 0;
}

int cmd_gen_toy(std::uint64_t seed, const std::string& out_dir) {
  const toysum::ToySplit split = toysum::gen_toy_dataset(seed);
  const Vocabulary& vocab = toysum::toy_vocabulary();
  const std::filesystem::path dir(out_dir);
  write_tsv(dir / "train.tsv", toysum::to_dataset(split.train), vocab);
  write_tsv(dir / "valid.tsv", toysum::to_dataset(split.valid), vocab);
  write_tsv(dir / "test.tsv", toysum::to_dataset(split.test), vocab);
  write_unlabeled_tsv(dir / "unlabeled.tsv", toysum::to_sources(split.unlabeled), vocab);
  std::cout << "wrote " << split.train.size() << "/" << split.valid.size() << "/"
            << split.test.size() << "/" << split.unlabeled.size()
            << " train/valid/test/unlabeled examples to " << dir.string() << "\n";
  return 0;
}

int cmd_noise_preview(const std::string& corpus_path, const std::string& config_path,
                      std::size_t samples, std::uint64_t epoch) {
  const auto runs = expand_config(load_config(config_path));
  const NoiseSpec& spec = runs.front().plan.noise;

  std::ifstream in(corpus_path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + corpus_path);
  std::ostringstream text;
  text << in.rdbuf();
  const CorpusKind kind = text.str().find('\t') == std::string::npos ? CorpusKind::kUnlabeled
                                                                     : CorpusKind::kParallel;
  const auto raw = parse_tsv(text.str(), kind, corpus_path);
  Vocabulary vocab;
  extend_vocabulary(vocab, raw);
  const auto sources = to_sources(raw, vocab);
  const Perturber perturb = make_perturber(spec);
  for (std::size_t i = 0; i < std::min(samples, sources.size()); ++i) {
    const Sequence noisy = perturb(sources[i], noise_example_seed(epoch, i));
    std::cout << vocab.decode(sources[i]) << "\t=>\t" << vocab.decode(noisy) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Noisy self-training for sequence-to-sequence models"};
  app.require_subcommand(1);

  std::string config_path, output_dir;
  std::size_t threads = 0;
  bool quiet = false;
  auto* run = app.add_subcommand("run", "Run every configuration of a config file");
  run->add_option("config", config_path, "Config file")->required();
  run->add_option("-o,--output-dir", output_dir,
                  "Output root (default: run.output_dir or $NOISYST_OUTPUT_DIR)");
  run->add_option("-j,--threads", threads,
                  "Decoding threads (default: run.threads or $NOISYST_THREADS)");
  run->add_flag("-q,--quiet", quiet, "Suppress progress lines on stderr");

  std::vector<std::string> csvs;
  bool all_stages = false;
  auto* compare = app.add_subcommand("compare", "Tabulate metrics.csv files");
  compare->add_option("csv", csvs, "metrics.csv files")->required();
  compare->add_flag("--all-stages", all_stages, "Show every stage, not just the last one");

  std::uint64_t toy_seed = 1;
  std::string toy_out;
  auto* gen = app.add_subcommand("gen-toy", "Write the toy sum splits as TSV files");
  gen->add_option("--seed", toy_seed, "Split seed")->required();
  gen->add_option("--out", toy_out, "Output directory")->required();

  std::string corpus_path, noise_config;
  std::size_t samples = 10;
  std::uint64_t epoch = 0;
  auto* preview = app.add_subcommand("noise-preview", "Print perturbed corpus sources");
  preview->add_option("corpus", corpus_path, "TSV corpus")->required();
  preview->add_option("config", noise_config, "Config holding the [noise] section")->required();
  preview->add_option("-n,--samples", samples, "Number of lines to show");
  preview->add_option("--epoch", epoch, "Epoch used to derive the noise seeds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) return cmd_run(config_path, output_dir, threads, quiet);
    if (*compare) return cmd_compare(csvs, all_stages);
    if (*gen) return cmd_gen_toy(toy_seed, toy_out);
    if (*preview) return cmd_noise_preview(corpus_path, noise_config, samples, epoch);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
