#include "noisyst/runner.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "noisyst/checkpoint.hpp"
#include "noisyst/corpus.hpp"
#include "noisyst/errors.hpp"
#include "noisyst/parallel.hpp"
#include "noisyst/toysum.hpp"

namespace noisyst {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct TaskData {
  Vocabulary vocab;
  Dataset train, valid, test;
  std::vector<Sequence> unlabeled;
  std::vector<toysum::Point> toy_test;
  bool toy = false;
};

TaskData load_task(const RunConfig& cfg) {
  TaskData data;
  const TaskSpec& task = cfg.task;
  if (task.kind == TaskKind::kToy) {
    if (task.unlabeled_size > toysum::kUnlabeledSize) {
      throw ConfigError("task.unlabeled_size: at most " +
                        std::to_string(toysum::kUnlabeledSize) + " for the toy task");
    }
    const toysum::ToySplit split = toysum::gen_toy_dataset(task.toy_seed);
    data.toy = true;
    data.vocab = toysum::toy_vocabulary();
    data.train = toysum::to_dataset(split.train);
    data.valid = toysum::to_dataset(split.valid);
    data.test = toysum::to_dataset(split.test);
    data.toy_test = split.test;
    const std::vector<toysum::Point> pool(
        split.unlabeled.begin(),
        split.unlabeled.begin() + static_cast<std::ptrdiff_t>(task.unlabeled_size));
    data.unlabeled = toysum::to_sources(pool);
    return data;
  }

  const auto train = read_tsv(task.train, CorpusKind::kParallel);
  const auto valid = read_tsv(task.valid, CorpusKind::kParallel);
  std::vector<RawExample> test, unlabeled;
  if (!task.test.empty()) test = read_tsv(task.test, CorpusKind::kParallel);
  if (!task.unlabeled.empty()) unlabeled = read_tsv(task.unlabeled, CorpusKind::kUnlabeled);
  extend_vocabulary(data.vocab, train);
  extend_vocabulary(data.vocab, valid);
  extend_vocabulary(data.vocab, test);
  extend_vocabulary(data.vocab, unlabeled);
  data.train = to_dataset(train, data.vocab);
  data.valid = to_dataset(valid, data.vocab);
  data.test = to_dataset(test, data.vocab);
  data.unlabeled = to_sources(unlabeled, data.vocab);
  if (task.unlabeled_size > 0 && task.unlabeled_size < data.unlabeled.size()) {
    data.unlabeled.resize(task.unlabeled_size);
  }
  return data;
}

struct StageMetrics {
  double test_error = kNaN;
  double smoothness = kNaN;
  double symmetry = kNaN;
  double failure_rate = kNaN;
  std::optional<toysum::GridPrediction> grid;
};

StageMetrics evaluate_stage(const ModelParams& params, const TaskData& data,
                            std::size_t threads) {
  StageMetrics m;
  if (data.toy) {
    m.grid = toysum::predict_grid(params, threads);
    m.test_error = toysum::mean_test_error(*m.grid, data.toy_test);
    m.smoothness = toysum::smoothness(*m.grid);
    m.symmetry = toysum::symmetry(*m.grid);
    m.failure_rate = toysum::failure_rate(*m.grid);
    return m;
  }
  if (data.test.empty()) return m;
  // Exact-match error rate and the share of decodes that never emit EOS.
  std::vector<int> wrong(data.test.size()), unfinished(data.test.size());
  DecodeSpec spec;
  spec.mode = DecodeMode::kGreedy;
  spec.max_len = params.config.max_decode_len;
  parallel_for(data.test.size(), threads, [&](std::size_t i) {
    const ScoredHypothesis h = decode(params, data.test[i].source, spec);
    unfinished[i] = h.finished ? 0 : 1;
    wrong[i] = (!h.finished || h.sequence != data.test[i].target) ? 1 : 0;
  });
  double w = 0.0, u = 0.0;
  for (std::size_t i = 0; i < wrong.size(); ++i) {
    w += wrong[i];
    u += unfinished[i];
  }
  m.test_error = w / static_cast<double>(wrong.size());
  m.failure_rate = u / static_cast<double>(wrong.size());
  return m;
}

double final_train_loss(const TrainResult& training) {
  for (auto it = training.history.rbegin(); it != training.history.rend(); ++it) {
    if (it->update == training.best_update) return it->train_loss;
  }
  return kNaN;
}

std::string seconds(double s) {
  std::ostringstream out;
  out.precision(3);
  out << std::fixed << s << "s";
  return out.str();
}

}  // namespace

RunOutcome run_experiment(const RunConfig& config, std::ostream* progress) {
  using Clock = std::chrono::steady_clock;
  const auto started = Clock::now();
  RunConfig cfg = config;
  const TaskData data = load_task(cfg);
  ExperimentPlan& plan = cfg.plan;
  plan.model.vocab_size = data.vocab.size();
  plan.validate();

  const std::string hash = config.config_hash();
  RunOutcome outcome;
  outcome.dir = cfg.run_dir();
  std::filesystem::create_directories(outcome.dir);
  write_text(outcome.dir / "config.txt", cfg.canonical_text());

  std::ostringstream log;
  auto note = [&](const std::string& line) {
    log << line << '\n';
    if (progress) *progress << line << std::endl;
  };
  note("run " + cfg.run_name + " seed " + std::to_string(plan.master_seed) + " config " + hash);

  auto stage_time = Clock::now();
  auto record_stage = [&](std::size_t iteration, Stage stage, const ModelParams& params,
                          const TrainResult& training, std::size_t pseudo_examples) {
    const StageMetrics m = evaluate_stage(params, data, plan.threads);
    MetricsRecord r;
    r.run = cfg.run_name;
    r.iteration = iteration;
    r.stage = stage_name(stage);
    r.train_loss = final_train_loss(training);
    r.valid_loss = training.best_valid_loss;
    r.test_error = m.test_error;
    r.smoothness = m.smoothness;
    r.symmetry = m.symmetry;
    r.failure_rate = m.failure_rate;
    r.pseudo_examples = pseudo_examples;
    r.seed = plan.master_seed;
    r.config_hash = hash;
    outcome.records.push_back(r);

    const std::filesystem::path stage_dir = outcome.dir / std::to_string(iteration);
    const std::string tag = stage == Stage::kBaseline      ? "baseline"
                            : stage == Stage::kPseudoTrain ? "pt"
                                                           : "ft";
    if (cfg.write_checkpoints) {
      std::filesystem::create_directories(stage_dir);
      save_checkpoint(stage_dir / (tag + ".ckpt"),
                      {params, plan.master_seed, cfg.run_name + " " + tag + " " + hash});
    }
    if (m.grid) {
      write_text(stage_dir / (tag + "_heatmap.csv"), format_heatmap_csv(*m.grid));
      write_text(stage_dir / (tag + "_heatmap.pgm"),
                 format_heatmap_pgm(toysum::error_heatmap(*m.grid)));
    }
    const auto now = Clock::now();
    std::ostringstream line;
    line << "iter " << iteration << " " << r.stage << " best_update " << training.best_update
         << " valid_loss " << r.valid_loss << " test_error " << r.test_error << " wall "
         << seconds(std::chrono::duration<double>(now - stage_time).count());
    note(line.str());
    stage_time = now;
  };

  try {
    TrainResult base;
    try {
      base = train_baseline(plan, data.train, data.valid);
    } catch (const std::exception& e) {
      throw StageError(std::string("baseline: ") + e.what());
    }
    record_stage(0, Stage::kBaseline, base.best, base, 0);

    if (cfg.mode == RunMode::kSelfTrain) {
      self_train_loop(plan, base.best, data.train, data.unlabeled, data.valid,
                      [&](const StageOutcome& s) {
                        if (s.stage == Stage::kPseudoTrain) {
                          write_tsv(outcome.dir / std::to_string(s.iteration) / "pseudo.tsv",
                                    s.pseudo.examples, data.vocab, &s.pseudo.confidence);
                        }
                        record_stage(s.iteration, s.stage, s.params, s.training,
                                     s.pseudo_examples);
                      });
    }
  } catch (...) {
    write_text(outcome.dir / "run.log", log.str());
    throw;
  }

  write_metrics_csv(outcome.dir / "metrics.csv", outcome.records);
  write_text(outcome.dir / "summary.txt", render_summary(outcome.records));
  note("total wall " +
       seconds(std::chrono::duration<double>(Clock::now() - started).count()));
  write_text(outcome.dir / "run.log", log.str());
  return outcome;
}

}  // namespace noisyst
