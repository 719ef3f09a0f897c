#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "noisyst/decoding.hpp"
#include "noisyst/model.hpp"
#include "noisyst/noise.hpp"
#include "noisyst/trainer.hpp"

namespace noisyst {

enum class InitMode { kScratch, kBaseline };
enum class Regime { kSeparate, kJoint };
enum class PtTarget { kFake, kReal };
enum class PtData { kUnlabeled, kParallel };
enum class Stage { kBaseline, kPseudoTrain, kFineTune };

const char* stage_name(Stage stage);

struct Selection {
  enum class Kind { kAll, kTopFraction, kSchedule };
  Kind kind = Kind::kAll;
  double fraction = 1.0;
  // Per-iteration example counts; the last entry repeats for later iterations.
  std::vector<std::size_t> counts;

  bool operator==(const Selection&) const = default;
};

struct ExperimentPlan {
  ModelConfig model;
  std::size_t iterations = 1;
  InitMode init_mode = InitMode::kBaseline;
  DecodeSpec decode;
  bool pt_dropout = true;
  NoiseSpec noise;
  Selection selection;
  Regime regime = Regime::kSeparate;
  double upsample_ratio = 1.0;
  PtTarget pt_target = PtTarget::kFake;
  PtData pt_data = PtData::kUnlabeled;
  // Confidence = logprob / length when set, raw logprob otherwise.
  bool normalize_confidence = true;
  TrainSchedule baseline_schedule;
  TrainSchedule pt_schedule;
  TrainSchedule ft_schedule;
  std::uint64_t master_seed = 1;
  std::size_t threads = 1;

  void validate() const;
};

struct PseudoCorpus {
  Dataset examples;
  std::vector<double> confidence;
  // Position of each example's source in the unlabeled input.
  std::vector<std::size_t> source_index;
  std::size_t dropped = 0;
  std::uint64_t teacher_fingerprint = 0;

  std::size_t size() const { return examples.size(); }
};

// Decodes every source with the frozen teacher. Example i decodes with seed
// decode.seed + i, so sharding over threads does not change the output.
// Empty or unfinished decodes are dropped and counted.
PseudoCorpus pseudo_label(const ModelParams& teacher,
                          std::span<const Sequence> unlabeled,
                          const DecodeSpec& decode, std::size_t threads = 1,
                          bool normalize_confidence = true);

// `iteration` is 1-based and only used by Kind::kSchedule.
PseudoCorpus select_subset(const PseudoCorpus& corpus, const Selection& selection,
                           std::size_t iteration = 1);

// Pseudo-training on `corpus` (plus upsampled `parallel` data in the joint
// regime). Sources of pseudo examples are perturbed by plan.noise, redrawn
// every epoch. `init` is used when plan.init_mode is kBaseline.
TrainResult pseudo_train(const ExperimentPlan& plan, const ModelParams& init,
                         const PseudoCorpus& corpus, const Dataset& parallel,
                         const Dataset& valid, std::uint64_t seed);

// Continues training on real parallel data, always with dropout.
TrainResult fine_tune(const ExperimentPlan& plan, const ModelParams& pt_params,
                      const Dataset& parallel, const Dataset& valid,
                      std::uint64_t seed);

struct StageOutcome {
  std::size_t iteration = 0;
  Stage stage = Stage::kBaseline;
  ModelParams params;
  TrainResult training;
  std::size_t pseudo_examples = 0;
  std::size_t dropped = 0;
  // Training corpus of a pseudo-training stage; empty otherwise.
  PseudoCorpus pseudo;
};

// Called after every stage; lets callers compute metrics and write
// artifacts without the loop knowing about the task.
using StageObserver = std::function<void(const StageOutcome&)>;

struct LoopResult {
  ModelParams final_params;
  std::vector<StageOutcome> stages;
};

TrainResult train_baseline(const ExperimentPlan& plan, const Dataset& labeled,
                           const Dataset& valid);

// Iterates pseudo_label -> select_subset -> pseudo_train -> fine_tune
// starting from `baseline`. The teacher of iteration k+1 is the final model
// of iteration k. An empty unlabeled set returns the baseline unchanged.
LoopResult self_train_loop(const ExperimentPlan& plan, const ModelParams& baseline,
                           const Dataset& labeled, std::span<const Sequence> unlabeled,
                           const Dataset& valid, const StageObserver& observer = nullptr);

// Seeds derived from the master seed for each stage.
std::uint64_t stage_seed(std::uint64_t master, std::size_t iteration, Stage stage);

}  // namespace noisyst
