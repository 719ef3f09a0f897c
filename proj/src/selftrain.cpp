#include "noisyst/selftrain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "noisyst/errors.hpp"
#include "noisyst/parallel.hpp"
#include "noisyst/rng.hpp"

namespace noisyst {

const char* stage_name(Stage stage) {
  switch (stage) {
    case Stage::kBaseline:
      return "baseline";
    case Stage::kPseudoTrain:
      return "PT";
    case Stage::kFineTune:
      return "FT";
  }
  return "?";
}

void ExperimentPlan::validate() const {
  model.validate();
  decode.validate();
  noise.validate();
  if (iterations < 1) throw UsageError("iterations must be >= 1");
  if (regime == Regime::kJoint && upsample_ratio < 1.0) {
    throw UsageError("upsample_ratio must be >= 1 in the joint regime");
  }
  if (pt_target == PtTarget::kReal && pt_data != PtData::kParallel) {
    throw UsageError("pt_target=real requires pt_data=parallel");
  }
  if (selection.kind == Selection::Kind::kTopFraction &&
      !(selection.fraction > 0.0 && selection.fraction <= 1.0)) {
    throw UsageError("top_fraction must lie in (0, 1]");
  }
  if (selection.kind == Selection::Kind::kSchedule && selection.counts.empty()) {
    throw UsageError("selection schedule needs at least one count");
  }
}

std::uint64_t stage_seed(std::uint64_t master, std::size_t iteration, Stage stage) {
  return mix_seed(mix_seed(master, iteration), static_cast<std::uint64_t>(stage) + 1);
}

PseudoCorpus pseudo_label(const ModelParams& teacher,
                          std::span<const Sequence> unlabeled,
                          const DecodeSpec& decode_spec, std::size_t threads,
                          bool normalize_confidence) {
  decode_spec.validate();
  std::vector<ScoredHypothesis> hyps(unlabeled.size());
  parallel_for(unlabeled.size(), threads, [&](std::size_t i) {
    DecodeSpec spec = decode_spec;
    spec.seed = decode_spec.seed + i;
    hyps[i] = decode(teacher, unlabeled[i], spec);
  });

  PseudoCorpus corpus;
  corpus.teacher_fingerprint = teacher.fingerprint();
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    const ScoredHypothesis& h = hyps[i];
    if (!h.finished || h.sequence.empty() || !std::isfinite(h.logprob)) {
      ++corpus.dropped;
      continue;
    }
    const double conf =
        normalize_confidence ? h.logprob / static_cast<double>(h.sequence.size() + 1) : h.logprob;
    corpus.examples.push_back({unlabeled[i], h.sequence});
    corpus.confidence.push_back(conf);
    corpus.source_index.push_back(i);
  }
  return corpus;
}

PseudoCorpus select_subset(const PseudoCorpus& corpus, const Selection& selection,
                           std::size_t iteration) {
  std::size_t keep = corpus.size();
  switch (selection.kind) {
    case Selection::Kind::kAll:
      break;
    case Selection::Kind::kTopFraction:
      if (!(selection.fraction > 0.0 && selection.fraction <= 1.0)) {
        throw UsageError("top_fraction must lie in (0, 1]");
      }
      keep = static_cast<std::size_t>(
          std::ceil(selection.fraction * static_cast<double>(corpus.size()) - 1e-9));
      break;
    case Selection::Kind::kSchedule: {
      if (selection.counts.empty() || iteration < 1) {
        throw UsageError("selection schedule needs counts and a 1-based iteration");
      }
      const std::size_t slot = std::min(iteration, selection.counts.size()) - 1;
      keep = std::min(selection.counts[slot], corpus.size());
      break;
    }
  }
  if (keep == 0) throw UsageError("subset selection produced an empty corpus");
  if (keep == corpus.size()) return corpus;

  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return corpus.confidence[a] > corpus.confidence[b];
  });
  order.resize(keep);
  std::sort(order.begin(), order.end());

  PseudoCorpus out;
  out.dropped = corpus.dropped;
  out.teacher_fingerprint = corpus.teacher_fingerprint;
  for (std::size_t i : order) {
    out.examples.push_back(corpus.examples[i]);
    out.confidence.push_back(corpus.confidence[i]);
    out.source_index.push_back(corpus.source_index[i]);
  }
  return out;
}

TrainResult pseudo_train(const ExperimentPlan& plan, const ModelParams& init,
                         const PseudoCorpus& corpus, const Dataset& parallel,
                         const Dataset& valid, std::uint64_t seed) {
  if (corpus.examples.empty()) throw UsageError("empty pseudo corpus");
  Dataset data = corpus.examples;
  const std::size_t pseudo_count = data.size();
  if (plan.regime == Regime::kJoint) {
    const auto copies = static_cast<std::size_t>(std::llround(plan.upsample_ratio));
    for (std::size_t c = 0; c < copies; ++c) data.insert(data.end(), parallel.begin(), parallel.end());
  }

  NoiseSpec noise = plan.noise;
  noise.seed_stream = mix_seed(noise.seed_stream, seed);
  SourceTransform transform;
  if (noise.kind != NoiseKind::kNone) {
    transform = [perturb = make_perturber(noise), pseudo_count](
                    const Sequence& src, std::size_t epoch, std::size_t index) {
      return index < pseudo_count ? perturb(src, noise_example_seed(epoch, index)) : src;
    };
  }

  TrainSchedule schedule = plan.pt_schedule;
  schedule.seed = seed;
  schedule.dropout = plan.pt_dropout;
  schedule.select_initial = false;
  const ModelParams start = plan.init_mode == InitMode::kScratch
                                ? init_params(plan.model, mix_seed(seed, 0x5eed))
                                : init;
  return train(start, data, valid, schedule, transform);
}

TrainResult fine_tune(const ExperimentPlan& plan, const ModelParams& pt_params,
                      const Dataset& parallel, const Dataset& valid,
                      std::uint64_t seed) {
  TrainSchedule schedule = plan.ft_schedule;
  schedule.seed = seed;
  schedule.dropout = true;
  return train(pt_params, parallel, valid, schedule);
}

TrainResult train_baseline(const ExperimentPlan& plan, const Dataset& labeled,
                           const Dataset& valid) {
  const std::uint64_t seed = stage_seed(plan.master_seed, 0, Stage::kBaseline);
  TrainSchedule schedule = plan.baseline_schedule;
  schedule.seed = seed;
  return train(init_params(plan.model, mix_seed(seed, 0x5eed)), labeled, valid, schedule);
}

LoopResult self_train_loop(const ExperimentPlan& plan, const ModelParams& baseline,
                           const Dataset& labeled, std::span<const Sequence> unlabeled,
                           const Dataset& valid, const StageObserver& observer) {
  plan.validate();
  LoopResult result;
  result.final_params = baseline;
  if (plan.pt_data == PtData::kUnlabeled && unlabeled.empty()) return result;

  std::vector<Sequence> labeled_sources;
  for (const auto& ex : labeled) labeled_sources.push_back(ex.source);

  for (std::size_t it = 1; it <= plan.iterations; ++it) {
    // Frozen snapshot; training below works on copies.
    const ModelParams teacher = result.final_params;
    try {
      PseudoCorpus corpus;
      DecodeSpec spec = plan.decode;
      spec.seed = mix_seed(stage_seed(plan.master_seed, it, Stage::kPseudoTrain), spec.seed);
      if (plan.pt_data == PtData::kUnlabeled) {
        corpus = select_subset(
            pseudo_label(teacher, unlabeled, spec, plan.threads, plan.normalize_confidence),
            plan.selection, it);
      } else if (plan.pt_target == PtTarget::kFake) {
        corpus = pseudo_label(teacher, labeled_sources, spec, plan.threads,
                              plan.normalize_confidence);
      } else {
        corpus.examples = labeled;
        corpus.confidence.assign(labeled.size(), 0.0);
        corpus.source_index.resize(labeled.size());
        std::iota(corpus.source_index.begin(), corpus.source_index.end(), std::size_t{0});
        corpus.teacher_fingerprint = teacher.fingerprint();
      }

      StageOutcome pt;
      pt.iteration = it;
      pt.stage = Stage::kPseudoTrain;
      pt.training = pseudo_train(plan, teacher, corpus, labeled, valid,
                                 stage_seed(plan.master_seed, it, Stage::kPseudoTrain));
      pt.params = pt.training.best;
      pt.pseudo_examples = corpus.size();
      pt.dropped = corpus.dropped;
      pt.pseudo = std::move(corpus);
      if (observer) observer(pt);
      result.final_params = pt.params;
      result.stages.push_back(std::move(pt));

      if (plan.regime == Regime::kSeparate) {
        StageOutcome ft;
        ft.iteration = it;
        ft.stage = Stage::kFineTune;
        ft.training = fine_tune(plan, result.final_params, labeled, valid,
                                stage_seed(plan.master_seed, it, Stage::kFineTune));
        ft.params = ft.training.best;
        if (observer) observer(ft);
        result.final_params = ft.params;
        result.stages.push_back(std::move(ft));
      }
    } catch (const std::exception& e) {
      throw StageError("self-training iteration " + std::to_string(it) + ": " + e.what());
    }
  }
  return result;
}

}  // namespace noisyst
