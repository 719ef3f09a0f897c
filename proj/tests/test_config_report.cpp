#include <gtest/gtest.h>

#include <cmath>

#include "noisyst/config.hpp"
#include "noisyst/errors.hpp"
#include "noisyst/report.hpp"

namespace noisyst {
namespace {

std::vector<RunConfig> expand(const std::string& text) {
  return expand_config(parse_config_text(text, "test.conf"));
}

TEST(Config, DefaultsFillEverythingButRunName) {
  const auto runs = expand("run_name = x\n");
  ASSERT_EQ(runs.size(), 1u);
  const RunConfig& c = runs[0];
  EXPECT_EQ(c.mode, RunMode::kSelfTrain);
  EXPECT_EQ(c.plan.model.hidden_dim, 32u);
  EXPECT_EQ(c.plan.noise.blank_prob, 0.2);
  EXPECT_EQ(c.plan.decode.beam_size, 5u);
  EXPECT_EQ(c.task.toy_seed, c.plan.master_seed);
  EXPECT_EQ(c.values.size(), config_defaults().size());
  EXPECT_THROW(expand("[run]\nmaster_seed = 3\n"), ConfigError);
}

TEST(Config, SectionsCommentsAndValues) {
  const auto c = expand(
      "run_name = demo  # trailing comment\n"
      "[noise]\nkind = synthetic\nblank_prob = 0.5\n"
      "[pt]\nmax_updates = 123\ninverse_sqrt = off\n"
      "[selftrain]\nselection = schedule\nselection_counts = 5 6 7\n")[0];
  EXPECT_EQ(c.run_name, "demo");
  EXPECT_EQ(c.plan.noise.kind, NoiseKind::kSynthetic);
  EXPECT_EQ(c.plan.noise.blank_prob, 0.5);
  EXPECT_EQ(c.plan.pt_schedule.max_updates, 123u);
  EXPECT_FALSE(c.plan.pt_schedule.lr.inverse_sqrt);
  EXPECT_EQ(c.plan.selection.counts, (std::vector<std::size_t>{5, 6, 7}));
}

TEST(Config, ErrorsNameTheLine) {
  try {
    expand("run_name = x\n\n[model]\nhiden_dim = 3\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("test.conf:4"), std::string::npos) << e.what();
  }
  EXPECT_THROW(expand("run_name = x\nrun_name = y\n"), ConfigError);
  EXPECT_THROW(expand("run_name = x\n[noise\n"), ConfigError);
  EXPECT_THROW(expand("run_name = x\n[noise]\nblank_prob = lots\n"), ConfigError);
  EXPECT_THROW(expand("run_name = x\n[noise]\nblank_prob = 1.5\n"), ConfigError);
  EXPECT_THROW(expand("run_name = x\n[selftrain]\npt_target = real\n"), ConfigError);
  EXPECT_THROW(expand("run_name = x\n[decode]\nmode = nucleus\n"), ConfigError);
}

TEST(Config, SweepsExpandToCartesianProduct) {
  const auto runs = expand(
      "run_name = sweep\n[run]\nmaster_seed = 1, 2\n[noise]\nblank_prob = 0.0, 0.2, 0.9\n");
  ASSERT_EQ(runs.size(), 6u);
  EXPECT_EQ(runs[0].run_name, "sweep@noise.blank_prob=0.0");
  EXPECT_EQ(runs[0].plan.master_seed, 1u);
  EXPECT_EQ(runs[1].plan.noise.blank_prob, 0.2);
  EXPECT_EQ(runs[3].plan.master_seed, 2u);
  EXPECT_EQ(runs[3].run_name, runs[0].run_name);
  EXPECT_EQ(runs[5].plan.noise.blank_prob, 0.9);
  EXPECT_EQ(runs[4].run_dir(), std::filesystem::path("runs") / "sweep@noise.blank_prob=0.2" / "seed2");
}

TEST(Config, HashTracksResultAffectingKeysOnly) {
  const auto a = expand("run_name = x\n")[0];
  const auto b = expand("run_name = x\n[run]\noutput_dir = elsewhere\nthreads = 4\n")[0];
  const auto c = expand("run_name = x\n[ft]\npeak_lr = 1e-4\n")[0];
  EXPECT_EQ(a.config_hash().size(), 16u);
  EXPECT_EQ(a.config_hash(), b.config_hash());
  EXPECT_NE(a.config_hash(), c.config_hash());
}

MetricsRecord record(const std::string& run, std::uint64_t seed, double error) {
  MetricsRecord r;
  r.run = run;
  r.iteration = 1;
  r.stage = "FT";
  r.train_loss = 0.5;
  r.valid_loss = 1.25;
  r.test_error = error;
  r.smoothness = 2.0;
  r.symmetry = std::nan("");
  r.failure_rate = 0.0;
  r.pseudo_examples = 3990;
  r.seed = seed;
  r.config_hash = "0123456789abcdef";
  return r;
}

TEST(Report, MetricsCsvRoundTrip) {
  const std::vector<MetricsRecord> records = {record("a", 1, 7.25), record("a", 2, 8.5)};
  const std::string text = format_metrics_csv(records);
  EXPECT_EQ(text.substr(0, text.find('\n')), metrics_csv_header());
  const auto back = parse_metrics_csv(text);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].test_error, 8.5);
  EXPECT_TRUE(std::isnan(back[0].symmetry));
  EXPECT_EQ(back[0].pseudo_examples, 3990u);
  EXPECT_EQ(format_metrics_csv(back), text);
}

TEST(Report, SchemaMismatchIsAUsageError) {
  EXPECT_THROW(parse_metrics_csv("run,stage\nx,FT\n"), UsageError);
  EXPECT_THROW(parse_metrics_csv(metrics_csv_header() + "\na,1,FT\n"), UsageError);
}

TEST(Report, MedianIgnoresNaN) {
  EXPECT_EQ(median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_EQ(median({4.0, 1.0}), 2.5);
  EXPECT_EQ(median({std::nan(""), 5.0}), 5.0);
  EXPECT_TRUE(std::isnan(median({})));
}

TEST(Report, CompareTakesPerSeedMedians) {
  const std::vector<std::vector<MetricsRecord>> runs = {
      {record("base", 1, 9.0)}, {record("base", 2, 7.0)}, {record("base", 3, 8.0)},
      {record("noisy", 1, 5.0)}};
  const auto rows = compare_runs(runs);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].run, "base");
  EXPECT_EQ(rows[0].seeds, 3u);
  EXPECT_EQ(rows[0].test_error, 8.0);
  EXPECT_EQ(rows[1].test_error, 5.0);
  const std::string table = render_comparison(rows);
  EXPECT_NE(table.find("noisy"), std::string::npos);
  EXPECT_NE(table.find("8.000"), std::string::npos);
}

TEST(Report, CompareSingleRunIsIdentity) {
  MetricsRecord base = record("solo", 1, 9.0);
  base.iteration = 0;
  base.stage = "baseline";
  const std::vector<std::vector<MetricsRecord>> runs = {{base, record("solo", 1, 6.0)}};
  const auto last = compare_runs(runs);
  ASSERT_EQ(last.size(), 1u);
  EXPECT_EQ(last[0].test_error, 6.0);
  const auto all = compare_runs(runs, false);
  ASSERT_EQ(all.size(), 2u);
  EXPECT_EQ(all[0].stage, "baseline");
  EXPECT_EQ(all[0].test_error, 9.0);
}

TEST(Report, GraymapMapsErrorToDarkness) {
  std::vector<double> heat(10000, 0.0);
  heat[1] = 50.0;
  heat[2] = 100.0;
  heat[3] = 150.0;
  const std::string pgm = format_heatmap_pgm(heat);
  const std::string header = "P5\n100 100\n255\n";
  ASSERT_EQ(pgm.size(), header.size() + 10000);
  EXPECT_EQ(pgm.substr(0, header.size()), header);
  const auto px = [&](std::size_t i) { return static_cast<unsigned char>(pgm[header.size() + i]); };
  EXPECT_EQ(px(0), 255);
  EXPECT_EQ(px(1), 128);
  EXPECT_EQ(px(2), 0);
  EXPECT_EQ(px(3), 0);
  EXPECT_THROW(format_heatmap_pgm({1.0}), UsageError);
}

TEST(Report, HeatmapCsvListsEveryPoint) {
  const auto grid = toysum::grid_from([](int a, int b) -> std::optional<int> {
    if (a == 0 && b == 2) return std::nullopt;
    return a + b + (a == 0 && b == 1 ? 4 : 0);
  });
  const std::string csv = format_heatmap_csv(grid);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 10001);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "x1,x2,predicted,error,failed");
  EXPECT_NE(csv.find("\n0,1,5,4.000000,0\n0,2,,100.000000,1\n"), std::string::npos);
}

}  // namespace
}  // namespace noisyst
