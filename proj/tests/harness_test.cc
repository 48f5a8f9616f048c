// Copyright 2026 The otcost Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "otcost/harness.h"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.h"

namespace otcost::harness {
namespace {

namespace fs = std::filesystem;

fs::path FreshDir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("otcost_harness_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig Tiny(Scenario s = Scenario::kOverlapSweep) {
  // Scenario data and probe settings with a short training schedule.
  ExperimentConfig cfg = ExperimentConfig::Defaults(s);
  cfg.levels = {0.0, 0.5, 1.0};
  cfg.seeds = {0, 1, 2};
  cfg.rounds = 3;
  return cfg;
}

TEST(ClassifyCollaboration, BandsAndBoundaries) {
  EXPECT_EQ(classify_collaboration(0.08), Collaboration::kBeneficial);
  EXPECT_EQ(classify_collaboration(0.2), Collaboration::kBeneficial);
  EXPECT_EQ(classify_collaboration(0.25), Collaboration::kUncertain);
  EXPECT_EQ(classify_collaboration(std::nextafter(0.3, 0.0)), Collaboration::kUncertain);
  EXPECT_EQ(classify_collaboration(0.3), Collaboration::kDetrimental);
  EXPECT_EQ(classify_collaboration(1.0), Collaboration::kDetrimental);
  EXPECT_THROW(classify_collaboration(-0.01), Error);
  EXPECT_THROW(classify_collaboration(1.01), Error);
  EXPECT_THROW(classify_collaboration(std::nan("")), Error);
}

TEST(ClassifyCollaboration, IsMonotone) {
  int last = 0;
  for (int i = 0; i <= 1000; ++i) {
    const int band = static_cast<int>(classify_collaboration(i / 1000.0));
    EXPECT_GE(band, last);
    last = band;
  }
}

TEST(Spearman, MatchesTheReferenceWithTies) {
  Rng rng = MakeRng(3);
  std::uniform_int_distribution<int> v(0, 6);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> x, y;
    for (int i = 0; i < 3 + t % 15; ++i) {
      x.push_back(v(rng));
      y.push_back(v(rng) + 0.5 * x.back());
    }
    const double ref = oracle::SpearmanReference(x, y);
    const double got = spearman(x, y);
    if (std::isnan(ref)) {
      EXPECT_TRUE(std::isnan(got));
    } else {
      EXPECT_NEAR(got, ref, 1e-12);
    }
  }
  EXPECT_DOUBLE_EQ(spearman({1, 2, 3}, {10, 20, 30}), 1.0);
  EXPECT_DOUBLE_EQ(spearman({1, 2, 3}, {3, 2, 1}), -1.0);
  EXPECT_TRUE(std::isnan(spearman({1, 1, 1}, {1, 2, 3})));
  EXPECT_TRUE(std::isnan(spearman({1}, {2})));
}

TEST(BestMu, LargestValueAtTheTopAccuracy) {
  EXPECT_EQ(best_mu({0.1, 1.0, 5.0}, {0.8, 0.9, 0.9}), 5.0);
  EXPECT_EQ(best_mu({0.1, 1.0, 5.0}, {0.95, 0.9, 0.9}), 0.1);
  EXPECT_THROW(best_mu({0.1}, {0.1, 0.2}), Error);
}

TEST(MuGrid, LogSpacedOverTheSearchRange) {
  const auto grid = DefaultMuGrid();
  ASSERT_EQ(grid.size(), 8u);
  EXPECT_NEAR(grid.front(), 1e-6, 1e-18);
  EXPECT_NEAR(grid.back(), 5.0, 1e-12);
  for (std::size_t i = 2; i < grid.size(); ++i) {
    EXPECT_NEAR(std::log(grid[i] / grid[i - 1]), std::log(grid[1] / grid[0]), 1e-9);
  }
}

TEST(Aggregates, RecomputedFromRows) {
  std::vector<RunRow> rows;
  const double s[] = {0.05, 0.1, 0.25, 0.35, 0.5};
  const double imp[] = {3.0, 1.0, -1.0, -4.0, -8.0};
  for (int i = 0; i < 5; ++i) {
    RunRow r;
    r.scenario = "overlap_sweep";
    r.seed = static_cast<uint64_t>(i);
    r.level = i * 0.25;
    r.s_tilde = s[i];
    r.improvement_pct = imp[i];
    r.terminal_divergence = s[i] * 2;
    r.wasserstein = std::nan("");
    r.best_mu = std::nan("");
    rows.push_back(r);
  }
  RunRow bad;
  bad.error = "boom";
  bad.level = 9.0;
  rows.push_back(bad);
  const Aggregates a = compute_aggregates(rows, {});
  EXPECT_DOUBLE_EQ(a.spearman_improvement, -1.0);
  EXPECT_DOUBLE_EQ(a.spearman_divergence, 1.0);
  EXPECT_EQ(a.failed_runs, 1);
  EXPECT_EQ(a.confusion[0][0], 2);
  EXPECT_EQ(a.confusion[1][1], 1);
  EXPECT_EQ(a.confusion[2][1], 2);
  EXPECT_EQ(a.levels.size(), 5u);
}

TEST(ExperimentConfig, JsonRoundTripAndUnknownKeys) {
  const ExperimentConfig cfg = Tiny(Scenario::kFedproxMuSweep);
  const ExperimentConfig back = ExperimentConfig::from_json(cfg.to_json());
  EXPECT_EQ(back.to_json(), cfg.to_json());
  nlohmann::json j = cfg.to_json();
  j["learning_rte"] = 0.1;
  EXPECT_THROW(ExperimentConfig::from_json(j), Error);
  EXPECT_THROW(ExperimentConfig::from_json({{"scenario", "nope"}}), Error);
  const ExperimentConfig minimal = ExperimentConfig::from_json({{"scenario", "label_skew_sweep"}});
  EXPECT_EQ(minimal.levels, ExperimentConfig::Defaults(Scenario::kLabelSkewSweep).levels);
}

TEST(ExperimentConfig, ValidationCatchesIncompleteConfigs) {
  ExperimentConfig cfg = Tiny();
  cfg.seeds.clear();
  EXPECT_THROW(cfg.validate(), Error);
  cfg = Tiny();
  cfg.levels = {1.5};
  EXPECT_THROW(cfg.validate(), Error);
  cfg = Tiny(Scenario::kFedproxMuSweep);
  cfg.mu_grid.clear();
  EXPECT_THROW(cfg.validate(), Error);
  cfg = Tiny(Scenario::kSampleSizeStudy);
  cfg.data.samples_per_client = 400;
  EXPECT_THROW(cfg.validate(), Error);  // 100 samples per class is too few
  for (Scenario s : {Scenario::kOverlapSweep, Scenario::kFeatureSkewSweep,
                     Scenario::kLabelSkewSweep, Scenario::kConceptShiftSweep,
                     Scenario::kSampleSizeStudy, Scenario::kWeightDivergenceStudy,
                     Scenario::kFedproxMuSweep, Scenario::kWassersteinComparison}) {
    EXPECT_NO_THROW(ExperimentConfig::Defaults(s).validate()) << ScenarioName(s);
    EXPECT_EQ(ParseScenario(ScenarioName(s)), s);
  }
}

TEST(LoadConfig, ReportsMissingAndMalformedFiles) {
  const fs::path dir = FreshDir("load");
  fs::create_directories(dir);
  EXPECT_THROW(load_config(dir / "missing.json"), Error);
  std::ofstream(dir / "bad.json") << "{ not json";
  try {
    load_config(dir / "bad.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidArgument);
  }
  fs::remove_all(dir);
}

class TinyExperiment : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { result_ = new ExperimentResult(run_experiment(Tiny())); }
  static void TearDownTestSuite() { delete result_; }
  static ExperimentResult* result_;
};

ExperimentResult* TinyExperiment::result_ = nullptr;

TEST_F(TinyExperiment, OneRowPerSeedAndLevel) {
  ASSERT_EQ(result_->rows.size(), 9u);
  for (const RunRow& r : result_->rows) {
    EXPECT_FALSE(r.failed()) << r.error;
    EXPECT_GE(r.s_tilde, 0.0);
    EXPECT_LE(r.s_tilde, 1.0);
    EXPECT_GT(r.local_accuracy, 0.0);
    EXPECT_GT(r.fedavg_accuracy, 0.0);
    EXPECT_NEAR(r.improvement_pct,
                100.0 * (r.fedavg_accuracy - r.local_accuracy) / r.local_accuracy, 1e-12);
  }
}

TEST_F(TinyExperiment, IdenticalMixtureRowsLookBeneficial) {
  for (const RunRow& r : result_->rows) {
    if (r.level == 1.0) {
      EXPECT_LE(r.s_tilde, 0.1) << "seed " << r.seed;
    }
  }
}

TEST_F(TinyExperiment, Reproducible) {
  EXPECT_TRUE(run_experiment(Tiny()) == *result_);
}

TEST_F(TinyExperiment, AggregatesAreRecomputable) {
  const Aggregates a = compute_aggregates(result_->rows, result_->mu_grid);
  EXPECT_EQ(a.spearman_improvement, result_->aggregates.spearman_improvement);
  EXPECT_EQ(a.spearman_divergence, result_->aggregates.spearman_divergence);
  int total = 0;
  for (auto& band : a.confusion) total += band[0] + band[1];
  EXPECT_EQ(total, 9);
}

TEST_F(TinyExperiment, CsvRoundTrip) {
  const fs::path dir = FreshDir("csv");
  emit_report(*result_, ReportFormat::kCsv, dir);
  EXPECT_TRUE(read_report_csv(dir) == *result_);
  EXPECT_TRUE(fs::exists(dir / "plot.csv"));
  fs::remove_all(dir);
}

TEST_F(TinyExperiment, JsonCarriesTheSchemaVersion) {
  const fs::path dir = FreshDir("json");
  emit_report(*result_, ReportFormat::kJson, dir);
  const auto j = nlohmann::json::parse(Slurp(dir / "result.json"));
  EXPECT_EQ(j.at("schema_version").get<std::string>(), OTCOST_VERSION);
  EXPECT_TRUE(read_report_json(dir / "result.json") == *result_);
  fs::remove_all(dir);
}

TEST_F(TinyExperiment, MarkdownHasTheConfusionTable) {
  const fs::path dir = FreshDir("md");
  emit_report(*result_, ReportFormat::kMarkdown, dir);
  const std::string md = Slurp(dir / "report.md");
  EXPECT_NE(md.find("Threshold confusion"), std::string::npos);
  EXPECT_NE(md.find("beneficial"), std::string::npos);
  EXPECT_NE(md.find("detrimental"), std::string::npos);
  fs::remove_all(dir);
}

TEST_F(TinyExperiment, PlotTableHasTheLongFormatHeader) {
  const fs::path dir = FreshDir("plot");
  emit_report(*result_, ReportFormat::kCsv, dir);
  std::ifstream in(dir / "plot.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "figure,series,x,y,seed,level");
  fs::remove_all(dir);
}

TEST(RunExperiment, ResumesFromPersistedRuns) {
  const fs::path dir = FreshDir("resume");
  ExperimentConfig cfg = Tiny();
  cfg.levels = {0.0, 1.0};
  cfg.seeds = {0};
  cfg.output_dir = dir;
  const ExperimentResult first = run_experiment(cfg);
  const std::string log = Slurp(dir / "runs.jsonl");
  // A second pass finds every run on disk and appends nothing.
  cfg.seeds = {0, 1};
  const ExperimentResult second = run_experiment(cfg);
  const std::string log2 = Slurp(dir / "runs.jsonl");
  EXPECT_EQ(log2.substr(0, log.size()), log);
  EXPECT_EQ(std::count(log2.begin(), log2.end(), '\n'), 4);
  EXPECT_EQ(second.rows.size(), 4u);
  const ExperimentResult third = run_experiment(cfg);
  EXPECT_EQ(Slurp(dir / "runs.jsonl"), log2);
  EXPECT_TRUE(third == second);
  fs::remove_all(dir);
}

TEST(RunExperiment, FailedRunsBecomeErrorRows) {
  ExperimentConfig cfg = Tiny();
  cfg.levels = {1.0};
  cfg.seeds = {0};
  cfg.metric.min_samples_per_class = 1000;
  const ExperimentResult r = run_experiment(cfg);
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_TRUE(r.rows[0].failed());
  EXPECT_EQ(r.failed_runs(), 1);
  EXPECT_TRUE(std::isnan(r.rows[0].s_tilde));
}

TEST(RunExperiment, GateRefusalAborts) {
  ExperimentConfig cfg = Tiny();
  cfg.levels = {1.0};
  cfg.seeds = {0};
  cfg.privacy = privacy::PrivacyBudget::even_split(50.0);
  EXPECT_THROW(run_experiment(cfg), privacy::PrivacyGateError);
}

TEST(RunExperiment, ParallelWorkersGiveTheSameRows) {
  ExperimentConfig cfg = Tiny();
  cfg.levels = {0.0, 1.0};
  cfg.seeds = {0, 1};
  const ExperimentResult serial = run_experiment(cfg);
  cfg.workers = 3;
  EXPECT_TRUE(run_experiment(cfg) == serial);
}

TEST(RunExperiment, FedproxSweepEmitsBestMuPerLevel) {
  ExperimentConfig cfg = Tiny(Scenario::kFedproxMuSweep);
  cfg.levels = {0.0, 1.0};
  cfg.seeds = {0};
  cfg.mu_grid = {1e-6, 1e-2, 1.0};
  const ExperimentResult r = run_experiment(cfg);
  ASSERT_EQ(r.aggregates.levels.size(), 2u);
  for (const auto& ls : r.aggregates.levels) {
    EXPECT_EQ(ls.mean_fedprox_accuracy.size(), 3u);
    EXPECT_FALSE(std::isnan(ls.best_mu));
  }
  for (const auto& row : r.rows) EXPECT_EQ(row.fedprox_accuracy.size(), 3u);
}

TEST(SampleSizeStudy, FullSubsampleHasZeroDeviation) {
  ExperimentConfig cfg = ExperimentConfig::Defaults(Scenario::kSampleSizeStudy);
  cfg.data.dim = 8;
  cfg.levels = {1.0};
  cfg.seeds = {0};
  cfg.sample_sizes = {10, 200};
  const auto rows = sample_size_study(cfg);
  ASSERT_EQ(rows.size(), 3u);
  for (const auto& r : rows) {
    if (r.samples_per_class == 0 || r.samples_per_class == 200) {
      EXPECT_EQ(r.s_sub, r.s_full) << r.samples_per_class;
    }
  }
}

TEST(SampleSizeStudy, RejectsThinBaseData) {
  ExperimentConfig cfg = ExperimentConfig::Defaults(Scenario::kSampleSizeStudy);
  cfg.data.samples_per_client = 400;
  EXPECT_THROW(sample_size_study(cfg), Error);
}

}  // namespace
}  // namespace otcost::harness
