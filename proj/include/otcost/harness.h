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

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "otcost/datagen.h"
#include "otcost/dp.h"
#include "otcost/model.h"
#include "otcost/similarity.h"
#include "otcost/training.h"

namespace otcost::harness {

enum class Scenario {
  kOverlapSweep,
  kFeatureSkewSweep,
  kLabelSkewSweep,
  kConceptShiftSweep,
  kSampleSizeStudy,
  kWeightDivergenceStudy,
  kFedproxMuSweep,
  kWassersteinComparison,
};

const char* ScenarioName(Scenario s);
Scenario ParseScenario(const std::string& name);

// Eight log-spaced values from 1e-6 to 5.
std::vector<double> DefaultMuGrid();

struct ExperimentConfig {
  Scenario scenario = Scenario::kOverlapSweep;
  // Base generator settings; `overlap` and `seed` are set per run.
  datagen::SyntheticConfig data;
  // One value per heterogeneity level: overlap for the overlap-driven
  // scenarios, transform severity, Dirichlet concentration or permuted-label
  // fraction for the skew sweeps.
  std::vector<double> levels;
  // Hidden widths and nonlinearity; input and output widths follow `data`.
  probe::ModelSpec model;
  probe::TrainOpts train;
  // Local epochs of the probe round only.
  int probe_local_epochs = 10;
  int rounds = 60;
  double test_fraction = 0.2;
  metric::MetricConfig metric;
  std::optional<privacy::PrivacyBudget> privacy;
  bool privacy_override_gate = false;
  std::vector<uint64_t> seeds;
  std::vector<double> mu_grid;
  bool wasserstein = false;
  // Per-class subsample sizes for the sample-size study; the full set is
  // always evaluated as well.
  std::vector<int> sample_sizes = {10, 25, 50, 100};
  // Empty disables persistence.
  std::filesystem::path output_dir;
  int workers = 1;

  // Scenario defaults, including levels and seeds.
  static ExperimentConfig Defaults(Scenario s);
  void validate() const;
  nlohmann::json to_json() const;
  // Keys missing from `j` keep the scenario defaults; unknown keys are
  // rejected.
  static ExperimentConfig from_json(const nlohmann::json& j);
};

ExperimentConfig load_config(const std::filesystem::path& path);

struct RunRow {
  std::string scenario;
  uint64_t seed = 0;
  double level = 0.0;
  double s_tilde = 0.0;
  double wasserstein = 0.0;  // NaN when not computed
  double local_accuracy = 0.0;
  double fedavg_accuracy = 0.0;
  std::vector<double> fedprox_accuracy;  // aligned with the mu grid
  double best_mu = 0.0;                  // NaN without a mu grid
  double improvement_pct = 0.0;          // 100 (fedavg - local) / local
  double terminal_divergence = 0.0;
  std::string error;  // non-empty for a failed run; metrics are NaN

  bool failed() const { return !error.empty(); }
  bool operator==(const RunRow& o) const;
};

struct SampleSizeRow {
  uint64_t seed = 0;
  double level = 0.0;         // overlap of the pair
  int samples_per_class = 0;  // 0 means the full set
  double s_sub = 0.0;
  double s_full = 0.0;

  bool operator==(const SampleSizeRow& o) const;
};

enum class Collaboration { kBeneficial, kUncertain, kDetrimental };
const char* CollaborationName(Collaboration c);

// Beneficial for s <= 0.2, detrimental for s >= 0.3, uncertain in between.
Collaboration classify_collaboration(double s_tilde);

// Rank correlation with average ranks for ties.  NaN when fewer than two
// pairs or either side is constant.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

struct LevelSummary {
  double level = 0.0;
  int runs = 0;
  double mean_s_tilde = 0.0;
  double mean_improvement_pct = 0.0;
  std::vector<double> mean_fedprox_accuracy;
  double best_mu = 0.0;  // NaN without a mu grid
};

struct Aggregates {
  // Over successful rows.
  double spearman_improvement = 0.0;               // s_tilde vs % improvement
  double spearman_divergence = 0.0;                // s_tilde vs terminal divergence
  double spearman_wasserstein_divergence = 0.0;    // W vs terminal divergence
  double spearman_wasserstein_improvement = 0.0;   // W vs % improvement
  // Over level summaries.
  double spearman_best_mu = 0.0;                   // mean s_tilde vs best mu
  // confusion[band][outcome]; outcome 0: improvement >= 0, 1: < 0.
  int confusion[3][2] = {{0, 0}, {0, 0}, {0, 0}};
  std::vector<LevelSummary> levels;
  int failed_runs = 0;
};

// Best mu is the largest grid value reaching the highest accuracy.
double best_mu(const std::vector<double>& mu_grid, const std::vector<double>& accuracy);

struct ExperimentResult {
  Scenario scenario = Scenario::kOverlapSweep;
  std::vector<double> mu_grid;
  std::vector<RunRow> rows;
  std::vector<SampleSizeRow> sample_size;
  Aggregates aggregates;

  void recompute_aggregates();
  int failed_runs() const;
  bool operator==(const ExperimentResult& o) const;
};

Aggregates compute_aggregates(const std::vector<RunRow>& rows, const std::vector<double>& mu_grid);

// One run (seed, level) of a training scenario.  Errors propagate.
RunRow run_single(const ExperimentConfig& cfg, uint64_t seed, double level);

// Runs every (level, seed).  With an output directory, each finished run is
// appended to runs.jsonl there and runs already present are not repeated.
// Failures other than a privacy-gate refusal become error rows.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

// Requires >= 200 samples per class in each generated client.
std::vector<SampleSizeRow> sample_size_study(const ExperimentConfig& cfg);

enum class ReportFormat { kCsv, kJson, kMarkdown };
ReportFormat ParseReportFormat(const std::string& name);

// Writes the report into `dir` and returns the files written.  Every format
// also writes plot.csv, a long table with columns figure,series,x,y,seed,level.
std::vector<std::filesystem::path> emit_report(const ExperimentResult& r, ReportFormat format,
                                               const std::filesystem::path& dir);

// Readers for the csv and json reports; aggregates are recomputed from rows.
ExperimentResult read_report_csv(const std::filesystem::path& dir);
ExperimentResult read_report_json(const std::filesystem::path& path);

nlohmann::json result_to_json(const ExperimentResult& r);
ExperimentResult result_from_json(const nlohmann::json& j);

}  // namespace otcost::harness
