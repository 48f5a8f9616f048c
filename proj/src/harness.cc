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

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

namespace otcost::harness {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

constexpr std::pair<Scenario, const char*> kScenarioNames[] = {
    {Scenario::kOverlapSweep, "overlap_sweep"},
    {Scenario::kFeatureSkewSweep, "feature_skew_sweep"},
    {Scenario::kLabelSkewSweep, "label_skew_sweep"},
    {Scenario::kConceptShiftSweep, "concept_shift_sweep"},
    {Scenario::kSampleSizeStudy, "sample_size_study"},
    {Scenario::kWeightDivergenceStudy, "weight_divergence_study"},
    {Scenario::kFedproxMuSweep, "fedprox_mu_sweep"},
    {Scenario::kWassersteinComparison, "wasserstein_comparison"},
};

bool SameDouble(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }

bool SameVector(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!SameDouble(a[i], b[i])) return false;
  }
  return true;
}

double Mean2(double a, double b) { return 0.5 * (a + b); }

std::string FormatDouble(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double ParseDouble(const std::string& s, const std::string& what) {
  if (s == "nan" || s == "-nan" || s == "NaN") return kNaN;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  Require(used == s.size() && !s.empty(), ErrorCode::kIo, "bad number '" + s + "' in " + what);
  return v;
}

// nlohmann writes NaN as null.
double JsonDouble(const nlohmann::json& j) { return j.is_null() ? kNaN : j.get<double>(); }

nlohmann::json JsonVector(const std::vector<double>& v) {
  auto out = nlohmann::json::array();
  for (double x : v) out.push_back(std::isnan(x) ? nlohmann::json(nullptr) : nlohmann::json(x));
  return out;
}

std::vector<double> VectorFromJson(const nlohmann::json& j) {
  std::vector<double> out;
  for (const auto& x : j) out.push_back(JsonDouble(x));
  return out;
}

void RejectUnknown(const nlohmann::json& j, const std::set<std::string>& allowed,
                   const std::string& where) {
  Require(j.is_object(), ErrorCode::kInvalidArgument, where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    Require(allowed.count(key) > 0, ErrorCode::kInvalidArgument,
            "unknown config key '" + key + "' in " + where);
  }
}

template <typename T>
void ReadIf(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kInvalidArgument, std::string("config key '") + key + "': " + e.what());
  }
}

bool OverlapDriven(Scenario s) {
  return s == Scenario::kOverlapSweep || s == Scenario::kSampleSizeStudy ||
         s == Scenario::kWeightDivergenceStudy || s == Scenario::kFedproxMuSweep ||
         s == Scenario::kWassersteinComparison;
}

std::pair<Dataset, Dataset> MakeClients(const ExperimentConfig& cfg, uint64_t seed, double level) {
  datagen::SyntheticConfig data = cfg.data;
  data.seed = seed;
  switch (cfg.scenario) {
    case Scenario::kFeatureSkewSweep: {
      data.overlap = 1.0;
      auto [a, b] = datagen::gen_synthetic_pair(data);
      return {std::move(a), datagen::apply_feature_skew(b, level, MixSeed(seed, 0xFEA7))};
    }
    case Scenario::kConceptShiftSweep: {
      data.overlap = 1.0;
      auto [a, b] = datagen::gen_synthetic_pair(data);
      return {std::move(a), datagen::apply_concept_shift(b, level, MixSeed(seed, 0xC0DC))};
    }
    case Scenario::kLabelSkewSweep: {
      const Dataset pool = datagen::gen_synthetic_pool(data, 2 * data.samples_per_client);
      auto part = datagen::apply_label_skew(pool, level, 2, MixSeed(seed, 0x1AB3));
      for (const auto& c : part.clients) {
        Require(c.size() >= 2, ErrorCode::kInsufficientData,
                "label skew left a client with fewer than 2 samples");
      }
      return {std::move(part.clients[0]), std::move(part.clients[1])};
    }
    default:
      data.overlap = level;
      return datagen::gen_synthetic_pair(data);
  }
}

probe::ModelSpec SpecFor(const ExperimentConfig& cfg, const Dataset& d, uint64_t seed) {
  probe::ModelSpec spec = cfg.model;
  spec.input_dim = static_cast<int>(d.dim());
  spec.num_classes = d.num_classes;
  spec.seed = seed;
  return spec;
}

metric::SimilarityReport Similarity(const ExperimentConfig& cfg, const probe::ActivationSet& a,
                                    const probe::ActivationSet& b, const metric::MetricConfig& mc,
                                    uint64_t seed) {
  if (!cfg.privacy) return metric::similarity_from_activations(a, b, mc);
  metric::PrivacyMode mode;
  mode.budget = *cfg.privacy;
  mode.seed = MixSeed(seed, 0x9817);
  mode.override_gate = cfg.privacy_override_gate;
  return metric::similarity_from_activations(a, b, mc, &mode);
}

RunRow FailedRow(const ExperimentConfig& cfg, uint64_t seed, double level, std::string error) {
  RunRow r;
  r.scenario = ScenarioName(cfg.scenario);
  r.seed = seed;
  r.level = level;
  r.s_tilde = r.wasserstein = r.local_accuracy = r.fedavg_accuracy = kNaN;
  r.best_mu = r.improvement_pct = r.terminal_divergence = kNaN;
  r.fedprox_accuracy.assign(cfg.mu_grid.size(), kNaN);
  r.error = std::move(error);
  return r;
}

nlohmann::json RowToJson(const RunRow& r) {
  return {{"scenario", r.scenario},
          {"seed", r.seed},
          {"level", r.level},
          {"s_tilde", JsonVector({r.s_tilde})[0]},
          {"wasserstein", JsonVector({r.wasserstein})[0]},
          {"local_accuracy", JsonVector({r.local_accuracy})[0]},
          {"fedavg_accuracy", JsonVector({r.fedavg_accuracy})[0]},
          {"fedprox_accuracy", JsonVector(r.fedprox_accuracy)},
          {"best_mu", JsonVector({r.best_mu})[0]},
          {"improvement_pct", JsonVector({r.improvement_pct})[0]},
          {"terminal_divergence", JsonVector({r.terminal_divergence})[0]},
          {"error", r.error}};
}

RunRow RowFromJson(const nlohmann::json& j) {
  RunRow r;
  r.scenario = j.at("scenario").get<std::string>();
  r.seed = j.at("seed").get<uint64_t>();
  r.level = j.at("level").get<double>();
  r.s_tilde = JsonDouble(j.at("s_tilde"));
  r.wasserstein = JsonDouble(j.at("wasserstein"));
  r.local_accuracy = JsonDouble(j.at("local_accuracy"));
  r.fedavg_accuracy = JsonDouble(j.at("fedavg_accuracy"));
  r.fedprox_accuracy = VectorFromJson(j.at("fedprox_accuracy"));
  r.best_mu = JsonDouble(j.at("best_mu"));
  r.improvement_pct = JsonDouble(j.at("improvement_pct"));
  r.terminal_divergence = JsonDouble(j.at("terminal_divergence"));
  r.error = j.at("error").get<std::string>();
  return r;
}

nlohmann::json SampleRowToJson(const SampleSizeRow& r) {
  return {{"seed", r.seed},
          {"level", r.level},
          {"samples_per_class", r.samples_per_class},
          {"s_sub", JsonVector({r.s_sub})[0]},
          {"s_full", JsonVector({r.s_full})[0]}};
}

SampleSizeRow SampleRowFromJson(const nlohmann::json& j) {
  SampleSizeRow r;
  r.seed = j.at("seed").get<uint64_t>();
  r.level = j.at("level").get<double>();
  r.samples_per_class = j.at("samples_per_class").get<int>();
  r.s_sub = JsonDouble(j.at("s_sub"));
  r.s_full = JsonDouble(j.at("s_full"));
  return r;
}

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

std::string CsvQuote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch == '\n' ? ' ' : ch;
  }
  return out + "\"";
}

std::ofstream OpenForWrite(const std::filesystem::path& path) {
  std::ofstream out(path);
  Require(out.good(), ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  return out;
}

void CloseChecked(std::ofstream& out, const std::filesystem::path& path) {
  out.close();
  Require(!out.fail(), ErrorCode::kIo, "write failed for " + path.string());
}

std::vector<std::string> ReadLines(const std::filesystem::path& path) {
  std::ifstream in(path);
  Require(in.good(), ErrorCode::kIo, "cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

std::vector<double> Ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

std::vector<double> LogSpaced(double lo, double hi, int n) {
  std::vector<double> out;
  for (int i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / (n - 1);
    out.push_back(std::exp(std::log(lo) + t * (std::log(hi) - std::log(lo))));
  }
  out.front() = lo;
  out.back() = hi;
  return out;
}

std::vector<SampleSizeRow> SampleSizeForPair(const ExperimentConfig& cfg, uint64_t seed,
                                             double level) {
  auto [a, b] = MakeClients(cfg, seed, level);
  for (const Dataset* d : {&a, &b}) {
    for (Index count : d->class_counts()) {
      Require(count >= 200, ErrorCode::kInsufficientData,
              "sample-size study needs >= 200 samples per class, found " +
                  std::to_string(count));
    }
  }
  const probe::ModelSpec spec = SpecFor(cfg, a, seed);
  probe::TrainOpts popts = cfg.train;
  popts.seed = seed;
  popts.local_epochs = cfg.probe_local_epochs;
  popts.prox_mu = 0.0;
  const auto probe_round = probe::run_probe_round({a, b}, spec, popts);
  const auto act_a = probe::extract_activations(a, probe_round.global, "A");
  const auto act_b = probe::extract_activations(b, probe_round.global, "B");
  const double s_full = Similarity(cfg, act_a, act_b, cfg.metric, seed).s_tilde;

  std::vector<SampleSizeRow> rows;
  for (int m : cfg.sample_sizes) {
    Rng rng = MakeRng(seed, 0x5A5E0000ULL + static_cast<uint64_t>(m));
    const auto subsample = [&](const probe::ActivationSet& act) {
      std::vector<Index> keep;
      for (int c = 0; c < act.num_classes; ++c) {
        std::vector<Index> rows_c;
        for (std::size_t i = 0; i < act.labels.size(); ++i) {
          if (act.labels[i] == c) rows_c.push_back(static_cast<Index>(i));
        }
        std::shuffle(rows_c.begin(), rows_c.end(), rng);
        rows_c.resize(std::min(rows_c.size(), static_cast<std::size_t>(m)));
        keep.insert(keep.end(), rows_c.begin(), rows_c.end());
      }
      std::sort(keep.begin(), keep.end());
      probe::ActivationSet out = act;
      out.h.resize(static_cast<Index>(keep.size()), act.dim());
      out.labels.clear();
      for (std::size_t i = 0; i < keep.size(); ++i) {
        out.h.row(static_cast<Index>(i)) = act.h.row(keep[i]);
        out.labels.push_back(act.labels[static_cast<std::size_t>(keep[i])]);
      }
      return out;
    };
    const auto sub_a = subsample(act_a);
    const auto sub_b = subsample(act_b);
    metric::MetricConfig mc = cfg.metric;
    mc.min_samples_per_class = std::max(2, std::min(mc.min_samples_per_class, m));
    mc.enforce_dimension_floor = false;
    rows.push_back({seed, level, m, Similarity(cfg, sub_a, sub_b, mc, seed).s_tilde, s_full});
  }
  rows.push_back({seed, level, 0, s_full, s_full});
  return rows;
}

}  // namespace

const char* ScenarioName(Scenario s) {
  for (const auto& [value, name] : kScenarioNames) {
    if (value == s) return name;
  }
  return "unknown";
}

Scenario ParseScenario(const std::string& name) {
  for (const auto& [value, n] : kScenarioNames) {
    if (name == n) return value;
  }
  Fail(ErrorCode::kInvalidArgument, "unknown scenario '" + name + "'");
}

std::vector<double> DefaultMuGrid() { return LogSpaced(1e-6, 5.0, 8); }

ExperimentConfig ExperimentConfig::Defaults(Scenario s) {
  ExperimentConfig cfg;
  cfg.scenario = s;
  cfg.seeds = {0, 1, 2, 3, 4};
  // Wider inputs than the generator default: each client is data-limited
  // enough that pooling same-distribution data helps.
  cfg.data.dim = 32;
  cfg.data.mean_separation = 3.0;
  switch (s) {
    case Scenario::kOverlapSweep:
      cfg.levels = {0.0, 0.25, 0.5, 0.75, 1.0};
      break;
    case Scenario::kFeatureSkewSweep:
      cfg.levels = {0.0, 0.5, 1.0, 2.0};
      break;
    case Scenario::kLabelSkewSweep:
      cfg.levels = {100.0, 1.0, 0.3, 0.1};
      break;
    case Scenario::kConceptShiftSweep:
      cfg.levels = {0.0, 0.25, 0.5, 0.75, 1.0};
      break;
    case Scenario::kSampleSizeStudy:
      cfg.levels = {0.0, 0.5, 1.0};
      break;
    case Scenario::kWeightDivergenceStudy:
      for (int i = 0; i < 8; ++i) cfg.levels.push_back(i / 7.0);
      cfg.wasserstein = true;
      break;
    case Scenario::kFedproxMuSweep:
      cfg.levels = {0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
      cfg.mu_grid = DefaultMuGrid();
      break;
    case Scenario::kWassersteinComparison:
      cfg.levels = {0.0, 0.25, 0.5, 0.75, 1.0};
      cfg.wasserstein = true;
      break;
  }
  return cfg;
}

void ExperimentConfig::validate() const {
  Require(!seeds.empty(), ErrorCode::kInvalidArgument, "experiment needs at least one seed");
  Require(!levels.empty(), ErrorCode::kInvalidArgument,
          std::string(ScenarioName(scenario)) + " needs at least one level");
  data.validate();
  probe::ModelSpec spec = model;
  spec.input_dim = data.dim;
  spec.num_classes = data.num_classes;
  spec.validate();
  train.validate();
  metric.validate();
  Require(probe_local_epochs >= 1, ErrorCode::kInvalidArgument, "probe_local_epochs must be >= 1");
  Require(rounds >= 1, ErrorCode::kInvalidArgument, "rounds must be >= 1");
  Require(test_fraction > 0.0 && test_fraction < 1.0, ErrorCode::kInvalidArgument,
          "test_fraction must lie in (0,1)");
  Require(workers >= 1, ErrorCode::kInvalidArgument, "workers must be >= 1");
  if (privacy) privacy->validate();
  for (double level : levels) {
    Require(std::isfinite(level), ErrorCode::kInvalidArgument, "levels must be finite");
    if (OverlapDriven(scenario)) {
      Require(level >= 0.0 && level <= 1.0, ErrorCode::kInvalidArgument,
              "overlap levels must lie in [0,1]");
    }
    switch (scenario) {
      case Scenario::kFeatureSkewSweep:
        Require(level >= 0.0, ErrorCode::kInvalidArgument, "feature skew severity must be >= 0");
        break;
      case Scenario::kLabelSkewSweep:
        Require(level > 0.0, ErrorCode::kInvalidArgument, "Dirichlet concentration must be > 0");
        break;
      case Scenario::kConceptShiftSweep:
        Require(level >= 0.0 && level <= 1.0, ErrorCode::kInvalidArgument,
                "concept shift fraction must lie in [0,1]");
        break;
      default:
        break;
    }
  }
  if (scenario == Scenario::kFedproxMuSweep) {
    Require(!mu_grid.empty(), ErrorCode::kInvalidArgument, "fedprox_mu_sweep needs a mu grid");
  }
  for (double mu : mu_grid) {
    Require(mu >= 0.0 && std::isfinite(mu), ErrorCode::kInvalidArgument, "mu must be >= 0");
  }
  if (scenario == Scenario::kSampleSizeStudy) {
    Require(!sample_sizes.empty(), ErrorCode::kInvalidArgument,
            "sample_size_study needs sample sizes");
    for (int m : sample_sizes) {
      Require(m >= 2, ErrorCode::kInvalidArgument, "sample sizes must be >= 2");
    }
    Require(data.samples_per_client / data.num_classes >= 200, ErrorCode::kInvalidArgument,
            "sample_size_study needs >= 200 samples per class");
  }
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["scenario"] = ScenarioName(scenario);
  j["seeds"] = seeds;
  j["levels"] = levels;
  j["rounds"] = rounds;
  j["test_fraction"] = test_fraction;
  j["probe_local_epochs"] = probe_local_epochs;
  j["data"] = {{"dim", data.dim},
               {"num_classes", data.num_classes},
               {"samples_per_client", data.samples_per_client},
               {"mean_separation", data.mean_separation},
               {"covariance_scale", data.covariance_scale},
               {"disjoint_offset", data.disjoint_offset}};
  j["model"] = {{"hidden", model.hidden}, {"activation", probe::ActivationName(model.activation)}};
  j["train"] = {{"learning_rate", train.learning_rate},
                {"batch_size", train.batch_size},
                {"local_epochs", train.local_epochs}};
  j["metric"] = {{"feature_weight", metric.feature_weight},
                 {"label_weight", metric.label_weight},
                 {"epsilon", metric.sinkhorn.epsilon},
                 {"tol", metric.sinkhorn.tol},
                 {"max_iter", metric.sinkhorn.max_iter},
                 {"min_samples_per_class", metric.min_samples_per_class},
                 {"enforce_dimension_floor", metric.enforce_dimension_floor},
                 {"covariance_ridge", metric.covariance_ridge},
                 {"feature_cost", metric::FeatureCostName(metric.feature_cost)}};
  if (privacy) {
    j["privacy"] = {{"rho", privacy->rho},
                    {"delta", privacy->delta},
                    {"override_gate", privacy_override_gate}};
  }
  j["mu_grid"] = mu_grid;
  j["wasserstein"] = wasserstein;
  j["sample_sizes"] = sample_sizes;
  j["output_dir"] = output_dir.string();
  j["workers"] = workers;
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  RejectUnknown(j,
                {"scenario", "seeds", "levels", "rounds", "test_fraction", "probe_local_epochs",
                 "data", "model", "train", "metric", "privacy", "mu_grid", "wasserstein",
                 "sample_sizes", "output_dir", "workers"},
                "config");
  Require(j.contains("scenario"), ErrorCode::kInvalidArgument, "config needs a scenario");
  ExperimentConfig cfg = Defaults(ParseScenario(j.at("scenario").get<std::string>()));
  ReadIf(j, "seeds", cfg.seeds);
  ReadIf(j, "levels", cfg.levels);
  ReadIf(j, "rounds", cfg.rounds);
  ReadIf(j, "test_fraction", cfg.test_fraction);
  ReadIf(j, "probe_local_epochs", cfg.probe_local_epochs);
  ReadIf(j, "mu_grid", cfg.mu_grid);
  ReadIf(j, "wasserstein", cfg.wasserstein);
  ReadIf(j, "sample_sizes", cfg.sample_sizes);
  ReadIf(j, "workers", cfg.workers);
  if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
  if (j.contains("data")) {
    const auto& d = j.at("data");
    RejectUnknown(d,
                  {"dim", "num_classes", "samples_per_client", "mean_separation",
                   "covariance_scale", "disjoint_offset"},
                  "data");
    ReadIf(d, "dim", cfg.data.dim);
    ReadIf(d, "num_classes", cfg.data.num_classes);
    ReadIf(d, "samples_per_client", cfg.data.samples_per_client);
    ReadIf(d, "mean_separation", cfg.data.mean_separation);
    ReadIf(d, "covariance_scale", cfg.data.covariance_scale);
    ReadIf(d, "disjoint_offset", cfg.data.disjoint_offset);
  }
  if (j.contains("model")) {
    const auto& m = j.at("model");
    RejectUnknown(m, {"hidden", "activation"}, "model");
    ReadIf(m, "hidden", cfg.model.hidden);
    if (m.contains("activation")) {
      cfg.model.activation = probe::ParseActivation(m.at("activation").get<std::string>());
    }
  }
  if (j.contains("train")) {
    const auto& t = j.at("train");
    RejectUnknown(t, {"learning_rate", "batch_size", "local_epochs"}, "train");
    ReadIf(t, "learning_rate", cfg.train.learning_rate);
    ReadIf(t, "batch_size", cfg.train.batch_size);
    ReadIf(t, "local_epochs", cfg.train.local_epochs);
  }
  if (j.contains("metric")) {
    const auto& m = j.at("metric");
    RejectUnknown(m,
                  {"feature_weight", "label_weight", "epsilon", "tol", "max_iter",
                   "min_samples_per_class", "enforce_dimension_floor", "covariance_ridge",
                   "feature_cost"},
                  "metric");
    ReadIf(m, "feature_weight", cfg.metric.feature_weight);
    ReadIf(m, "label_weight", cfg.metric.label_weight);
    ReadIf(m, "epsilon", cfg.metric.sinkhorn.epsilon);
    ReadIf(m, "tol", cfg.metric.sinkhorn.tol);
    ReadIf(m, "max_iter", cfg.metric.sinkhorn.max_iter);
    ReadIf(m, "min_samples_per_class", cfg.metric.min_samples_per_class);
    ReadIf(m, "enforce_dimension_floor", cfg.metric.enforce_dimension_floor);
    ReadIf(m, "covariance_ridge", cfg.metric.covariance_ridge);
    if (m.contains("feature_cost")) {
      cfg.metric.feature_cost = metric::ParseFeatureCost(m.at("feature_cost").get<std::string>());
    }
  }
  if (j.contains("privacy") && !j.at("privacy").is_null()) {
    const auto& p = j.at("privacy");
    RejectUnknown(p, {"rho", "delta", "override_gate"}, "privacy");
    Require(p.contains("rho"), ErrorCode::kInvalidArgument, "privacy config needs rho");
    privacy::PrivacyBudget budget;
    double delta = budget.delta;
    ReadIf(p, "delta", delta);
    budget = privacy::PrivacyBudget::even_split(p.at("rho").get<double>(), delta);
    cfg.privacy = budget;
    ReadIf(p, "override_gate", cfg.privacy_override_gate);
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  Require(in.good(), ErrorCode::kIo, "cannot open config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kInvalidArgument, "config " + path.string() + " is not valid JSON: " + e.what());
  }
  return ExperimentConfig::from_json(j);
}

bool RunRow::operator==(const RunRow& o) const {
  return scenario == o.scenario && seed == o.seed && SameDouble(level, o.level) &&
         SameDouble(s_tilde, o.s_tilde) && SameDouble(wasserstein, o.wasserstein) &&
         SameDouble(local_accuracy, o.local_accuracy) &&
         SameDouble(fedavg_accuracy, o.fedavg_accuracy) &&
         SameVector(fedprox_accuracy, o.fedprox_accuracy) && SameDouble(best_mu, o.best_mu) &&
         SameDouble(improvement_pct, o.improvement_pct) &&
         SameDouble(terminal_divergence, o.terminal_divergence) && error == o.error;
}

bool SampleSizeRow::operator==(const SampleSizeRow& o) const {
  return seed == o.seed && SameDouble(level, o.level) &&
         samples_per_class == o.samples_per_class && SameDouble(s_sub, o.s_sub) &&
         SameDouble(s_full, o.s_full);
}

const char* CollaborationName(Collaboration c) {
  switch (c) {
    case Collaboration::kBeneficial:
      return "beneficial";
    case Collaboration::kUncertain:
      return "uncertain";
    case Collaboration::kDetrimental:
      return "detrimental";
  }
  return "unknown";
}

Collaboration classify_collaboration(double s_tilde) {
  Require(s_tilde >= 0.0 && s_tilde <= 1.0, ErrorCode::kInvalidArgument,
          "cost must lie in [0,1], got " + FormatDouble(s_tilde));
  if (s_tilde <= 0.2) return Collaboration::kBeneficial;
  if (s_tilde >= 0.3) return Collaboration::kDetrimental;
  return Collaboration::kUncertain;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  Require(x.size() == y.size(), ErrorCode::kShapeMismatch, "spearman needs equal-length inputs");
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::isfinite(x[i]) && std::isfinite(y[i])) {
      xs.push_back(x[i]);
      ys.push_back(y[i]);
    }
  }
  if (xs.size() < 2) return kNaN;
  const auto rx = Ranks(xs);
  const auto ry = Ranks(ys);
  const double n = static_cast<double>(rx.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return kNaN;
  return sxy / std::sqrt(sxx * syy);
}

double best_mu(const std::vector<double>& mu_grid, const std::vector<double>& accuracy) {
  Require(mu_grid.size() == accuracy.size(), ErrorCode::kShapeMismatch,
          "mu grid and accuracies differ in length");
  double best = kNaN;
  double best_acc = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < mu_grid.size(); ++i) {
    if (!std::isfinite(accuracy[i])) continue;
    if (accuracy[i] > best_acc || (accuracy[i] == best_acc && mu_grid[i] > best)) {
      best_acc = accuracy[i];
      best = mu_grid[i];
    }
  }
  return best;
}

Aggregates compute_aggregates(const std::vector<RunRow>& rows,
                              const std::vector<double>& mu_grid) {
  Aggregates agg;
  std::vector<double> s;
  std::vector<double> imp;
  std::vector<double> div;
  std::vector<double> w;
  std::vector<double> s_w;
  std::vector<double> div_w;
  std::vector<double> imp_w;
  std::map<double, std::size_t> level_index;
  for (const auto& r : rows) {
    if (r.failed()) {
      ++agg.failed_runs;
      continue;
    }
    s.push_back(r.s_tilde);
    imp.push_back(r.improvement_pct);
    div.push_back(r.terminal_divergence);
    if (std::isfinite(r.wasserstein)) {
      w.push_back(r.wasserstein);
      div_w.push_back(r.terminal_divergence);
      imp_w.push_back(r.improvement_pct);
    }
    if (std::isfinite(r.s_tilde) && r.s_tilde >= 0.0 && r.s_tilde <= 1.0 &&
        std::isfinite(r.improvement_pct)) {
      const int band = static_cast<int>(classify_collaboration(r.s_tilde));
      ++agg.confusion[band][r.improvement_pct >= 0.0 ? 0 : 1];
    }
    auto [it, inserted] = level_index.emplace(r.level, agg.levels.size());
    if (inserted) {
      LevelSummary ls;
      ls.level = r.level;
      ls.mean_fedprox_accuracy.assign(mu_grid.size(), 0.0);
      agg.levels.push_back(ls);
    }
    LevelSummary& ls = agg.levels[it->second];
    ++ls.runs;
    ls.mean_s_tilde += r.s_tilde;
    ls.mean_improvement_pct += r.improvement_pct;
    for (std::size_t k = 0; k < mu_grid.size() && k < r.fedprox_accuracy.size(); ++k) {
      ls.mean_fedprox_accuracy[k] += r.fedprox_accuracy[k];
    }
  }
  std::vector<double> level_s;
  std::vector<double> level_mu;
  for (auto& ls : agg.levels) {
    const double n = static_cast<double>(ls.runs);
    ls.mean_s_tilde /= n;
    ls.mean_improvement_pct /= n;
    for (double& a : ls.mean_fedprox_accuracy) a /= n;
    ls.best_mu = mu_grid.empty() ? kNaN : best_mu(mu_grid, ls.mean_fedprox_accuracy);
    level_s.push_back(ls.mean_s_tilde);
    level_mu.push_back(ls.best_mu);
  }
  agg.spearman_improvement = spearman(s, imp);
  agg.spearman_divergence = spearman(s, div);
  agg.spearman_wasserstein_divergence = spearman(w, div_w);
  agg.spearman_wasserstein_improvement = spearman(w, imp_w);
  agg.spearman_best_mu = mu_grid.empty() ? kNaN : spearman(level_s, level_mu);
  return agg;
}

void ExperimentResult::recompute_aggregates() { aggregates = compute_aggregates(rows, mu_grid); }

int ExperimentResult::failed_runs() const {
  return static_cast<int>(
      std::count_if(rows.begin(), rows.end(), [](const RunRow& r) { return r.failed(); }));
}

bool ExperimentResult::operator==(const ExperimentResult& o) const {
  return scenario == o.scenario && SameVector(mu_grid, o.mu_grid) && rows == o.rows &&
         sample_size == o.sample_size;
}

RunRow run_single(const ExperimentConfig& cfg, uint64_t seed, double level) {
  auto [a, b] = MakeClients(cfg, seed, level);
  auto [a_train, a_test] = train_test_split(a, cfg.test_fraction, MixSeed(seed, 0xA));
  auto [b_train, b_test] = train_test_split(b, cfg.test_fraction, MixSeed(seed, 0xB));
  const std::vector<Dataset> train = {a_train, b_train};
  const std::vector<Dataset> test = {a_test, b_test};
  const probe::ModelSpec spec = SpecFor(cfg, a, seed);
  probe::TrainOpts opts = cfg.train;
  opts.seed = seed;
  opts.prox_mu = 0.0;

  RunRow row;
  row.scenario = ScenarioName(cfg.scenario);
  row.seed = seed;
  row.level = level;

  probe::TrainOpts popts = opts;
  popts.local_epochs = cfg.probe_local_epochs;
  const auto probe_round = probe::run_probe_round(train, spec, popts);
  const auto act_a = probe::extract_activations(a_train, probe_round.global, "A");
  const auto act_b = probe::extract_activations(b_train, probe_round.global, "B");
  row.s_tilde = Similarity(cfg, act_a, act_b, cfg.metric, seed).s_tilde;
  row.wasserstein = cfg.wasserstein
                        ? metric::wasserstein_baseline(act_a, act_b, cfg.metric.sinkhorn.epsilon,
                                                       cfg.metric.sinkhorn.tol)
                        : kNaN;

  const auto fed = probe::train_federated(train, spec, opts, cfg.rounds,
                                          probe::FedAlgorithm::kFedAvg, test);
  const auto local = probe::train_local(train, spec, opts, cfg.rounds, test);
  const auto& last = fed.rounds.back().eval;
  row.fedavg_accuracy = Mean2(last[0].accuracy, last[1].accuracy);
  row.local_accuracy = Mean2(local[0].accuracy, local[1].accuracy);
  row.improvement_pct = row.local_accuracy > 0.0
                            ? 100.0 * (row.fedavg_accuracy - row.local_accuracy) /
                                  row.local_accuracy
                            : kNaN;
  row.terminal_divergence = fed.terminal_divergence();

  for (double mu : cfg.mu_grid) {
    probe::TrainOpts prox = opts;
    prox.prox_mu = mu;
    const auto tr = probe::train_federated(train, spec, prox, cfg.rounds,
                                           probe::FedAlgorithm::kFedProx, test);
    row.fedprox_accuracy.push_back(
        Mean2(tr.final_local_eval[0].accuracy, tr.final_local_eval[1].accuracy));
  }
  row.best_mu = cfg.mu_grid.empty() ? kNaN : best_mu(cfg.mu_grid, row.fedprox_accuracy);
  return row;
}

std::vector<SampleSizeRow> sample_size_study(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<SampleSizeRow> out;
  for (uint64_t seed : cfg.seeds) {
    for (double level : cfg.levels) {
      auto rows = SampleSizeForPair(cfg, seed, level);
      out.insert(out.end(), rows.begin(), rows.end());
    }
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentResult result;
  result.scenario = cfg.scenario;
  result.mu_grid = cfg.mu_grid;

  struct Job {
    uint64_t seed;
    double level;
  };
  std::vector<Job> jobs;
  for (double level : cfg.levels) {
    for (uint64_t seed : cfg.seeds) jobs.push_back({seed, level});
  }

  // Completed runs from an earlier invocation, keyed by (seed, level).
  std::map<std::pair<uint64_t, double>, nlohmann::json> done;
  std::filesystem::path log_path;
  if (!cfg.output_dir.empty()) {
    std::filesystem::create_directories(cfg.output_dir);
    auto cfg_out = OpenForWrite(cfg.output_dir / "config.json");
    cfg_out << cfg.to_json().dump(2) << '\n';
    CloseChecked(cfg_out, cfg.output_dir / "config.json");
    log_path = cfg.output_dir / "runs.jsonl";
    if (std::filesystem::exists(log_path)) {
      for (const auto& line : ReadLines(log_path)) {
        nlohmann::json j;
        try {
          j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception&) {
          continue;  // a torn final line from an interrupted run
        }
        if (j.value("scenario", "") != ScenarioName(cfg.scenario)) continue;
        if (!j.value("error", "").empty()) continue;
        done[{j.at("seed").get<uint64_t>(), j.at("level").get<double>()}] = j;
      }
    }
  }

  std::vector<RunRow> rows(jobs.size());
  std::vector<std::vector<SampleSizeRow>> sample_rows(jobs.size());
  std::vector<bool> finished(jobs.size(), false);
  std::mutex log_mutex;
  std::atomic<std::size_t> next{0};
  std::exception_ptr gate_refusal;

  const auto run_job = [&](std::size_t i) {
    const Job& job = jobs[i];
    const auto key = std::make_pair(job.seed, job.level);
    if (auto it = done.find(key); it != done.end()) {
      if (cfg.scenario == Scenario::kSampleSizeStudy) {
        for (const auto& sj : it->second.at("sample_size")) {
          sample_rows[i].push_back(SampleRowFromJson(sj));
        }
        rows[i].error = "";
      } else {
        rows[i] = RowFromJson(it->second);
      }
      finished[i] = true;
      return;
    }
    nlohmann::json record;
    try {
      if (cfg.scenario == Scenario::kSampleSizeStudy) {
        sample_rows[i] = SampleSizeForPair(cfg, job.seed, job.level);
        record = {{"scenario", ScenarioName(cfg.scenario)},
                  {"seed", job.seed},
                  {"level", job.level},
                  {"error", ""},
                  {"sample_size", nlohmann::json::array()}};
        for (const auto& sr : sample_rows[i]) record["sample_size"].push_back(SampleRowToJson(sr));
      } else {
        rows[i] = run_single(cfg, job.seed, job.level);
        record = RowToJson(rows[i]);
      }
    } catch (const privacy::PrivacyGateError&) {
      std::lock_guard<std::mutex> lock(log_mutex);
      if (!gate_refusal) gate_refusal = std::current_exception();
      return;
    } catch (const std::exception& e) {
      rows[i] = FailedRow(cfg, job.seed, job.level, e.what());
      record = RowToJson(rows[i]);
    }
    finished[i] = true;
    if (!log_path.empty()) {
      std::lock_guard<std::mutex> lock(log_mutex);
      std::ofstream log(log_path, std::ios::app);
      Require(log.good(), ErrorCode::kIo, "cannot append to " + log_path.string());
      log << record.dump() << '\n';
    }
  };

  const auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      {
        std::lock_guard<std::mutex> lock(log_mutex);
        if (gate_refusal) return;
      }
      run_job(i);
    }
  };
  if (cfg.workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < cfg.workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (gate_refusal) std::rethrow_exception(gate_refusal);

  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (!finished[i]) continue;
    if (cfg.scenario == Scenario::kSampleSizeStudy && !rows[i].failed()) {
      result.sample_size.insert(result.sample_size.end(), sample_rows[i].begin(),
                                sample_rows[i].end());
    } else {
      result.rows.push_back(rows[i]);
    }
  }
  result.recompute_aggregates();
  return result;
}

ReportFormat ParseReportFormat(const std::string& name) {
  if (name == "csv") return ReportFormat::kCsv;
  if (name == "json") return ReportFormat::kJson;
  if (name == "markdown" || name == "md") return ReportFormat::kMarkdown;
  Fail(ErrorCode::kInvalidArgument, "unknown report format '" + name + "'");
}

nlohmann::json result_to_json(const ExperimentResult& r) {
  nlohmann::json j;
  j["schema_version"] = OTCOST_VERSION;
  j["scenario"] = ScenarioName(r.scenario);
  j["mu_grid"] = JsonVector(r.mu_grid);
  j["rows"] = nlohmann::json::array();
  for (const auto& row : r.rows) j["rows"].push_back(RowToJson(row));
  j["sample_size"] = nlohmann::json::array();
  for (const auto& row : r.sample_size) j["sample_size"].push_back(SampleRowToJson(row));
  const Aggregates& a = r.aggregates;
  nlohmann::json agg;
  agg["spearman_improvement"] = JsonVector({a.spearman_improvement})[0];
  agg["spearman_divergence"] = JsonVector({a.spearman_divergence})[0];
  agg["spearman_wasserstein_divergence"] = JsonVector({a.spearman_wasserstein_divergence})[0];
  agg["spearman_wasserstein_improvement"] = JsonVector({a.spearman_wasserstein_improvement})[0];
  agg["spearman_best_mu"] = JsonVector({a.spearman_best_mu})[0];
  agg["failed_runs"] = a.failed_runs;
  nlohmann::json confusion;
  for (int band = 0; band < 3; ++band) {
    confusion[CollaborationName(static_cast<Collaboration>(band))] = {
        {"improved", a.confusion[band][0]}, {"hurt", a.confusion[band][1]}};
  }
  agg["confusion"] = confusion;
  agg["levels"] = nlohmann::json::array();
  for (const auto& ls : a.levels) {
    agg["levels"].push_back({{"level", ls.level},
                             {"runs", ls.runs},
                             {"mean_s_tilde", JsonVector({ls.mean_s_tilde})[0]},
                             {"mean_improvement_pct", JsonVector({ls.mean_improvement_pct})[0]},
                             {"mean_fedprox_accuracy", JsonVector(ls.mean_fedprox_accuracy)},
                             {"best_mu", JsonVector({ls.best_mu})[0]}});
  }
  j["aggregates"] = agg;
  return j;
}

ExperimentResult result_from_json(const nlohmann::json& j) {
  ExperimentResult r;
  r.scenario = ParseScenario(j.at("scenario").get<std::string>());
  r.mu_grid = VectorFromJson(j.at("mu_grid"));
  for (const auto& row : j.at("rows")) r.rows.push_back(RowFromJson(row));
  for (const auto& row : j.at("sample_size")) r.sample_size.push_back(SampleRowFromJson(row));
  r.recompute_aggregates();
  return r;
}

namespace {

void WriteRunsCsv(const ExperimentResult& r, const std::filesystem::path& path) {
  auto out = OpenForWrite(path);
  out << "scenario,seed,level,s_tilde,wasserstein,local_accuracy,fedavg_accuracy,best_mu,"
         "improvement_pct,terminal_divergence";
  for (double mu : r.mu_grid) out << ",fedprox_acc@" << FormatDouble(mu);
  out << ",error\n";
  for (const auto& row : r.rows) {
    out << row.scenario << ',' << row.seed << ',' << FormatDouble(row.level) << ','
        << FormatDouble(row.s_tilde) << ',' << FormatDouble(row.wasserstein) << ','
        << FormatDouble(row.local_accuracy) << ',' << FormatDouble(row.fedavg_accuracy) << ','
        << FormatDouble(row.best_mu) << ',' << FormatDouble(row.improvement_pct) << ','
        << FormatDouble(row.terminal_divergence);
    for (std::size_t k = 0; k < r.mu_grid.size(); ++k) {
      out << ',' << FormatDouble(k < row.fedprox_accuracy.size() ? row.fedprox_accuracy[k] : kNaN);
    }
    out << ',' << CsvQuote(row.error) << '\n';
  }
  CloseChecked(out, path);
}

void WriteSampleSizeCsv(const ExperimentResult& r, const std::filesystem::path& path) {
  auto out = OpenForWrite(path);
  out << "seed,level,samples_per_class,s_sub,s_full\n";
  for (const auto& row : r.sample_size) {
    out << row.seed << ',' << FormatDouble(row.level) << ',' << row.samples_per_class << ','
        << FormatDouble(row.s_sub) << ',' << FormatDouble(row.s_full) << '\n';
  }
  CloseChecked(out, path);
}

void WriteSummaryCsv(const ExperimentResult& r, const std::filesystem::path& path) {
  auto out = OpenForWrite(path);
  const Aggregates& a = r.aggregates;
  out << "key,value\n";
  out << "schema_version," << OTCOST_VERSION << '\n';
  out << "scenario," << ScenarioName(r.scenario) << '\n';
  out << "runs," << r.rows.size() << '\n';
  out << "failed_runs," << a.failed_runs << '\n';
  out << "spearman_improvement," << FormatDouble(a.spearman_improvement) << '\n';
  out << "spearman_divergence," << FormatDouble(a.spearman_divergence) << '\n';
  out << "spearman_wasserstein_divergence," << FormatDouble(a.spearman_wasserstein_divergence)
      << '\n';
  out << "spearman_wasserstein_improvement," << FormatDouble(a.spearman_wasserstein_improvement)
      << '\n';
  out << "spearman_best_mu," << FormatDouble(a.spearman_best_mu) << '\n';
  for (int band = 0; band < 3; ++band) {
    const char* name = CollaborationName(static_cast<Collaboration>(band));
    out << "confusion_" << name << "_improved," << a.confusion[band][0] << '\n';
    out << "confusion_" << name << "_hurt," << a.confusion[band][1] << '\n';
  }
  CloseChecked(out, path);
}

void WritePlotCsv(const ExperimentResult& r, const std::filesystem::path& path) {
  auto out = OpenForWrite(path);
  out << "figure,series,x,y,seed,level\n";
  const auto emit = [&](const char* figure, const std::string& series, double x, double y,
                        uint64_t seed, double level) {
    if (!std::isfinite(x) || !std::isfinite(y)) return;
    out << figure << ',' << series << ',' << FormatDouble(x) << ',' << FormatDouble(y) << ','
        << seed << ',' << FormatDouble(level) << '\n';
  };
  for (const auto& row : r.rows) {
    if (row.failed()) continue;
    emit("performance", "fedavg", row.s_tilde, row.improvement_pct, row.seed, row.level);
    if (!row.fedprox_accuracy.empty() && row.local_accuracy > 0.0) {
      const double best = *std::max_element(row.fedprox_accuracy.begin(),
                                            row.fedprox_accuracy.end());
      emit("performance", "fedprox", row.s_tilde,
           100.0 * (best - row.local_accuracy) / row.local_accuracy, row.seed, row.level);
    }
    emit("divergence", "ot_cost", row.s_tilde, row.terminal_divergence, row.seed, row.level);
    emit("divergence", "wasserstein", row.wasserstein, row.terminal_divergence, row.seed,
         row.level);
    emit("wasserstein", "fedavg", row.wasserstein, row.improvement_pct, row.seed, row.level);
  }
  for (const auto& ls : r.aggregates.levels) {
    emit("fedprox_mu", "fedprox", ls.mean_s_tilde, ls.best_mu, 0, ls.level);
  }
  for (const auto& row : r.sample_size) {
    const std::string series =
        row.samples_per_class == 0 ? "full" : "n=" + std::to_string(row.samples_per_class);
    emit("sample_size", series, row.s_full, row.s_sub, row.seed, row.level);
  }
  CloseChecked(out, path);
}

std::string Cell(double v, int precision = 4) {
  if (!std::isfinite(v)) return "n/a";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
  return buf;
}

void WriteMarkdown(const ExperimentResult& r, const std::filesystem::path& path) {
  auto out = OpenForWrite(path);
  const Aggregates& a = r.aggregates;
  out << "# otcost experiment: " << ScenarioName(r.scenario) << "\n\n";
  out << "Tool version " << OTCOST_VERSION << ". Runs: " << r.rows.size()
      << ", failed: " << a.failed_runs << ".\n\n";
  if (!a.levels.empty()) {
    out << "## Levels\n\n| level | runs | mean s~ | mean % improvement | best mu |\n"
           "|---|---|---|---|---|\n";
    for (const auto& ls : a.levels) {
      out << "| " << Cell(ls.level, 3) << " | " << ls.runs << " | " << Cell(ls.mean_s_tilde)
          << " | " << Cell(ls.mean_improvement_pct, 2) << " | "
          << (std::isfinite(ls.best_mu) ? FormatDouble(ls.best_mu) : "n/a") << " |\n";
    }
    out << '\n';
  }
  out << "## Threshold confusion\n\n"
         "Bands: beneficial s~ <= 0.2, uncertain, detrimental s~ >= 0.3. Outcome is the sign "
         "of the FedAvg improvement over local training.\n\n"
         "| band | improved | hurt |\n|---|---|---|\n";
  for (int band = 0; band < 3; ++band) {
    out << "| " << CollaborationName(static_cast<Collaboration>(band)) << " | "
        << a.confusion[band][0] << " | " << a.confusion[band][1] << " |\n";
  }
  out << "\n## Rank correlations\n\n| pair | Spearman |\n|---|---|\n"
      << "| s~ vs % improvement | " << Cell(a.spearman_improvement, 3) << " |\n"
      << "| s~ vs terminal weight divergence | " << Cell(a.spearman_divergence, 3) << " |\n"
      << "| Wasserstein vs terminal weight divergence | "
      << Cell(a.spearman_wasserstein_divergence, 3) << " |\n"
      << "| Wasserstein vs % improvement | " << Cell(a.spearman_wasserstein_improvement, 3)
      << " |\n"
      << "| level mean s~ vs best mu | " << Cell(a.spearman_best_mu, 3) << " |\n";
  if (!r.sample_size.empty()) {
    std::map<int, std::pair<double, double>> by_size;  // sum of signed and absolute deviation
    std::map<int, int> counts;
    for (const auto& row : r.sample_size) {
      by_size[row.samples_per_class].first += row.s_sub - row.s_full;
      by_size[row.samples_per_class].second += std::abs(row.s_sub - row.s_full);
      ++counts[row.samples_per_class];
    }
    out << "\n## Sample size\n\n| per class | mean (sub - full) | mean abs deviation |\n"
           "|---|---|---|\n";
    for (const auto& [m, sums] : by_size) {
      const double n = counts[m];
      out << "| " << (m == 0 ? std::string("full") : std::to_string(m)) << " | "
          << Cell(sums.first / n) << " | " << Cell(sums.second / n) << " |\n";
    }
  }
  if (a.failed_runs > 0) {
    out << "\n## Failed runs\n\n";
    for (const auto& row : r.rows) {
      if (row.failed()) {
        out << "- seed " << row.seed << ", level " << FormatDouble(row.level) << ": " << row.error
            << '\n';
      }
    }
  }
  CloseChecked(out, path);
}

}  // namespace

std::vector<std::filesystem::path> emit_report(const ExperimentResult& r, ReportFormat format,
                                               const std::filesystem::path& dir) {
  Require(!r.rows.empty() || !r.sample_size.empty(), ErrorCode::kInvalidArgument,
          "cannot report an empty result");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  Require(!ec, ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  switch (format) {
    case ReportFormat::kCsv:
      WriteRunsCsv(r, dir / "runs.csv");
      WriteSampleSizeCsv(r, dir / "sample_size.csv");
      WriteSummaryCsv(r, dir / "summary.csv");
      written = {dir / "runs.csv", dir / "sample_size.csv", dir / "summary.csv"};
      break;
    case ReportFormat::kJson: {
      const auto path = dir / "result.json";
      auto out = OpenForWrite(path);
      out << result_to_json(r).dump(2) << '\n';
      CloseChecked(out, path);
      written = {path};
      break;
    }
    case ReportFormat::kMarkdown:
      WriteMarkdown(r, dir / "report.md");
      written = {dir / "report.md"};
      break;
  }
  WritePlotCsv(r, dir / "plot.csv");
  written.push_back(dir / "plot.csv");
  return written;
}

ExperimentResult read_report_csv(const std::filesystem::path& dir) {
  ExperimentResult r;
  for (const auto& line : ReadLines(dir / "summary.csv")) {
    const auto cells = SplitCsvLine(line);
    if (cells.size() == 2 && cells[0] == "scenario") r.scenario = ParseScenario(cells[1]);
  }
  const auto runs_path = dir / "runs.csv";
  const auto lines = ReadLines(runs_path);
  Require(!lines.empty(), ErrorCode::kIo, runs_path.string() + " has no header");
  const auto header = SplitCsvLine(lines[0]);
  constexpr std::size_t kFixed = 10;
  Require(header.size() >= kFixed + 1 && header.back() == "error", ErrorCode::kIo,
          runs_path.string() + " has an unexpected header");
  const std::string prefix = "fedprox_acc@";
  for (std::size_t k = kFixed; k + 1 < header.size(); ++k) {
    Require(header[k].rfind(prefix, 0) == 0, ErrorCode::kIo,
            "unexpected column '" + header[k] + "' in " + runs_path.string());
    r.mu_grid.push_back(ParseDouble(header[k].substr(prefix.size()), runs_path.string()));
  }
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto c = SplitCsvLine(lines[i]);
    Require(c.size() == header.size(), ErrorCode::kIo,
            runs_path.string() + " line " + std::to_string(i + 1) + " has " +
                std::to_string(c.size()) + " fields, expected " + std::to_string(header.size()));
    const std::string& where = runs_path.string();
    RunRow row;
    row.scenario = c[0];
    row.seed = std::stoull(c[1]);
    row.level = ParseDouble(c[2], where);
    row.s_tilde = ParseDouble(c[3], where);
    row.wasserstein = ParseDouble(c[4], where);
    row.local_accuracy = ParseDouble(c[5], where);
    row.fedavg_accuracy = ParseDouble(c[6], where);
    row.best_mu = ParseDouble(c[7], where);
    row.improvement_pct = ParseDouble(c[8], where);
    row.terminal_divergence = ParseDouble(c[9], where);
    for (std::size_t k = kFixed; k + 1 < c.size(); ++k) {
      row.fedprox_accuracy.push_back(ParseDouble(c[k], where));
    }
    row.error = c.back();
    r.rows.push_back(std::move(row));
  }
  const auto ss_path = dir / "sample_size.csv";
  const auto ss_lines = ReadLines(ss_path);
  for (std::size_t i = 1; i < ss_lines.size(); ++i) {
    const auto c = SplitCsvLine(ss_lines[i]);
    Require(c.size() == 5, ErrorCode::kIo,
            ss_path.string() + " line " + std::to_string(i + 1) + " is malformed");
    r.sample_size.push_back({std::stoull(c[0]), ParseDouble(c[1], ss_path.string()),
                             std::stoi(c[2]), ParseDouble(c[3], ss_path.string()),
                             ParseDouble(c[4], ss_path.string())});
  }
  r.recompute_aggregates();
  return r;
}

ExperimentResult read_report_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  Require(in.good(), ErrorCode::kIo, "cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kIo, path.string() + " is not valid JSON: " + e.what());
  }
  return result_from_json(j);
}

}  // namespace otcost::harness
