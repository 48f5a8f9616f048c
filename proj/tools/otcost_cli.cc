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

// Command-line front end: generate, probe, similarity, experiment, report.
//
// Exit codes: 0 success, 1 runtime failure, 2 configuration error,
// 3 experiment finished with failed runs, 4 privacy gate refusal.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "otcost/datagen.h"
#include "otcost/harness.h"
#include "otcost/similarity.h"
#include "otcost/training.h"

namespace fs = std::filesystem;
using namespace otcost;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;
constexpr int kExitPartial = 3;
constexpr int kExitPrivacy = 4;

struct MetricFlags {
  std::string weights;
  std::optional<double> epsilon;
  bool privacy = false;
  double rho = 0.0;
  double delta = 1e-5;
  bool override_gate = false;
};

void AddMetricFlags(CLI::App* cmd, MetricFlags& f) {
  cmd->add_option("--weights", f.weights, "feature:label cost weights, e.g. 2:1");
  cmd->add_option("--epsilon", f.epsilon, "Sinkhorn entropic regularization");
  cmd->add_flag("--privacy", f.privacy, "use the secure product and DP class statistics");
  cmd->add_option("--rho", f.rho, "zCDP budget per client");
  cmd->add_option("--delta", f.delta, "target delta for the (epsilon, delta) report");
  cmd->add_flag("--override-gate", f.override_gate, "run even if the budget gate refuses");
}

metric::MetricConfig MetricFromFlags(const MetricFlags& f, metric::MetricConfig cfg = {}) {
  if (!f.weights.empty()) {
    const auto colon = f.weights.find(':');
    Require(colon != std::string::npos, ErrorCode::kInvalidArgument,
            "--weights must look like wf:wl, got '" + f.weights + "'");
    try {
      cfg.feature_weight = std::stod(f.weights.substr(0, colon));
      cfg.label_weight = std::stod(f.weights.substr(colon + 1));
    } catch (const std::exception&) {
      Fail(ErrorCode::kInvalidArgument, "--weights must look like wf:wl, got '" + f.weights + "'");
    }
  }
  if (f.epsilon) cfg.sinkhorn.epsilon = *f.epsilon;
  cfg.validate();
  return cfg;
}

std::optional<metric::PrivacyMode> PrivacyFromFlags(const MetricFlags& f, uint64_t seed) {
  if (!f.privacy) return std::nullopt;
  Require(f.rho > 0.0, ErrorCode::kInvalidArgument, "--privacy needs --rho > 0");
  metric::PrivacyMode mode;
  mode.budget = privacy::PrivacyBudget::even_split(f.rho, f.delta);
  mode.budget.validate();
  mode.seed = seed;
  mode.override_gate = f.override_gate;
  return mode;
}

Dataset LoadDataset(const fs::path& path) {
  if (path.extension() == ".bin") return read_binary(path);
  return read_csv(path);
}

void WriteJson(const nlohmann::json& j, const fs::path& path) {
  std::ofstream out(path);
  Require(out.good(), ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  Require(out.good(), ErrorCode::kIo, "write failed for " + path.string());
}

// Pads the class count of every client to the largest one.
void AlignClasses(std::vector<Dataset>& clients) {
  int k = 0;
  for (const auto& c : clients) k = std::max(k, c.num_classes);
  for (auto& c : clients) c.num_classes = k;
}

probe::ModelSpec SpecFor(const Dataset& d, const std::vector<int>& hidden, uint64_t seed) {
  probe::ModelSpec spec;
  spec.input_dim = static_cast<int>(d.dim());
  spec.num_classes = d.num_classes;
  if (!hidden.empty()) spec.hidden = hidden;
  spec.seed = seed;
  return spec;
}

void WriteActivations(const probe::ActivationSet& a, const fs::path& path) {
  Dataset d;
  d.features = a.h;
  d.labels = a.labels;
  d.num_classes = a.num_classes;
  write_csv(d, path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bounded optimal-transport similarity between federated clients"};
  app.set_version_flag("--version", std::string(OTCOST_VERSION));
  app.require_subcommand(1);

  uint64_t seed = 0;
  fs::path out_dir = ".";

  // generate
  auto* gen = app.add_subcommand("generate", "generate a synthetic two-client pair");
  datagen::SyntheticConfig syn;
  std::string skew;
  double severity = 0.0;
  bool binary = false;
  gen->add_option("--seed", seed, "generator seed");
  gen->add_option("--out", out_dir, "output directory");
  gen->add_option("--overlap", syn.overlap, "fraction of client B drawn from client A's mixture");
  gen->add_option("--dim", syn.dim, "feature dimension");
  gen->add_option("--classes", syn.num_classes, "number of classes");
  gen->add_option("--samples", syn.samples_per_client, "samples per client");
  gen->add_option("--separation", syn.mean_separation, "distance of class means from the origin");
  gen->add_option("--skew", skew, "feature_skew, label_skew or concept_shift applied to B");
  gen->add_option("--severity", severity, "skew severity");
  gen->add_flag("--binary", binary, "write the binary cache format instead of CSV");

  // probe
  auto* prb = app.add_subcommand("probe", "run one federated round and extract activations");
  std::vector<fs::path> clients;
  std::vector<int> hidden;
  probe::TrainOpts probe_opts;
  probe_opts.local_epochs = 10;
  prb->add_option("clients", clients, "client dataset files (CSV or .bin)")->required();
  prb->add_option("--seed", seed, "model and shuffle seed");
  prb->add_option("--out", out_dir, "output directory");
  prb->add_option("--hidden", hidden, "hidden layer widths; the last is the penultimate width");
  prb->add_option("--epochs", probe_opts.local_epochs, "local epochs of the probe round");
  prb->add_option("--lr", probe_opts.learning_rate, "learning rate");

  // similarity
  auto* sim = app.add_subcommand("similarity", "pairwise or all-pairs similarity");
  MetricFlags mflags;
  fs::path model_path;
  sim->add_option("clients", clients, "client dataset files (CSV or .bin)")->required();
  sim->add_option("--model", model_path, "probe model; trained from the clients when absent");
  sim->add_option("--seed", seed, "probe and privacy noise seed");
  sim->add_option("--out", out_dir, "output directory");
  sim->add_option("--hidden", hidden, "hidden widths when training a probe");
  sim->add_option("--epochs", probe_opts.local_epochs, "local epochs when training a probe");
  AddMetricFlags(sim, mflags);

  // experiment
  auto* exp = app.add_subcommand("experiment", "run an experiment scenario");
  fs::path config_path;
  std::string scenario;
  std::optional<uint64_t> exp_seed;
  MetricFlags eflags;
  exp->add_option("--config", config_path, "JSON experiment config");
  exp->add_option("--scenario", scenario, "scenario name when no config is given");
  exp->add_option("--seed", exp_seed, "run a single seed instead of the configured list");
  exp->add_option("--out", out_dir, "output directory");
  AddMetricFlags(exp, eflags);

  // report
  auto* rep = app.add_subcommand("report", "re-emit reports from a finished experiment");
  fs::path in_dir;
  std::string format = "markdown";
  rep->add_option("--in", in_dir, "directory holding result.json or runs.csv")->required();
  rep->add_option("--format", format, "csv, json or markdown");
  rep->add_option("--out", out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*gen) {
      syn.seed = seed;
      auto [a, b] = datagen::gen_synthetic_pair(syn);
      if (!skew.empty()) {
        switch (datagen::ParseHeterogeneity(skew)) {
          case datagen::HeterogeneityKind::kFeatureSkew:
            b = datagen::apply_feature_skew(b, severity, MixSeed(seed, 1));
            break;
          case datagen::HeterogeneityKind::kConceptShift:
            b = datagen::apply_concept_shift(b, severity, MixSeed(seed, 1));
            break;
          case datagen::HeterogeneityKind::kLabelSkew: {
            Dataset pool = a;
            pool.features.conservativeResize(a.size() + b.size(), Eigen::NoChange);
            pool.features.bottomRows(b.size()) = b.features;
            pool.labels.insert(pool.labels.end(), b.labels.begin(), b.labels.end());
            auto part = datagen::apply_label_skew(pool, severity, 2, MixSeed(seed, 1));
            for (const auto& [client, cls] : part.empty_slices) {
              std::fprintf(stderr, "note: client %d received no samples of class %d\n", client,
                           cls);
            }
            a = part.clients[0];
            b = part.clients[1];
            break;
          }
        }
      }
      fs::create_directories(out_dir);
      const char* ext = binary ? ".bin" : ".csv";
      const fs::path pa = out_dir / (std::string("client_a") + ext);
      const fs::path pb = out_dir / (std::string("client_b") + ext);
      if (binary) {
        write_binary(a, pa);
        write_binary(b, pb);
      } else {
        write_csv(a, pa);
        write_csv(b, pb);
      }
      std::printf("wrote %s (%lld rows) and %s (%lld rows)\n", pa.c_str(),
                  static_cast<long long>(a.size()), pb.c_str(), static_cast<long long>(b.size()));
      return 0;
    }

    if (*prb) {
      Require(clients.size() >= 2, ErrorCode::kInvalidArgument, "probe needs >= 2 clients");
      std::vector<Dataset> data;
      for (const auto& p : clients) data.push_back(LoadDataset(p));
      AlignClasses(data);
      probe_opts.seed = seed;
      const auto spec = SpecFor(data[0], hidden, seed);
      const auto result = probe::run_probe_round(data, spec, probe_opts);
      fs::create_directories(out_dir);
      probe::save_model(result.global, out_dir / "probe.model");
      for (std::size_t i = 0; i < data.size(); ++i) {
        const auto act = probe::extract_activations(data[i], result.global, clients[i].stem());
        WriteActivations(act, out_dir / ("activations_" + clients[i].stem().string() + ".csv"));
      }
      std::printf("probe model hash %016llx written to %s\n",
                  static_cast<unsigned long long>(result.global.hash()),
                  (out_dir / "probe.model").c_str());
      return 0;
    }

    if (*sim) {
      Require(clients.size() >= 2, ErrorCode::kInvalidArgument, "similarity needs >= 2 clients");
      const auto cfg = MetricFromFlags(mflags);
      auto mode = PrivacyFromFlags(mflags, seed);
      std::vector<Dataset> data;
      for (const auto& p : clients) data.push_back(LoadDataset(p));
      AlignClasses(data);
      probe::ModelParams model;
      if (!model_path.empty()) {
        model = probe::load_model(model_path);
      } else {
        probe_opts.seed = seed;
        model = probe::run_probe_round(data, SpecFor(data[0], hidden, seed), probe_opts).global;
      }
      fs::create_directories(out_dir);
      const metric::PrivacyMode* pm = mode ? &*mode : nullptr;
      if (data.size() == 2) {
        const auto act_a = probe::extract_activations(data[0], model, clients[0].stem());
        const auto act_b = probe::extract_activations(data[1], model, clients[1].stem());
        const auto report = metric::similarity_from_activations(act_a, act_b, cfg, pm);
        WriteJson(report.to_json(), out_dir / "similarity.json");
        std::printf("s_tilde %.6f (%s)\n", report.s_tilde,
                    harness::CollaborationName(harness::classify_collaboration(report.s_tilde)));
        for (const auto& s : report.skipped) {
          std::printf("skipped class %d: %s\n", s.label, s.reason.c_str());
        }
      } else {
        const auto all = metric::cost_matrix_all_pairs(data, model, cfg, pm);
        metric::write_matrix_csv(all, out_dir / "similarity_matrix.csv");
        auto reports = nlohmann::json::array();
        for (const auto& r : all.reports) reports.push_back(r.to_json());
        WriteJson(reports, out_dir / "similarity_reports.json");
        for (const auto& e : all.errors) std::fprintf(stderr, "pair %s\n", e.c_str());
        std::printf("wrote %s\n", (out_dir / "similarity_matrix.csv").c_str());
        if (!all.errors.empty()) return kExitPartial;
      }
      return 0;
    }

    if (*exp) {
      harness::ExperimentConfig cfg;
      if (!config_path.empty()) {
        cfg = harness::load_config(config_path);
      } else {
        Require(!scenario.empty(), ErrorCode::kInvalidArgument,
                "experiment needs --config or --scenario");
        cfg = harness::ExperimentConfig::Defaults(harness::ParseScenario(scenario));
      }
      if (exp_seed) cfg.seeds = {*exp_seed};
      cfg.metric = MetricFromFlags(eflags, cfg.metric);
      if (eflags.privacy) {
        auto mode = PrivacyFromFlags(eflags, 0);
        cfg.privacy = mode->budget;
        cfg.privacy_override_gate = eflags.override_gate;
      }
      if (app.get_subcommand("experiment")->count("--out") > 0 || cfg.output_dir.empty()) {
        cfg.output_dir = out_dir;
      }
      cfg.validate();
      const auto result = harness::run_experiment(cfg);
      for (auto f : {harness::ReportFormat::kCsv, harness::ReportFormat::kJson,
                     harness::ReportFormat::kMarkdown}) {
        if (!result.rows.empty() || !result.sample_size.empty()) {
          harness::emit_report(result, f, cfg.output_dir);
        }
      }
      std::printf("%s: %zu runs, %d failed; reports in %s\n", harness::ScenarioName(cfg.scenario),
                  result.rows.size() + result.sample_size.size(), result.failed_runs(),
                  cfg.output_dir.c_str());
      return result.failed_runs() > 0 ? kExitPartial : 0;
    }

    if (*rep) {
      harness::ExperimentResult result = fs::exists(in_dir / "result.json")
                                             ? harness::read_report_json(in_dir / "result.json")
                                             : harness::read_report_csv(in_dir);
      const auto files = harness::emit_report(result, harness::ParseReportFormat(format), out_dir);
      for (const auto& f : files) std::printf("wrote %s\n", f.c_str());
      return 0;
    }
  } catch (const privacy::PrivacyGateError& e) {
    std::fprintf(stderr, "privacy gate: %s\n", e.what());
    return kExitPrivacy;
  } catch (const Error& e) {
    std::fprintf(stderr, "error [%s]: %s\n", ErrorCodeName(e.code()), e.what());
    if (e.code() == ErrorCode::kInvalidArgument) return kExitConfig;
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return 0;
}
