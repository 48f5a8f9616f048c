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

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "otcost/cost.h"
#include "otcost/dp.h"
#include "otcost/secure_product.h"
#include "otcost/sinkhorn.h"
#include "otcost/training.h"

namespace otcost::metric {

struct MetricConfig {
  double feature_weight = 2.0;
  double label_weight = 1.0;
  SinkhornOptions sinkhorn;
  int min_samples_per_class = 50;
  // Also require d + 1 samples per class so covariances are estimable.
  bool enforce_dimension_floor = true;
  double covariance_ridge = 1e-4;
  FeatureCostKind feature_cost = FeatureCostKind::kCosine;

  // Largest possible per-pair cost, 2 w_f + w_l.
  double normalizer() const { return 2.0 * feature_weight + label_weight; }
  int min_samples(Index d) const;
  void validate() const;
};

// Enables the private path: cross-client inner products through the secure
// product protocol and class statistics through the Gaussian mechanism.
struct PrivacyMode {
  privacy::PrivacyBudget budget;
  uint64_t seed = 0;
  // Proceed even when the reconstruction gate fails for some (d, n_c).
  bool override_gate = false;
  bool keep_transcripts = false;
};

struct ClassResult {
  int label = -1;
  double cost = 0.0;          // s^y = <pi, C_total>
  double feature_cost = 0.0;  // <pi, C_feat>
  double label_cost = 0.0;    // Hellinger distance h_y
  Index n_a = 0;
  Index n_b = 0;
  int iterations = 0;
  bool converged = false;
  double marginal_error = 0.0;
};

struct SkippedClass {
  int label = -1;
  Index n_a = 0;
  Index n_b = 0;
  std::string reason;
};

struct SimilarityReport {
  std::string pair;
  double s_tilde = 0.0;
  std::vector<ClassResult> per_class;
  std::vector<SkippedClass> skipped;
  double feature_weight = 2.0;
  double label_weight = 1.0;
  double epsilon = 1e-2;
  bool privacy_mode = false;
  std::optional<privacy::PrivacyBudget> budget;
  std::vector<privacy::PartyTranscript> transcripts;

  // sum_y s^y n_a n_b / (sum_y n_a n_b (2 w_f + w_l)) from per_class.
  double recompute_aggregate() const;
  nlohmann::json to_json() const;
  static SimilarityReport from_json(const nlohmann::json& j);
};

SimilarityReport similarity_from_activations(const probe::ActivationSet& a,
                                             const probe::ActivationSet& b,
                                             const MetricConfig& cfg,
                                             const PrivacyMode* privacy = nullptr);

SimilarityReport pairwise_ot_similarity(const Dataset& a, const Dataset& b,
                                        const probe::ModelParams& model, const MetricConfig& cfg,
                                        const PrivacyMode* privacy = nullptr);

struct AllPairsResult {
  Matrix s;  // NaN where a pair failed
  std::vector<std::string> client_ids;
  std::vector<SimilarityReport> reports;  // upper triangle incl. diagonal, row-major
  std::vector<std::string> errors;        // "i,j: message"
};

AllPairsResult cost_matrix_all_pairs(const std::vector<Dataset>& clients,
                                     const probe::ModelParams& model, const MetricConfig& cfg,
                                     const PrivacyMode* privacy = nullptr);

void write_matrix_csv(const AllPairsResult& r, const std::filesystem::path& path);

// Entropic OT cost between all activations of two clients under squared
// Euclidean ground cost with uniform weights; no class structure, no
// normalization.
double wasserstein_baseline(const probe::ActivationSet& a, const probe::ActivationSet& b,
                            double epsilon = 1e-2, double tol = 1e-6);

}  // namespace otcost::metric

namespace otcost::privacy {

// pairwise_ot_similarity with the private path switched on.  Throws
// PrivacyGateError when rho fails the gate for some client class and the
// override flag is not set.
metric::SimilarityReport private_pairwise_similarity(const Dataset& a, const Dataset& b,
                                                     const probe::ModelParams& model,
                                                     const metric::MetricConfig& cfg,
                                                     const PrivacyBudget& budget, uint64_t seed,
                                                     bool override_gate = false);

}  // namespace otcost::privacy
