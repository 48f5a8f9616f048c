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

#include "otcost/similarity.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "otcost/gaussian.h"
#include "otcost/secure_product.h"

namespace otcost::metric {
namespace {

Matrix RowsOf(const Matrix& h, const std::vector<int>& labels, int c) {
  std::vector<Index> rows;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == c) rows.push_back(static_cast<Index>(i));
  }
  Matrix out(static_cast<Index>(rows.size()), h.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = h.row(rows[i]);
  return out;
}

Index CountOf(const std::vector<int>& labels, int c) {
  return static_cast<Index>(std::count(labels.begin(), labels.end(), c));
}

void GateOrThrow(const PrivacyMode& p, Index d, Index n, const std::string& who, int c) {
  const auto check = privacy::check_privacy_budget(p.budget.rho, d, n);
  if (check.pass || p.override_gate) return;
  std::ostringstream msg;
  msg << "privacy gate refused: rho=" << p.budget.rho << " >= 6*sqrt(d)/n=" << check.threshold
      << " for client " << who << " class " << c << " (d=" << d << ", n=" << n << ")";
  throw privacy::PrivacyGateError(msg.str(), check);
}

}  // namespace

int MetricConfig::min_samples(Index d) const {
  int floor = std::max(min_samples_per_class, 2);
  if (enforce_dimension_floor) floor = std::max(floor, static_cast<int>(d) + 1);
  return floor;
}

void MetricConfig::validate() const {
  Require(feature_weight > 0.0 && label_weight > 0.0, ErrorCode::kInvalidArgument,
          "w_f and w_l must be > 0");
  sinkhorn.validate();
  Require(min_samples_per_class >= 2, ErrorCode::kInvalidArgument,
          "min samples per class must be >= 2");
  Require(covariance_ridge > 0.0, ErrorCode::kInvalidArgument, "covariance ridge must be > 0");
}

double SimilarityReport::recompute_aggregate() const {
  double s_total = 0.0;
  double n_total = 0.0;
  for (const auto& c : per_class) {
    const double w = static_cast<double>(c.n_a) * static_cast<double>(c.n_b);
    s_total += c.cost * w;
    n_total += w;
  }
  if (n_total == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return std::clamp(s_total / (n_total * (2.0 * feature_weight + label_weight)), 0.0, 1.0);
}

nlohmann::json SimilarityReport::to_json() const {
  nlohmann::json j;
  j["pair"] = pair;
  j["s_tilde"] = s_tilde;
  auto& pc = j["per_class"] = nlohmann::json::array();
  for (const auto& c : per_class) {
    pc.push_back({{"class", c.label},
                  {"cost", c.cost},
                  {"feature_cost", c.feature_cost},
                  {"label_cost", c.label_cost},
                  {"n_a", c.n_a},
                  {"n_b", c.n_b},
                  {"iterations", c.iterations},
                  {"converged", c.converged},
                  {"marginal_error", c.marginal_error}});
  }
  auto& sk = j["skipped"] = nlohmann::json::array();
  for (const auto& s : skipped) {
    sk.push_back({{"class", s.label}, {"n_a", s.n_a}, {"n_b", s.n_b}, {"reason", s.reason}});
  }
  j["weights"] = {{"feature", feature_weight}, {"label", label_weight}};
  j["epsilon"] = epsilon;
  j["privacy_mode"] = privacy_mode;
  if (budget) {
    j["budget"] = {{"rho", budget->rho},
                   {"delta", budget->delta},
                   {"rho_mean", budget->rho_mean},
                   {"rho_cov", budget->rho_cov},
                   {"epsilon_dp", budget->epsilon()}};
  } else {
    j["budget"] = nullptr;
  }
  if (!transcripts.empty()) {
    auto& ts = j["transcripts"] = nlohmann::json::array();
    for (const auto& t : transcripts) ts.push_back(t.to_json());
  }
  return j;
}

SimilarityReport SimilarityReport::from_json(const nlohmann::json& j) {
  SimilarityReport r;
  r.pair = j.at("pair").get<std::string>();
  r.s_tilde = j.at("s_tilde").get<double>();
  for (const auto& c : j.at("per_class")) {
    ClassResult cr;
    cr.label = c.at("class").get<int>();
    cr.cost = c.at("cost").get<double>();
    cr.feature_cost = c.at("feature_cost").get<double>();
    cr.label_cost = c.at("label_cost").get<double>();
    cr.n_a = c.at("n_a").get<Index>();
    cr.n_b = c.at("n_b").get<Index>();
    cr.iterations = c.at("iterations").get<int>();
    cr.converged = c.at("converged").get<bool>();
    cr.marginal_error = c.at("marginal_error").get<double>();
    r.per_class.push_back(cr);
  }
  for (const auto& s : j.at("skipped")) {
    r.skipped.push_back({s.at("class").get<int>(), s.at("n_a").get<Index>(),
                         s.at("n_b").get<Index>(), s.at("reason").get<std::string>()});
  }
  r.feature_weight = j.at("weights").at("feature").get<double>();
  r.label_weight = j.at("weights").at("label").get<double>();
  r.epsilon = j.at("epsilon").get<double>();
  r.privacy_mode = j.at("privacy_mode").get<bool>();
  if (j.contains("budget") && !j.at("budget").is_null()) {
    privacy::PrivacyBudget b;
    b.rho = j["budget"].at("rho").get<double>();
    b.delta = j["budget"].at("delta").get<double>();
    b.rho_mean = j["budget"].at("rho_mean").get<double>();
    b.rho_cov = j["budget"].at("rho_cov").get<double>();
    r.budget = b;
  }
  return r;
}

SimilarityReport similarity_from_activations(const probe::ActivationSet& a,
                                             const probe::ActivationSet& b,
                                             const MetricConfig& cfg,
                                             const PrivacyMode* privacy) {
  cfg.validate();
  Require(a.dim() == b.dim() && a.dim() > 0, ErrorCode::kShapeMismatch,
          "activation widths differ: " + std::to_string(a.dim()) + " vs " +
              std::to_string(b.dim()));
  Require(static_cast<Index>(a.labels.size()) == a.size() &&
              static_cast<Index>(b.labels.size()) == b.size(),
          ErrorCode::kShapeMismatch, "activation rows and labels disagree");
  Require(a.h.allFinite() && b.h.allFinite(), ErrorCode::kNumerical,
          "activations contain NaN/Inf");
  if (privacy != nullptr) privacy->budget.validate();

  const Index d = a.dim();
  const int k = std::max(a.num_classes, b.num_classes);
  const int min_n = cfg.min_samples(d);

  SimilarityReport r;
  r.pair = (a.client_id.empty() ? "A" : a.client_id) + "|" + (b.client_id.empty() ? "B" : b.client_id);
  r.feature_weight = cfg.feature_weight;
  r.label_weight = cfg.label_weight;
  r.epsilon = cfg.sinkhorn.epsilon;
  r.privacy_mode = privacy != nullptr;
  if (privacy != nullptr) r.budget = privacy->budget;

  std::vector<int> eligible;
  for (int c = 0; c < k; ++c) {
    const Index na = CountOf(a.labels, c);
    const Index nb = CountOf(b.labels, c);
    if (na == 0 && nb == 0) continue;
    if (na == 0 || nb == 0) {
      r.skipped.push_back({c, na, nb, na == 0 ? "absent from first client" : "absent from second client"});
    } else if (na < min_n || nb < min_n) {
      r.skipped.push_back({c, na, nb, "fewer than " + std::to_string(min_n) + " samples"});
    } else {
      eligible.push_back(c);
    }
  }
  if (eligible.empty()) {
    std::ostringstream msg;
    msg << "no shared class with >= " << min_n << " samples on both sides; counts (class:a/b):";
    for (const auto& s : r.skipped) msg << ' ' << s.label << ':' << s.n_a << '/' << s.n_b;
    Fail(ErrorCode::kInsufficientData, msg.str());
  }
  if (privacy != nullptr) {
    for (int c : eligible) {
      GateOrThrow(*privacy, d, CountOf(a.labels, c), "A", c);
      GateOrThrow(*privacy, d, CountOf(b.labels, c), "B", c);
    }
  }

  double s_total = 0.0;
  double n_total = 0.0;
  for (int c : eligible) {
    const Matrix za = l2_normalize(RowsOf(a.h, a.labels, c));
    const Matrix zb = l2_normalize(RowsOf(b.h, b.labels, c));
    const auto cls = static_cast<uint64_t>(c);

    CostMatrix feat;
    ClassStats sa = class_stats(za, c, cfg.covariance_ridge);
    ClassStats sb = class_stats(zb, c, cfg.covariance_ridge);
    if (privacy == nullptr) {
      feat = feature_cost_from_products(za * zb.transpose(), cfg.feature_cost, c);
    } else {
      auto smc = privacy::secure_dot_product(za, zb, MixSeed(privacy->seed, 0x5EC0000ULL + cls));
      feat = feature_cost_from_products(smc.product, cfg.feature_cost, c);
      if (privacy->keep_transcripts) r.transcripts.push_back(std::move(smc.transcript));
      sa = privacy::add_dp_noise_stats(sa, privacy->budget, MixSeed(privacy->seed, 2 * cls),
                                       cfg.covariance_ridge);
      sb = privacy::add_dp_noise_stats(sb, privacy->budget, MixSeed(privacy->seed, 2 * cls + 1),
                                       cfg.covariance_ridge);
    }
    const double h = hellinger_gaussian(sa, sb);
    const CostMatrix total = total_cost(feat, h, cfg.feature_weight, cfg.label_weight);
    const TransportPlan plan = sinkhorn(total.values, uniform_marginal(za.rows()),
                                        uniform_marginal(zb.rows()), cfg.sinkhorn);

    ClassResult cr;
    cr.label = c;
    cr.cost = plan.cost;
    cr.feature_cost = (plan.plan.array() * feat.values.array()).sum();
    cr.label_cost = h;
    cr.n_a = za.rows();
    cr.n_b = zb.rows();
    cr.iterations = plan.iterations;
    cr.converged = plan.converged;
    cr.marginal_error = plan.marginal_error;
    r.per_class.push_back(cr);

    const double w = static_cast<double>(cr.n_a) * static_cast<double>(cr.n_b);
    s_total += cr.cost * w;
    n_total += w;
  }
  r.s_tilde = std::clamp(s_total / (n_total * cfg.normalizer()), 0.0, 1.0);
  return r;
}

SimilarityReport pairwise_ot_similarity(const Dataset& a, const Dataset& b,
                                        const probe::ModelParams& model, const MetricConfig& cfg,
                                        const PrivacyMode* privacy) {
  const auto act_a = probe::extract_activations(a, model, "A");
  const auto act_b = probe::extract_activations(b, model, "B");
  return similarity_from_activations(act_a, act_b, cfg, privacy);
}

AllPairsResult cost_matrix_all_pairs(const std::vector<Dataset>& clients,
                                     const probe::ModelParams& model, const MetricConfig& cfg,
                                     const PrivacyMode* privacy) {
  Require(clients.size() >= 2, ErrorCode::kInvalidArgument, "all-pairs needs >= 2 clients");
  const auto n = static_cast<Index>(clients.size());
  AllPairsResult out;
  out.s = Matrix::Constant(n, n, std::numeric_limits<double>::quiet_NaN());
  std::vector<probe::ActivationSet> acts;
  for (Index i = 0; i < n; ++i) {
    out.client_ids.push_back("client" + std::to_string(i));
    acts.push_back(probe::extract_activations(clients[static_cast<std::size_t>(i)], model,
                                              out.client_ids.back()));
  }
  for (Index i = 0; i < n; ++i) {
    for (Index j = i; j < n; ++j) {
      try {
        auto rep = similarity_from_activations(acts[static_cast<std::size_t>(i)],
                                               acts[static_cast<std::size_t>(j)], cfg, privacy);
        out.s(i, j) = out.s(j, i) = rep.s_tilde;
        out.reports.push_back(std::move(rep));
      } catch (const privacy::PrivacyGateError&) {
        throw;
      } catch (const Error& e) {
        out.errors.push_back(std::to_string(i) + "," + std::to_string(j) + ": " + e.what());
      }
    }
  }
  return out;
}

void write_matrix_csv(const AllPairsResult& r, const std::filesystem::path& path) {
  std::ofstream out(path);
  Require(out.good(), ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out << "client";
  for (const auto& id : r.client_ids) out << ',' << id;
  out << '\n';
  out.precision(17);
  for (Index i = 0; i < r.s.rows(); ++i) {
    out << r.client_ids[static_cast<std::size_t>(i)];
    for (Index j = 0; j < r.s.cols(); ++j) {
      out << ',';
      if (std::isfinite(r.s(i, j))) out << r.s(i, j);
    }
    out << '\n';
  }
  Require(out.good(), ErrorCode::kIo, "write failed for " + path.string());
}

double wasserstein_baseline(const probe::ActivationSet& a, const probe::ActivationSet& b,
                            double epsilon, double tol) {
  Require(a.size() > 0 && b.size() > 0, ErrorCode::kInvalidArgument,
          "Wasserstein baseline needs nonempty activation sets");
  Require(a.dim() == b.dim(), ErrorCode::kShapeMismatch, "activation widths differ");
  const Vector na = a.h.rowwise().squaredNorm();
  const Vector nb = b.h.rowwise().squaredNorm();
  Matrix c = -2.0 * a.h * b.h.transpose();
  c.colwise() += na;
  c.rowwise() += nb.transpose();
  c = c.cwiseMax(0.0);
  SinkhornOptions opts;
  opts.epsilon = epsilon;
  opts.tol = tol;
  return sinkhorn(c, uniform_marginal(a.size()), uniform_marginal(b.size()), opts).cost;
}

}  // namespace otcost::metric

namespace otcost::privacy {

metric::SimilarityReport private_pairwise_similarity(const Dataset& a, const Dataset& b,
                                                     const probe::ModelParams& model,
                                                     const metric::MetricConfig& cfg,
                                                     const PrivacyBudget& budget, uint64_t seed,
                                                     bool override_gate) {
  metric::PrivacyMode mode;
  mode.budget = budget;
  mode.seed = seed;
  mode.override_gate = override_gate;
  return metric::pairwise_ot_similarity(a, b, model, cfg, &mode);
}

}  // namespace otcost::privacy
