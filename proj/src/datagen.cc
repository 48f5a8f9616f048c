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

#include "otcost/datagen.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace otcost::datagen {
namespace {

Vector RandomUnit(Index p, Rng& rng) {
  std::normal_distribution<double> normal;
  Vector v(p);
  do {
    for (Index i = 0; i < p; ++i) v(i) = normal(rng);
  } while (v.norm() < 1e-12);
  return v / v.norm();
}

Matrix RandomOrthogonal(Index p, Rng& rng) {
  std::normal_distribution<double> normal;
  Matrix g(p, p);
  for (Index i = 0; i < p; ++i) {
    for (Index j = 0; j < p; ++j) g(i, j) = normal(rng);
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  // Sign-fix so the factorization is unique.
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < p; ++j) {
    if (r(j, j) < 0) q.col(j) *= -1.0;
  }
  return q;
}

struct Mixture {
  std::vector<Vector> means;
  double stddev = 1.0;
};

void SampleInto(const Mixture& m, int label, Rng& rng, Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> row) {
  std::normal_distribution<double> normal;
  const Vector& mu = m.means[static_cast<std::size_t>(label)];
  for (Index j = 0; j < row.size(); ++j) row(j) = mu(j) + m.stddev * normal(rng);
}

std::vector<int> BalancedLabels(int n, int k, Rng& rng) {
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = i % k;
  std::shuffle(labels.begin(), labels.end(), rng);
  return labels;
}

std::pair<Mixture, Mixture> BuildMixtures(const SyntheticConfig& cfg) {
  Rng rng = MakeRng(cfg.seed, 1);
  Mixture a;
  Mixture b;
  a.stddev = b.stddev = cfg.covariance_scale;
  // Orthogonal class directions when the dimension allows, so every pair of
  // components is equally far apart regardless of seed.
  const Index k = cfg.num_classes;
  const Matrix q = RandomOrthogonal(cfg.dim, rng);
  const auto direction = [&](Index i) -> Vector {
    return i < cfg.dim ? Vector(q.col(i)) : RandomUnit(cfg.dim, rng);
  };
  for (Index c = 0; c < k; ++c) a.means.push_back(cfg.mean_separation * direction(c));
  for (Index c = 0; c < k; ++c) {
    const Vector& borrowed = a.means[static_cast<std::size_t>((c + 1) % k)];
    b.means.push_back(borrowed + cfg.disjoint_offset * cfg.mean_separation * direction(k + c));
  }
  return {std::move(a), std::move(b)};
}

}  // namespace

void SyntheticConfig::validate() const {
  Require(dim >= 2, ErrorCode::kInvalidArgument, "synthetic dim must be >= 2");
  Require(num_classes >= 2, ErrorCode::kInvalidArgument, "synthetic num_classes must be >= 2");
  Require(samples_per_client >= num_classes, ErrorCode::kInvalidArgument,
          "samples_per_client must be >= num_classes");
  Require(overlap >= 0.0 && overlap <= 1.0, ErrorCode::kInvalidArgument,
          "overlap must lie in [0,1], got " + std::to_string(overlap));
  Require(mean_separation > 0.0 && std::isfinite(mean_separation), ErrorCode::kInvalidArgument,
          "mean_separation must be positive");
  Require(covariance_scale > 0.0 && std::isfinite(covariance_scale),
          ErrorCode::kInvalidArgument, "covariance_scale must be positive");
  Require(disjoint_offset >= 0.0, ErrorCode::kInvalidArgument,
          "disjoint_offset must be nonnegative");
}

std::pair<Dataset, Dataset> gen_synthetic_pair(const SyntheticConfig& cfg) {
  cfg.validate();
  const auto [mix_a, mix_b] = BuildMixtures(cfg);
  Rng rng_a = MakeRng(cfg.seed, 2);
  Rng rng_b = MakeRng(cfg.seed, 3);

  Dataset a;
  a.num_classes = cfg.num_classes;
  a.labels = BalancedLabels(cfg.samples_per_client, cfg.num_classes, rng_a);
  a.features.resize(cfg.samples_per_client, cfg.dim);
  for (Index i = 0; i < a.size(); ++i) {
    SampleInto(mix_a, a.labels[static_cast<std::size_t>(i)], rng_a, a.features.row(i));
  }

  Dataset b;
  b.num_classes = cfg.num_classes;
  b.labels = BalancedLabels(cfg.samples_per_client, cfg.num_classes, rng_b);
  b.features.resize(cfg.samples_per_client, cfg.dim);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (Index i = 0; i < b.size(); ++i) {
    // Always consume the coin so the sample stream does not depend on overlap.
    const bool from_a = unit(rng_b) < cfg.overlap;
    SampleInto(from_a ? mix_a : mix_b, b.labels[static_cast<std::size_t>(i)], rng_b,
               b.features.row(i));
  }
  return {std::move(a), std::move(b)};
}

Dataset gen_synthetic_pool(const SyntheticConfig& cfg, int n) {
  cfg.validate();
  Require(n >= cfg.num_classes, ErrorCode::kInvalidArgument, "pool size must be >= num_classes");
  const auto mixtures = BuildMixtures(cfg);
  Rng rng = MakeRng(cfg.seed, 4);
  Dataset d;
  d.num_classes = cfg.num_classes;
  d.labels = BalancedLabels(n, cfg.num_classes, rng);
  d.features.resize(n, cfg.dim);
  for (Index i = 0; i < d.size(); ++i) {
    SampleInto(mixtures.first, d.labels[static_cast<std::size_t>(i)], rng, d.features.row(i));
  }
  return d;
}

const char* HeterogeneityName(HeterogeneityKind kind) {
  switch (kind) {
    case HeterogeneityKind::kFeatureSkew: return "feature_skew";
    case HeterogeneityKind::kLabelSkew: return "label_skew";
    case HeterogeneityKind::kConceptShift: return "concept_shift";
  }
  return "unknown";
}

HeterogeneityKind ParseHeterogeneity(const std::string& name) {
  if (name == "feature_skew") return HeterogeneityKind::kFeatureSkew;
  if (name == "label_skew") return HeterogeneityKind::kLabelSkew;
  if (name == "concept_shift") return HeterogeneityKind::kConceptShift;
  Fail(ErrorCode::kInvalidArgument, "unknown heterogeneity kind '" + name + "'");
}

void HeterogeneitySpec::validate() const {
  switch (kind) {
    case HeterogeneityKind::kFeatureSkew:
      Require(severity >= 0.0 && std::isfinite(severity), ErrorCode::kInvalidArgument,
              "feature skew severity must be >= 0");
      break;
    case HeterogeneityKind::kLabelSkew:
      Require(severity > 0.0 && std::isfinite(severity), ErrorCode::kInvalidArgument,
              "Dirichlet concentration must be > 0");
      break;
    case HeterogeneityKind::kConceptShift:
      Require(severity >= 0.0 && severity <= 1.0, ErrorCode::kInvalidArgument,
              "concept shift fraction must lie in [0,1]");
      break;
  }
}

Dataset apply_feature_skew(const Dataset& d, double severity, uint64_t seed) {
  d.validate();
  Require(severity >= 0.0 && std::isfinite(severity), ErrorCode::kInvalidArgument,
          "feature skew severity must be >= 0, got " + std::to_string(severity));
  const Index p = d.dim();
  Rng rng = MakeRng(seed, 0xF5);
  const Vector direction = RandomUnit(p, rng);
  const Matrix basis = RandomOrthogonal(p, rng);

  // Block-diagonal plane rotations minus identity, expressed in `basis`.
  const double angle = severity * std::numbers::pi / 4.0;
  Matrix blocks = Matrix::Zero(p, p);
  for (Index k = 0; k + 1 < p; k += 2) {
    blocks(k, k) = std::cos(angle) - 1.0;
    blocks(k + 1, k + 1) = std::cos(angle) - 1.0;
    blocks(k, k + 1) = -std::sin(angle);
    blocks(k + 1, k) = std::sin(angle);
  }
  const Matrix rot_minus_identity = basis * blocks * basis.transpose();
  const Eigen::RowVectorXd centroid = d.features.colwise().mean();

  Dataset out = d;
  const Matrix centred = d.features.rowwise() - centroid;
  out.features += centred * rot_minus_identity.transpose();
  out.features.rowwise() += (severity * direction).transpose();
  return out;
}

LabelSkewPartition apply_label_skew(const Dataset& d, double alpha_dir, int n_clients,
                                    uint64_t seed) {
  d.validate();
  Require(alpha_dir > 0.0 && std::isfinite(alpha_dir), ErrorCode::kInvalidArgument,
          "Dirichlet concentration must be > 0");
  Require(n_clients >= 2, ErrorCode::kInvalidArgument, "label skew needs n_clients >= 2");
  Rng rng = MakeRng(seed, 0xD1);
  std::gamma_distribution<double> gamma(alpha_dir, 1.0);

  LabelSkewPartition out;
  out.source_rows.resize(static_cast<std::size_t>(n_clients));
  for (int c = 0; c < d.num_classes; ++c) {
    auto rows = d.rows_of_class(c);
    if (rows.empty()) continue;
    std::shuffle(rows.begin(), rows.end(), rng);

    std::vector<double> props(static_cast<std::size_t>(n_clients));
    double total = 0.0;
    for (auto& w : props) {
      w = gamma(rng);
      total += w;
    }
    if (!(total > 0.0)) {
      // All draws underflowed; the limit is a point mass on one client.
      std::fill(props.begin(), props.end(), 0.0);
      props[std::uniform_int_distribution<std::size_t>(0, props.size() - 1)(rng)] = 1.0;
      total = 1.0;
    }
    const auto n_c = static_cast<double>(rows.size());
    double cumulative = 0.0;
    std::size_t begin = 0;
    for (int k = 0; k < n_clients; ++k) {
      cumulative += props[static_cast<std::size_t>(k)] / total;
      std::size_t end = k + 1 == n_clients ? rows.size()
                                            : static_cast<std::size_t>(std::llround(cumulative * n_c));
      end = std::clamp(end, begin, rows.size());
      auto& dest = out.source_rows[static_cast<std::size_t>(k)];
      dest.insert(dest.end(), rows.begin() + static_cast<long>(begin),
                  rows.begin() + static_cast<long>(end));
      if (end == begin) out.empty_slices.emplace_back(k, c);
      begin = end;
    }
  }
  for (auto& rows : out.source_rows) {
    std::sort(rows.begin(), rows.end());
    out.clients.push_back(d.subset(rows));
  }
  return out;
}

std::vector<int> random_derangement(int k, Rng& rng) {
  Require(k >= 2, ErrorCode::kInvalidArgument, "a derangement needs at least 2 classes");
  std::vector<int> perm(static_cast<std::size_t>(k));
  while (true) {
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    bool fixed_point = false;
    for (int i = 0; i < k; ++i) fixed_point |= perm[static_cast<std::size_t>(i)] == i;
    if (!fixed_point) return perm;
  }
}

Dataset apply_concept_shift(const Dataset& d, double fraction, uint64_t seed) {
  d.validate();
  Require(fraction >= 0.0 && fraction <= 1.0, ErrorCode::kInvalidArgument,
          "concept shift fraction must lie in [0,1]");
  Require(d.num_classes >= 2, ErrorCode::kInvalidArgument,
          "concept shift needs K >= 2 (no derangement of one class)");
  Rng rng = MakeRng(seed, 0xC5);
  const auto sigma = random_derangement(d.num_classes, rng);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Dataset out = d;
  for (auto& y : out.labels) {
    if (unit(rng) < fraction) y = sigma[static_cast<std::size_t>(y)];
  }
  return out;
}

}  // namespace otcost::datagen
