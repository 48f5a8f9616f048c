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

#include "otcost/cost.h"

#include <cmath>

namespace otcost::metric {

const char* FeatureCostName(FeatureCostKind kind) {
  return kind == FeatureCostKind::kCosine ? "cosine" : "spherical";
}

FeatureCostKind ParseFeatureCost(const std::string& name) {
  if (name == "cosine") return FeatureCostKind::kCosine;
  if (name == "spherical") return FeatureCostKind::kSpherical;
  Fail(ErrorCode::kInvalidArgument, "unknown feature cost '" + name + "'");
}

Matrix l2_normalize(const Matrix& h) {
  Matrix out(h.rows(), h.cols());
  for (Index i = 0; i < h.rows(); ++i) {
    const double n = h.row(i).norm();
    Require(n > 0.0 && std::isfinite(n), ErrorCode::kNumerical,
            "cannot normalize row " + std::to_string(i) + ": norm is " + std::to_string(n));
    out.row(i) = h.row(i) / n;
  }
  return out;
}

CostMatrix feature_cost_from_products(const Matrix& products, FeatureCostKind kind, int label) {
  CostMatrix c;
  c.label = label;
  c.component = CostComponent::kFeature;
  const auto one_minus = (1.0 - products.array()).cwiseMax(0.0).cwiseMin(2.0);
  if (kind == FeatureCostKind::kCosine) {
    c.values = one_minus.matrix();
  } else {
    c.values = (2.0 * one_minus).sqrt().cwiseMin(2.0).matrix();
  }
  return c;
}

CostMatrix feature_cost(const Matrix& h_a, const Matrix& h_b, FeatureCostKind kind, int label) {
  Require(h_a.rows() > 0 && h_b.rows() > 0, ErrorCode::kInvalidArgument,
          "feature cost needs nonempty activation sets");
  Require(h_a.cols() == h_b.cols(), ErrorCode::kShapeMismatch,
          "activation dimensions differ: " + std::to_string(h_a.cols()) + " vs " +
              std::to_string(h_b.cols()));
  const Matrix za = l2_normalize(h_a);
  const Matrix zb = l2_normalize(h_b);
  return feature_cost_from_products(za * zb.transpose(), kind, label);
}

CostMatrix total_cost(const CostMatrix& feat, double hellinger, double feature_weight,
                      double label_weight) {
  Require(hellinger >= 0.0 && hellinger <= 1.0, ErrorCode::kInvalidArgument,
          "label cost must lie in [0,1], got " + std::to_string(hellinger));
  Require(feature_weight > 0.0 && label_weight > 0.0, ErrorCode::kInvalidArgument,
          "cost weights must be positive");
  CostMatrix c;
  c.label = feat.label;
  c.component = CostComponent::kTotal;
  c.values = (feature_weight * feat.values.array() + label_weight * hellinger).matrix();
  return c;
}

}  // namespace otcost::metric
