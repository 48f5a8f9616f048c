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

#include "otcost/common.h"

namespace otcost::metric {

enum class CostComponent { kFeature, kLabel, kTotal };

// kCosine: 1 - <z_i, z_j>.  kSpherical: ||z_i - z_j|| = sqrt(2 (1 - cos)).
// Both lie in [0, 2] on unit rows.
enum class FeatureCostKind { kCosine, kSpherical };

const char* FeatureCostName(FeatureCostKind kind);
FeatureCostKind ParseFeatureCost(const std::string& name);

struct CostMatrix {
  int label = -1;
  Matrix values;
  CostComponent component = CostComponent::kFeature;
};

// Scales each row to unit l2 norm.  A zero row is an error naming its index.
Matrix l2_normalize(const Matrix& h);

// Pairwise dissimilarity between the rows of h_a and h_b after
// normalization; entries are clamped to [0, 2] against rounding.
CostMatrix feature_cost(const Matrix& h_a, const Matrix& h_b,
                        FeatureCostKind kind = FeatureCostKind::kCosine, int label = -1);

// Same, starting from the inner products of already normalized rows.
CostMatrix feature_cost_from_products(const Matrix& products,
                                      FeatureCostKind kind = FeatureCostKind::kCosine,
                                      int label = -1);

// w_f * C_feat + w_l * h; the label term is a per-class constant.
CostMatrix total_cost(const CostMatrix& feat, double hellinger, double feature_weight,
                      double label_weight);

}  // namespace otcost::metric
