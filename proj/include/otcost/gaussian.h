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

// Gaussian summary of one class's activations.
struct ClassStats {
  int label = -1;
  Vector mean;
  Matrix cov;
  Index count = 0;
  bool noised = false;
};

// Column mean and unbiased covariance plus ridge * I.  Needs >= 2 rows.
ClassStats class_stats(const Matrix& h, int label, double ridge = 1e-4);

// Closed-form Hellinger distance between N(mu_a, S_a) and N(mu_b, S_b):
//   H^2 = 1 - det(S_a)^1/4 det(S_b)^1/4 / det(S)^1/2
//             * exp(-1/8 (mu_a - mu_b)^T S^-1 (mu_a - mu_b)),  S = (S_a + S_b) / 2
// evaluated through Cholesky log-determinants.
double hellinger_gaussian(const ClassStats& a, const ClassStats& b);

}  // namespace otcost::metric
