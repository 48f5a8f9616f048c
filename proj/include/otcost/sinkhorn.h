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

struct SinkhornOptions {
  double epsilon = 1e-2;
  // Stop once the l1 violation of the column marginal (rows are exact after
  // each sweep) drops below tol.
  double tol = 1e-6;
  int max_iter = 10000;
  // Warm-start from a geometric schedule of larger epsilons.  The final
  // sweeps always run at `epsilon`.
  bool epsilon_scaling = true;

  void validate() const;
};

struct TransportPlan {
  Matrix plan;  // coupling with exact marginals (a, b)
  Vector a;
  Vector b;
  double cost = 0.0;  // <plan, C>; no entropy term
  int iterations = 0;
  bool converged = false;
  // l1 marginal violation of the raw Sinkhorn iterate before rounding.
  double marginal_error = 0.0;
};

// Entropic OT between histograms a and b (strictly positive, summing to 1)
// under cost C, solved with log-domain Sinkhorn updates.  The final iterate is
// projected onto the transport polytope so the returned plan is feasible and
// its cost never undercuts the exact optimum.  Non-convergence is reported via
// `converged`, not thrown.
TransportPlan sinkhorn(const Matrix& cost, const Vector& a, const Vector& b,
                       const SinkhornOptions& opts = {});

inline Vector uniform_marginal(Index n) {
  return Vector::Constant(n, 1.0 / static_cast<double>(n));
}

}  // namespace otcost::metric
