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

#include "otcost/gaussian.h"

namespace otcost::privacy {

// zCDP budget for one client's class statistics, split between the mean and
// covariance releases.
struct PrivacyBudget {
  double rho = 0.0;
  double delta = 1e-5;
  double rho_mean = 0.0;
  double rho_cov = 0.0;

  static PrivacyBudget even_split(double rho, double delta = 1e-5);
  // (epsilon, delta)-DP equivalent of rho.
  double epsilon() const;
  void validate() const;
};

// Bun-Steinke conversion: epsilon = rho + 2 sqrt(rho ln(1/delta)).
double zcdp_to_dp(double rho, double delta);

struct BudgetCheck {
  bool pass = false;
  double threshold = 0.0;  // 6 sqrt(d) / n
  double margin = 0.0;     // threshold - rho; positive when passing
};

// Reconstruction gate: passes iff rho < 6 sqrt(d) / n (strict).
BudgetCheck check_privacy_budget(double rho, Index d, Index n);

class PrivacyGateError : public Error {
 public:
  PrivacyGateError(const std::string& message, BudgetCheck check)
      : Error(ErrorCode::kPrivacyGate, message), check_(check) {}
  const BudgetCheck& check() const { return check_; }

 private:
  BudgetCheck check_;
};

// Gaussian-mechanism noise scales for statistics of n unit-norm rows under
// replace-one neighbours: sensitivity 2/n for both the mean (l2) and the
// covariance (Frobenius), sigma = sensitivity / sqrt(2 rho).
double mean_noise_stddev(Index n, double rho_mean);
double cov_noise_stddev(Index n, double rho_cov);

// Symmetric d x d matrix whose upper triangle (diagonal included) is iid
// N(0, sigma^2).
Matrix symmetric_gaussian_noise(Index d, double sigma, Rng& rng);

// Eigenvalues below `floor` are raised to `floor`.
Matrix project_psd(const Matrix& m, double floor);

// mu' = mu + N(0, s_mu^2 I);  Sigma' = floor_ridge(Sigma + E).  Statistics must
// come from unit-norm rows for the stated sensitivity to hold.
metric::ClassStats add_dp_noise_stats(const metric::ClassStats& s, const PrivacyBudget& budget,
                                      uint64_t seed, double ridge = 1e-4);

}  // namespace otcost::privacy
