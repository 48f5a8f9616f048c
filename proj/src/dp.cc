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

#include "otcost/dp.h"

#include <cmath>

namespace otcost::privacy {

PrivacyBudget PrivacyBudget::even_split(double rho, double delta) {
  PrivacyBudget b;
  b.rho = rho;
  b.delta = delta;
  b.rho_mean = rho / 2.0;
  b.rho_cov = rho / 2.0;
  b.validate();
  return b;
}

double PrivacyBudget::epsilon() const { return zcdp_to_dp(rho, delta); }

void PrivacyBudget::validate() const {
  Require(rho > 0.0 && std::isfinite(rho), ErrorCode::kInvalidArgument, "rho must be > 0");
  Require(delta > 0.0 && delta < 1.0, ErrorCode::kInvalidArgument, "delta must lie in (0,1)");
  Require(rho_mean > 0.0 && rho_cov > 0.0, ErrorCode::kInvalidArgument,
          "rho_mean and rho_cov must be > 0");
  Require(std::abs(rho_mean + rho_cov - rho) <= 1e-12 * std::max(1.0, rho),
          ErrorCode::kInvalidArgument, "rho_mean + rho_cov must equal rho");
}

double zcdp_to_dp(double rho, double delta) {
  Require(rho > 0.0 && std::isfinite(rho), ErrorCode::kInvalidArgument, "rho must be > 0");
  Require(delta > 0.0 && delta < 1.0, ErrorCode::kInvalidArgument, "delta must lie in (0,1)");
  return rho + 2.0 * std::sqrt(rho * std::log(1.0 / delta));
}

BudgetCheck check_privacy_budget(double rho, Index d, Index n) {
  Require(d >= 1 && n >= 1, ErrorCode::kInvalidArgument, "d and n must be >= 1");
  BudgetCheck c;
  c.threshold = 6.0 * std::sqrt(static_cast<double>(d)) / static_cast<double>(n);
  c.pass = rho < c.threshold;
  c.margin = c.threshold - rho;
  return c;
}

double mean_noise_stddev(Index n, double rho_mean) {
  Require(n >= 1, ErrorCode::kInvalidArgument, "class count must be >= 1");
  Require(rho_mean > 0.0, ErrorCode::kInvalidArgument, "rho_mean must be > 0");
  return (2.0 / static_cast<double>(n)) / std::sqrt(2.0 * rho_mean);
}

double cov_noise_stddev(Index n, double rho_cov) {
  Require(n >= 1, ErrorCode::kInvalidArgument, "class count must be >= 1");
  Require(rho_cov > 0.0, ErrorCode::kInvalidArgument, "rho_cov must be > 0");
  return (2.0 / static_cast<double>(n)) / std::sqrt(2.0 * rho_cov);
}

Matrix symmetric_gaussian_noise(Index d, double sigma, Rng& rng) {
  std::normal_distribution<double> normal(0.0, sigma);
  Matrix e(d, d);
  for (Index i = 0; i < d; ++i) {
    for (Index j = i; j < d; ++j) {
      e(i, j) = normal(rng);
      e(j, i) = e(i, j);
    }
  }
  return e;
}

Matrix project_psd(const Matrix& m, double floor) {
  const Matrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  Require(eig.info() == Eigen::Success, ErrorCode::kNumerical, "eigendecomposition failed");
  const Vector clipped = eig.eigenvalues().cwiseMax(floor);
  Matrix out = eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

metric::ClassStats add_dp_noise_stats(const metric::ClassStats& s, const PrivacyBudget& budget,
                                      uint64_t seed, double ridge) {
  budget.validate();
  Require(s.count >= 1, ErrorCode::kInvalidArgument, "class statistics have no samples");
  const Index d = s.mean.size();
  Rng rng = MakeRng(seed, 0xD9000000ULL + static_cast<uint64_t>(s.label + 1));
  const double sigma_mu = mean_noise_stddev(s.count, budget.rho_mean);
  const double sigma_cov = cov_noise_stddev(s.count, budget.rho_cov);

  metric::ClassStats out = s;
  std::normal_distribution<double> normal(0.0, sigma_mu);
  for (Index i = 0; i < d; ++i) out.mean(i) += normal(rng);
  out.cov = project_psd(s.cov + symmetric_gaussian_noise(d, sigma_cov, rng), ridge);
  out.noised = true;
  return out;
}

}  // namespace otcost::privacy
