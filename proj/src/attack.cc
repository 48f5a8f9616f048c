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

#include "otcost/attack.h"

#include <algorithm>
#include <cmath>

#include "otcost/cost.h"
#include "otcost/dp.h"

namespace otcost::privacy {
namespace {

Matrix TopEigenvectors(const Matrix& m, int k) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (m + m.transpose()));
  Require(eig.info() == Eigen::Success, ErrorCode::kNumerical, "eigendecomposition failed");
  // Eigenvalues come back ascending.
  return eig.eigenvectors().rightCols(k);
}

}  // namespace

double subspace_alignment(const Matrix& u, const Matrix& v) {
  Require(u.rows() == v.rows() && u.cols() == v.cols() && u.cols() > 0,
          ErrorCode::kShapeMismatch, "subspace bases must have matching shapes");
  Eigen::JacobiSVD<Matrix> svd(u.transpose() * v);
  const Vector cosines = svd.singularValues().cwiseMin(1.0).cwiseMax(0.0);
  return cosines.mean();
}

AttackResult svd_reconstruction_attack(const Matrix& noisy_cov, const Matrix& true_h, int k,
                                       double rho) {
  const Index d = true_h.cols();
  Require(noisy_cov.rows() == d && noisy_cov.cols() == d, ErrorCode::kShapeMismatch,
          "noisy covariance must be d x d with d = activation width");
  Require(k >= 1 && k <= d, ErrorCode::kInvalidArgument,
          "k must lie in [1, " + std::to_string(d) + "], got " + std::to_string(k));
  const Matrix z = metric::l2_normalize(true_h);
  AttackResult r;
  r.k = k;
  r.rho = rho;
  r.alignment = subspace_alignment(TopEigenvectors(noisy_cov, k),
                                   TopEigenvectors(z.transpose() * z, k));
  return r;
}

Matrix noisy_gram(const Matrix& h, double rho, uint64_t seed) {
  Require(rho > 0.0, ErrorCode::kInvalidArgument, "rho must be > 0");
  const Matrix z = metric::l2_normalize(h);
  Rng rng = MakeRng(seed, 0x6A4D);
  const double sigma = 2.0 / std::sqrt(2.0 * rho);
  return z.transpose() * z + symmetric_gaussian_noise(h.cols(), sigma, rng);
}

}  // namespace otcost::privacy
