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

#include "otcost/gaussian.h"

#include <algorithm>
#include <cmath>

namespace otcost::metric {
namespace {

double LogDet(const Eigen::LLT<Matrix>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

Eigen::LLT<Matrix> Factor(const Matrix& cov, const char* which) {
  Eigen::LLT<Matrix> llt(cov);
  Require(llt.info() == Eigen::Success, ErrorCode::kNumerical,
          std::string("covariance ") + which + " is not positive definite");
  return llt;
}

}  // namespace

ClassStats class_stats(const Matrix& h, int label, double ridge) {
  Require(h.rows() >= 2, ErrorCode::kInsufficientData,
          "class " + std::to_string(label) + " needs >= 2 samples for a covariance, got " +
              std::to_string(h.rows()));
  Require(ridge >= 0.0, ErrorCode::kInvalidArgument, "covariance ridge must be >= 0");
  Require(h.allFinite(), ErrorCode::kNumerical, "class activations contain NaN/Inf");
  ClassStats s;
  s.label = label;
  s.count = h.rows();
  s.mean = h.colwise().mean().transpose();
  const Matrix centred = h.rowwise() - s.mean.transpose();
  s.cov = (centred.transpose() * centred) / static_cast<double>(h.rows() - 1);
  s.cov = 0.5 * (s.cov + s.cov.transpose());
  s.cov.diagonal().array() += ridge;
  return s;
}

double hellinger_gaussian(const ClassStats& a, const ClassStats& b) {
  Require(a.mean.size() == b.mean.size() && a.cov.rows() == b.cov.rows() &&
              a.cov.rows() == a.mean.size() && a.cov.cols() == a.cov.rows() &&
              b.cov.cols() == b.cov.rows(),
          ErrorCode::kShapeMismatch, "class statistics have mismatched dimensions");
  const auto llt_a = Factor(a.cov, "A");
  const auto llt_b = Factor(b.cov, "B");
  const Matrix avg = 0.5 * (a.cov + b.cov);
  const auto llt_avg = Factor(avg, "average");
  const Vector diff = a.mean - b.mean;
  const double maha = diff.dot(llt_avg.solve(diff));
  const double log_bc =
      0.25 * LogDet(llt_a) + 0.25 * LogDet(llt_b) - 0.5 * LogDet(llt_avg) - 0.125 * maha;
  // log_bc <= 0 analytically; clamp guards rounding.
  const double h2 = -std::expm1(std::min(log_bc, 0.0));
  return std::clamp(std::sqrt(std::max(h2, 0.0)), 0.0, 1.0);
}

}  // namespace otcost::metric
