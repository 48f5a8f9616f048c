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

#include "otcost/sinkhorn.h"

#include <algorithm>
#include <cmath>

namespace otcost::metric {
namespace {

using Array = Eigen::ArrayXXd;
using ArrayV = Eigen::ArrayXd;

// log sum_i exp(k_ij + u_i) for every column j.
ArrayV ColumnLse(const Array& k, const ArrayV& u) {
  const Array t = k.colwise() + u;
  const Eigen::Array<double, 1, Eigen::Dynamic> mx = t.colwise().maxCoeff();
  return (mx + (t.rowwise() - mx).exp().colwise().sum().log()).transpose();
}

// log sum_j exp(k_ij + v_j) for every row i.
ArrayV RowLse(const Array& k, const ArrayV& v) {
  const Array t = k.rowwise() + v.transpose();
  const ArrayV mx = t.rowwise().maxCoeff();
  return mx + (t.colwise() - mx).exp().rowwise().sum().log();
}

// Altschuler-Weed-Rigollet rounding onto U(a, b).
Matrix RoundToPolytope(Matrix p, const Vector& a, const Vector& b) {
  const Vector rows = p.rowwise().sum();
  for (Index i = 0; i < p.rows(); ++i) {
    if (rows(i) > a(i)) p.row(i) *= a(i) / rows(i);
  }
  const Vector cols = p.colwise().sum().transpose();
  for (Index j = 0; j < p.cols(); ++j) {
    if (cols(j) > b(j)) p.col(j) *= b(j) / cols(j);
  }
  const Vector err_a = (a - p.rowwise().sum()).cwiseMax(0.0);
  const Vector err_b = (b - p.colwise().sum().transpose()).cwiseMax(0.0);
  const double mass = err_a.sum();
  if (mass > 0.0) p += err_a * err_b.transpose() / mass;
  return p;
}

}  // namespace

void SinkhornOptions::validate() const {
  Require(epsilon > 0.0 && std::isfinite(epsilon), ErrorCode::kInvalidArgument,
          "Sinkhorn epsilon must be > 0");
  Require(tol > 0.0, ErrorCode::kInvalidArgument, "Sinkhorn tolerance must be > 0");
  Require(max_iter >= 1, ErrorCode::kInvalidArgument, "Sinkhorn max_iter must be >= 1");
}

TransportPlan sinkhorn(const Matrix& cost, const Vector& a, const Vector& b,
                       const SinkhornOptions& opts) {
  opts.validate();
  Require(cost.rows() == a.size() && cost.cols() == b.size() && a.size() > 0 && b.size() > 0,
          ErrorCode::kShapeMismatch, "cost matrix shape does not match marginals");
  Require(cost.allFinite(), ErrorCode::kNumerical, "cost matrix has non-finite entries");
  Require(a.minCoeff() > 0.0 && b.minCoeff() > 0.0, ErrorCode::kInvalidArgument,
          "marginals must be strictly positive");
  Require(std::abs(a.sum() - 1.0) <= 1e-9 && std::abs(b.sum() - 1.0) <= 1e-9,
          ErrorCode::kInvalidArgument, "marginals must each sum to 1");

  // The plan is invariant to a constant shift of C; solving on C - min(C)
  // keeps the exponents small.
  const double c_min = cost.minCoeff();
  const double c_range = cost.maxCoeff() - c_min;
  const Array shifted = (cost.array() - c_min);
  const ArrayV log_a = a.array().log();
  const ArrayV log_b = b.array().log();

  std::vector<double> schedule;
  if (opts.epsilon_scaling) {
    for (double e = std::max(c_range, opts.epsilon); e > opts.epsilon; e *= 0.25) {
      schedule.push_back(e);
    }
  }
  schedule.push_back(opts.epsilon);

  // Potentials in units of the current epsilon: plan = exp(u_i + v_j - C_ij/eps).
  ArrayV u = ArrayV::Zero(a.size());
  ArrayV v = ArrayV::Zero(b.size());
  TransportPlan out;
  double prev_eps = schedule.front();
  Array k;
  double err = 0.0;
  for (std::size_t stage = 0; stage < schedule.size(); ++stage) {
    const double eps = schedule[stage];
    const bool last = stage + 1 == schedule.size();
    u *= prev_eps / eps;
    v *= prev_eps / eps;
    prev_eps = eps;
    k = -shifted / eps;
    const double stage_tol = last ? opts.tol : std::max(opts.tol, 1e-3);
    // Scaling-form sweeps on the kernel with the current potentials absorbed.
    // Whenever the scalings drift far from 1 they are folded back into the
    // log potentials, so the iterate matches pure log-domain updates without
    // an exp per entry per sweep.
    Array kernel = ((k.colwise() + u).rowwise() + v.transpose()).exp();
    ArrayV alpha = ArrayV::Ones(a.size());
    ArrayV beta = ArrayV::Ones(b.size());
    const auto absorb = [&] {
      u += alpha.log();
      v += beta.log();
      kernel = ((k.colwise() + u).rowwise() + v.transpose()).exp();
      alpha.setOnes();
      beta.setOnes();
    };
    while (true) {
      ArrayV col = (kernel.matrix().transpose() * alpha.matrix()).array();
      if (!(col.minCoeff() > 0.0) || !col.allFinite()) {
        absorb();
        // Fall back to one exact log-domain sweep.
        const ArrayV col_lse = ColumnLse(k, u);
        err = ((v + col_lse).exp() - b.array()).abs().sum();
        if (err < stage_tol) {
          out.converged = last;
          break;
        }
        if (out.iterations >= opts.max_iter) break;
        v = log_b - col_lse;
        u = log_a - RowLse(k, v);
        kernel = ((k.colwise() + u).rowwise() + v.transpose()).exp();
        ++out.iterations;
        continue;
      }
      err = (beta * col - b.array()).abs().sum();
      if (err < stage_tol) {
        out.converged = last;
        break;
      }
      if (out.iterations >= opts.max_iter) break;
      beta = b.array() / col;
      ++out.iterations;
      const ArrayV row = (kernel.matrix() * beta.matrix()).array();
      if (!(row.minCoeff() > 0.0) || !row.allFinite()) {
        // Keep the fresh beta; the next sweep recomputes alpha in log form.
        absorb();
        u = log_a - RowLse(k, v);
        kernel = ((k.colwise() + u).rowwise() + v.transpose()).exp();
        continue;
      }
      alpha = a.array() / row;
      if (alpha.maxCoeff() > 1e50 || beta.maxCoeff() > 1e50 || alpha.minCoeff() < 1e-50 ||
          beta.minCoeff() < 1e-50) {
        absorb();
      }
    }
    u += alpha.log();
    v += beta.log();
  }
  out.marginal_error = err;
  Array log_plan = k.colwise() + u;
  log_plan.rowwise() += v.transpose();
  const Matrix raw = log_plan.exp().matrix();
  out.plan = RoundToPolytope(raw, a, b);
  out.a = a;
  out.b = b;
  out.cost = (out.plan.array() * cost.array()).sum();
  return out;
}

}  // namespace otcost::metric
