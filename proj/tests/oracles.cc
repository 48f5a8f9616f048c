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

#include "oracles.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace oracle {

std::vector<int> Hungarian(const Eigen::MatrixXd& cost) {
  // Potentials formulation, 1-based with a virtual column 0.
  const int n = static_cast<int>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> assignment(n, -1);
  for (int j = 1; j <= n; ++j) assignment[p[j] - 1] = j - 1;
  return assignment;
}

double BruteForceAssignment(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += cost(i, perm[i]);
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

double ExactOt(const Eigen::MatrixXd& cost, const std::vector<int>& count_a,
               const std::vector<int>& count_b) {
  const int total = std::accumulate(count_a.begin(), count_a.end(), 0);
  std::vector<int> row_of, col_of;
  for (std::size_t i = 0; i < count_a.size(); ++i) row_of.insert(row_of.end(), count_a[i], int(i));
  for (std::size_t j = 0; j < count_b.size(); ++j) col_of.insert(col_of.end(), count_b[j], int(j));
  Eigen::MatrixXd expanded(total, total);
  for (int r = 0; r < total; ++r) {
    for (int c = 0; c < total; ++c) expanded(r, c) = cost(row_of[r], col_of[c]);
  }
  const auto match = Hungarian(expanded);
  double s = 0.0;
  for (int r = 0; r < total; ++r) s += expanded(r, match[r]);
  return s / total;
}

namespace {

double Density1D(double x, double mu, double var) {
  return std::exp(-0.5 * (x - mu) * (x - mu) / var) / std::sqrt(2.0 * M_PI * var);
}

double Density2D(const Eigen::Vector2d& x, const Eigen::Vector2d& mu, const Eigen::Matrix2d& inv,
                 double det) {
  const Eigen::Vector2d d = x - mu;
  return std::exp(-0.5 * d.dot(inv * d)) / (2.0 * M_PI * std::sqrt(det));
}

}  // namespace

double HellingerNumeric1D(double mu_a, double var_a, double mu_b, double var_b) {
  const double spread = 14.0 * std::sqrt(std::max(var_a, var_b));
  const double lo = std::min(mu_a, mu_b) - spread;
  const double hi = std::max(mu_a, mu_b) + spread;
  const int steps = 200000;
  const double h = (hi - lo) / steps;
  double bc = 0.0;
  for (int i = 0; i <= steps; ++i) {
    const double x = lo + i * h;
    const double w = (i == 0 || i == steps) ? 0.5 : 1.0;
    bc += w * std::sqrt(Density1D(x, mu_a, var_a) * Density1D(x, mu_b, var_b));
  }
  bc *= h;
  return std::sqrt(std::max(0.0, 1.0 - bc));
}

double HellingerNumeric2D(const Eigen::Vector2d& mu_a, const Eigen::Matrix2d& cov_a,
                          const Eigen::Vector2d& mu_b, const Eigen::Matrix2d& cov_b) {
  const Eigen::Matrix2d inv_a = cov_a.inverse();
  const Eigen::Matrix2d inv_b = cov_b.inverse();
  const double det_a = cov_a.determinant();
  const double det_b = cov_b.determinant();
  const double sd = std::sqrt(std::max(cov_a.eigenvalues().real().maxCoeff(),
                                       cov_b.eigenvalues().real().maxCoeff()));
  const double spread = 12.0 * sd;
  const Eigen::Vector2d lo = mu_a.cwiseMin(mu_b).array() - spread;
  const Eigen::Vector2d hi = mu_a.cwiseMax(mu_b).array() + spread;
  const int steps = 1600;
  const Eigen::Vector2d h = (hi - lo) / steps;
  double bc = 0.0;
  for (int i = 0; i <= steps; ++i) {
    const double wi = (i == 0 || i == steps) ? 0.5 : 1.0;
    for (int j = 0; j <= steps; ++j) {
      const double wj = (j == 0 || j == steps) ? 0.5 : 1.0;
      const Eigen::Vector2d x(lo(0) + i * h(0), lo(1) + j * h(1));
      bc += wi * wj *
            std::sqrt(Density2D(x, mu_a, inv_a, det_a) * Density2D(x, mu_b, inv_b, det_b));
    }
  }
  bc *= h(0) * h(1);
  return std::sqrt(std::max(0.0, 1.0 - bc));
}

double SpearmanReference(const std::vector<double>& x, const std::vector<double>& y) {
  const auto rank = [](const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      double less = 0.0, equal = 0.0;
      for (double w : v) {
        if (w < v[i]) less += 1.0;
        if (w == v[i]) equal += 1.0;
      }
      r[i] = less + (equal + 1.0) / 2.0;
    }
    return r;
  };
  const auto rx = rank(x), ry = rank(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace oracle
