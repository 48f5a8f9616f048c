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

// Independent reference computations used by the unit and acceptance tests.
// Nothing here calls into the library's solvers.

#pragma once

#include <vector>

#include <Eigen/Dense>

namespace oracle {

// Minimum-cost perfect matching on a square cost matrix (Hungarian method,
// O(n^3)).  Returns the assignment row -> column.
std::vector<int> Hungarian(const Eigen::MatrixXd& cost);

// Exhaustive search over permutations; n <= 8.
double BruteForceAssignment(const Eigen::MatrixXd& cost);

// Exact optimal transport between histograms with integer masses
// a_i = count_a[i] / N and b_j = count_b[j] / N (both sum to N): each source
// is split into count_a[i] unit atoms and the problem becomes an assignment.
double ExactOt(const Eigen::MatrixXd& cost, const std::vector<int>& count_a,
               const std::vector<int>& count_b);

// Hellinger distance between two Gaussians by quadrature of the
// Bhattacharyya integral on a fine grid.
double HellingerNumeric1D(double mu_a, double var_a, double mu_b, double var_b);
double HellingerNumeric2D(const Eigen::Vector2d& mu_a, const Eigen::Matrix2d& cov_a,
                          const Eigen::Vector2d& mu_b, const Eigen::Matrix2d& cov_b);

// Spearman rank correlation computed by the textbook O(n^2) route: rank by
// counting, ties averaged.
double SpearmanReference(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace oracle
