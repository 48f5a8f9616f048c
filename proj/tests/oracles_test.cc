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

// Checks on the reference solvers themselves, so the tests built on them
// rest on something verified.

#include "oracles.h"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace {

TEST(Oracle, HungarianMatchesBruteForce) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    const int n = 1 + t % 7;
    Eigen::MatrixXd c(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) c(i, j) = u(rng);
    const auto assign = oracle::Hungarian(c);
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += c(i, assign[static_cast<std::size_t>(i)]);
    EXPECT_NEAR(total, oracle::BruteForceAssignment(c), 1e-12);
  }
}

TEST(Oracle, ExactOtOnAHandSolvedInstance) {
  Eigen::MatrixXd c(2, 2);
  c << 0.0, 1.0, 1.0, 0.0;
  // Masses (4/6, 2/6) to (3/6, 3/6): one sixth has to cross at cost 1.
  EXPECT_NEAR(oracle::ExactOt(c, {4, 2}, {3, 3}), 1.0 / 6.0, 1e-12);
  EXPECT_NEAR(oracle::ExactOt(c, {3, 3}, {3, 3}), 0.0, 1e-12);
}

TEST(Oracle, HellingerQuadratureKnownValue) {
  EXPECT_NEAR(oracle::HellingerNumeric1D(0.0, 1.0, 1.0, 1.0), std::sqrt(1.0 - std::exp(-0.125)),
              1e-9);
  const Eigen::Vector2d mu(0.0, 0.0);
  EXPECT_NEAR(oracle::HellingerNumeric2D(mu, Eigen::Matrix2d::Identity(), mu,
                                         Eigen::Matrix2d::Identity()),
              0.0, 1e-6);
}

TEST(Oracle, SpearmanReferenceHandlesTies) {
  EXPECT_NEAR(oracle::SpearmanReference({1, 2, 2, 3}, {1, 2, 2, 3}), 1.0, 1e-12);
  EXPECT_NEAR(oracle::SpearmanReference({1, 2, 3, 4}, {4, 3, 2, 1}), -1.0, 1e-12);
}

}  // namespace
