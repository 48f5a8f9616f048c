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

#include <gtest/gtest.h>

#include "oracles.h"

namespace otcost::metric {
namespace {

Vector RandomHistogram(Index n, Rng& rng) {
  std::uniform_real_distribution<double> u(0.1, 1.0);
  Vector a(n);
  for (Index i = 0; i < n; ++i) a(i) = u(rng);
  return a / a.sum();
}

TEST(Sinkhorn, ConstantCostGivesTheProductCoupling) {
  Rng rng = MakeRng(1);
  const Vector a = RandomHistogram(4, rng);
  const Vector b = RandomHistogram(5, rng);
  const TransportPlan p = sinkhorn(Matrix::Constant(4, 5, 0.7), a, b);
  EXPECT_NEAR(p.cost, 0.7, 1e-12);
  EXPECT_LE((p.plan - a * b.transpose()).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_TRUE(p.converged);
}

TEST(Sinkhorn, TwoByTwoPrefersTheDiagonal) {
  Matrix c(2, 2);
  c << 0.0, 1.0, 1.0, 0.0;
  const Vector h = uniform_marginal(2);
  SinkhornOptions opts;
  opts.epsilon = 1e-3;
  const TransportPlan p = sinkhorn(c, h, h, opts);
  EXPECT_LE(p.cost, 0.01);
  EXPECT_NEAR(p.plan(0, 0), 0.5, 0.01);
  EXPECT_NEAR(p.plan(1, 1), 0.5, 0.01);
}

TEST(Sinkhorn, MarginalsHoldOnRandomInstances) {
  Rng rng = MakeRng(2);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (int t = 0; t < 20; ++t) {
    const Index n = 3 + t % 7;
    const Index m = 2 + (t * 3) % 9;
    Matrix c(n, m);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < m; ++j) c(i, j) = u(rng);
    const Vector a = RandomHistogram(n, rng);
    const Vector b = RandomHistogram(m, rng);
    const TransportPlan p = sinkhorn(c, a, b);
    EXPECT_TRUE(p.converged);
    EXPECT_LE((p.plan.rowwise().sum() - a).lpNorm<1>(), 1e-6);
    EXPECT_LE((p.plan.colwise().sum().transpose() - b).lpNorm<1>(), 1e-6);
    EXPECT_GE(p.plan.minCoeff(), 0.0);
    EXPECT_NEAR(p.cost, (p.plan.array() * c.array()).sum(), 1e-12);
  }
}

TEST(Sinkhorn, NeverUndercutsTheExactOptimum) {
  Rng rng = MakeRng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> size(1, 6);
  std::uniform_int_distribution<int> mass(1, 4);
  for (int t = 0; t < 50; ++t) {
    const int n = size(rng);
    const int m = size(rng);
    // Integer masses with equal totals.
    std::vector<int> ca(static_cast<std::size_t>(n));
    std::vector<int> cb(static_cast<std::size_t>(m), 1);
    int total = 0;
    for (int& x : ca) total += (x = mass(rng));
    while (total < m) {
      ++ca[0];
      ++total;
    }
    int rest = total - m;
    for (int k = 0; rest > 0; k = (k + 1) % m, --rest) ++cb[static_cast<std::size_t>(k)];
    Vector a(n), b(m);
    for (int i = 0; i < n; ++i) a(i) = static_cast<double>(ca[static_cast<std::size_t>(i)]) / total;
    for (int j = 0; j < m; ++j) b(j) = static_cast<double>(cb[static_cast<std::size_t>(j)]) / total;
    Matrix c(n, m);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) c(i, j) = u(rng);
    const double exact = oracle::ExactOt(c, ca, cb);
    const TransportPlan p = sinkhorn(c, a, b);
    EXPECT_GE(p.cost, exact - 1e-9) << "instance " << t;
  }
}

TEST(Sinkhorn, RejectsInvalidInputs) {
  const Matrix c = Matrix::Zero(2, 2);
  Vector bad(2);
  bad << 0.7, 0.7;
  EXPECT_THROW(sinkhorn(c, bad, uniform_marginal(2)), Error);
  Vector zero(2);
  zero << 1.0, 0.0;
  EXPECT_THROW(sinkhorn(c, zero, uniform_marginal(2)), Error);
  EXPECT_THROW(sinkhorn(c, uniform_marginal(3), uniform_marginal(2)), Error);
  Matrix nan_cost = c;
  nan_cost(0, 1) = std::nan("");
  EXPECT_THROW(sinkhorn(nan_cost, uniform_marginal(2), uniform_marginal(2)), Error);
  SinkhornOptions opts;
  opts.epsilon = 0.0;
  EXPECT_THROW(sinkhorn(c, uniform_marginal(2), uniform_marginal(2), opts), Error);
}

TEST(Sinkhorn, NonConvergenceIsReportedNotThrown) {
  Rng rng = MakeRng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix c(30, 30);
  for (Index i = 0; i < 30; ++i)
    for (Index j = 0; j < 30; ++j) c(i, j) = u(rng);
  SinkhornOptions opts;
  opts.epsilon = 1e-4;
  opts.max_iter = 2;
  opts.epsilon_scaling = false;
  const TransportPlan p = sinkhorn(c, uniform_marginal(30), uniform_marginal(30), opts);
  EXPECT_FALSE(p.converged);
  EXPECT_GT(p.marginal_error, opts.tol);
  // The rounded plan stays feasible.
  EXPECT_LE((p.plan.rowwise().sum() - uniform_marginal(30)).lpNorm<1>(), 1e-12);
}

TEST(Sinkhorn, LargeCostsStayFinite) {
  Rng rng = MakeRng(5);
  std::uniform_real_distribution<double> u(0.0, 1e4);
  Matrix c(20, 15);
  for (Index i = 0; i < 20; ++i)
    for (Index j = 0; j < 15; ++j) c(i, j) = u(rng);
  const TransportPlan p = sinkhorn(c, uniform_marginal(20), uniform_marginal(15));
  EXPECT_TRUE(std::isfinite(p.cost));
  EXPECT_TRUE(p.plan.allFinite());
}

}  // namespace
}  // namespace otcost::metric
