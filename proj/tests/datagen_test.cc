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

#include "otcost/datagen.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "test_util.h"

namespace otcost::datagen {
namespace {

Vector ClassMean(const Dataset& d, int c) {
  const auto rows = d.rows_of_class(c);
  Vector m = Vector::Zero(d.dim());
  for (Index r : rows) m += d.features.row(r).transpose();
  return m / static_cast<double>(rows.size());
}

TEST(SyntheticConfig, RejectsInvalidFields) {
  SyntheticConfig cfg;
  cfg.overlap = 1.5;
  try {
    cfg.validate();
    FAIL() << "expected rejection";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidArgument);
    EXPECT_NE(std::string(e.what()).find("overlap"), std::string::npos);
  }
  cfg = {};
  cfg.dim = 1;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.num_classes = 1;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.overlap = -0.1;
  EXPECT_THROW(gen_synthetic_pair(cfg), Error);
}

TEST(GenSyntheticPair, FullOverlapClassMeansAgreeUpToSamplingNoise) {
  SyntheticConfig cfg;
  cfg.overlap = 1.0;
  cfg.seed = 3;
  const auto [a, b] = gen_synthetic_pair(cfg);
  EXPECT_EQ(a.size(), cfg.samples_per_client);
  EXPECT_EQ(b.size(), cfg.samples_per_client);
  for (int c = 0; c < cfg.num_classes; ++c) {
    // 200 samples per class, unit noise, 16 dims: the mean gap has norm ~0.4.
    EXPECT_LT((ClassMean(a, c) - ClassMean(b, c)).norm(), 0.8) << "class " << c;
  }
}

TEST(GenSyntheticPair, ZeroOverlapClassMeansAreFarApart) {
  SyntheticConfig cfg;
  cfg.overlap = 0.0;
  cfg.seed = 3;
  const auto [a, b] = gen_synthetic_pair(cfg);
  for (int c = 0; c < cfg.num_classes; ++c) {
    EXPECT_GT((ClassMean(a, c) - ClassMean(b, c)).norm(), cfg.mean_separation) << "class " << c;
  }
}

TEST(GenSyntheticPair, BalancedLabels) {
  SyntheticConfig cfg;
  const auto [a, b] = gen_synthetic_pair(cfg);
  for (Index n : a.class_counts()) EXPECT_EQ(n, cfg.samples_per_client / cfg.num_classes);
  for (Index n : b.class_counts()) EXPECT_EQ(n, cfg.samples_per_client / cfg.num_classes);
}

TEST(GenSyntheticPair, DeterministicGivenSeed) {
  SyntheticConfig cfg;
  cfg.overlap = 0.4;
  cfg.seed = 11;
  const auto first = gen_synthetic_pair(cfg);
  const auto second = gen_synthetic_pair(cfg);
  EXPECT_TRUE(first.first == second.first);
  EXPECT_TRUE(first.second == second.second);
  EXPECT_EQ(HashMatrix(first.second.features), HashMatrix(second.second.features));
  cfg.seed = 12;
  EXPECT_FALSE(gen_synthetic_pair(cfg).first == first.first);
}

TEST(GenSyntheticPair, OverlapControlsTheMixtureShare) {
  // With overlap 0.5, roughly half of B's class-0 rows sit near A's class-0 mean.
  SyntheticConfig cfg;
  cfg.overlap = 0.5;
  cfg.seed = 5;
  cfg.samples_per_client = 4000;
  const auto [a, b] = gen_synthetic_pair(cfg);
  const Vector mu = ClassMean(a, 0);
  int near = 0;
  const auto rows = b.rows_of_class(0);
  for (Index r : rows) {
    if ((b.features.row(r).transpose() - mu).norm() < std::sqrt(cfg.dim) + 1.0) ++near;
  }
  const double share = static_cast<double>(near) / static_cast<double>(rows.size());
  EXPECT_NEAR(share, 0.5, 0.06);
}

TEST(FeatureSkew, ZeroSeverityIsIdentity) {
  const auto [a, b] = gen_synthetic_pair(SyntheticConfig{});
  const Dataset out = apply_feature_skew(a, 0.0, 9);
  EXPECT_TRUE(out.features == a.features);
  EXPECT_EQ(out.labels, a.labels);
}

TEST(FeatureSkew, ChangesFeaturesOnly) {
  const auto [a, b] = gen_synthetic_pair(SyntheticConfig{});
  for (double severity : {0.3, 1.0, 2.0}) {
    const Dataset out = apply_feature_skew(a, severity, 9);
    EXPECT_EQ(out.labels, a.labels);
    EXPECT_GT((out.features - a.features).norm(), 0.0);
    EXPECT_TRUE(out.features.allFinite());
  }
  EXPECT_THROW(apply_feature_skew(a, -1.0, 9), Error);
}

TEST(FeatureSkew, DeterministicGivenSeed) {
  const auto [a, b] = gen_synthetic_pair(SyntheticConfig{});
  EXPECT_TRUE(apply_feature_skew(a, 1.0, 4) == apply_feature_skew(a, 1.0, 4));
  EXPECT_FALSE(apply_feature_skew(a, 1.0, 4) == apply_feature_skew(a, 1.0, 5));
}

TEST(FeatureSkew, HigherSeverityRaisesTheMetric) {
  double at_zero = 0.0;
  double at_two = 0.0;
  constexpr int kSeeds = 5;
  for (uint64_t seed = 0; seed < kSeeds; ++seed) {
    const auto [a, b] = gen_synthetic_pair(testing::ExperimentData(1.0, seed));
    const Dataset b0 = apply_feature_skew(b, 0.0, seed + 100);
    const Dataset b2 = apply_feature_skew(b, 2.0, seed + 100);
    at_zero += testing::PipelineCost(a, b0, seed);
    at_two += testing::PipelineCost(a, b2, seed);
  }
  EXPECT_GT(at_two / kSeeds, at_zero / kSeeds);
}

TEST(LabelSkew, PartitionIsExact) {
  const Dataset pool = gen_synthetic_pool(SyntheticConfig{}, 1000);
  const auto part = apply_label_skew(pool, 0.5, 3, 21);
  ASSERT_EQ(part.clients.size(), 3u);
  std::vector<Index> all;
  std::multiset<int> labels;
  for (std::size_t k = 0; k < part.clients.size(); ++k) {
    ASSERT_EQ(static_cast<Index>(part.source_rows[k].size()), part.clients[k].size());
    for (std::size_t i = 0; i < part.source_rows[k].size(); ++i) {
      const Index src = part.source_rows[k][i];
      all.push_back(src);
      EXPECT_TRUE(part.clients[k].features.row(static_cast<Index>(i)) == pool.features.row(src));
      EXPECT_EQ(part.clients[k].labels[i], pool.labels[static_cast<std::size_t>(src)]);
      labels.insert(part.clients[k].labels[i]);
    }
  }
  std::sort(all.begin(), all.end());
  ASSERT_EQ(all.size(), static_cast<std::size_t>(pool.size()));
  for (std::size_t i = 0; i < all.size(); ++i) EXPECT_EQ(all[i], static_cast<Index>(i));
  EXPECT_EQ(labels, std::multiset<int>(pool.labels.begin(), pool.labels.end()));
}

TEST(LabelSkew, HugeConcentrationIsNearlyUniform) {
  const Dataset pool = gen_synthetic_pool(SyntheticConfig{}, 2000);
  const auto part = apply_label_skew(pool, 1e6, 2, 8);
  for (const auto& client : part.clients) {
    const auto counts = client.class_counts();
    const double n = static_cast<double>(client.size());
    for (Index c : counts) EXPECT_NEAR(static_cast<double>(c) / n, 0.25, 0.05);
  }
}

TEST(LabelSkew, SmallConcentrationConcentratesMass) {
  SyntheticConfig cfg;
  cfg.num_classes = 2;
  int concentrated = 0;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    cfg.seed = seed;
    const Dataset pool = gen_synthetic_pool(cfg, 400);
    const auto part = apply_label_skew(pool, 0.1, 2, seed);
    bool any = false;
    for (const auto& client : part.clients) {
      if (client.size() == 0) continue;
      const auto counts = client.class_counts();
      const double top = static_cast<double>(*std::max_element(counts.begin(), counts.end()));
      if (top / static_cast<double>(client.size()) > 0.8) any = true;
    }
    concentrated += any ? 1 : 0;
  }
  EXPECT_GE(concentrated, 10);
}

TEST(LabelSkew, FlagsEmptySlices) {
  SyntheticConfig cfg;
  cfg.num_classes = 4;
  const Dataset pool = gen_synthetic_pool(cfg, 40);
  bool flagged = false;
  for (uint64_t seed = 0; seed < 10 && !flagged; ++seed) {
    const auto part = apply_label_skew(pool, 0.05, 5, seed);
    for (const auto& [client, cls] : part.empty_slices) {
      EXPECT_EQ(part.clients[static_cast<std::size_t>(client)].class_counts()[cls], 0);
      flagged = true;
    }
  }
  EXPECT_TRUE(flagged);
}

TEST(LabelSkew, RejectsBadArguments) {
  const Dataset pool = gen_synthetic_pool(SyntheticConfig{}, 100);
  EXPECT_THROW(apply_label_skew(pool, 0.0, 2, 1), Error);
  EXPECT_THROW(apply_label_skew(pool, 1.0, 1, 1), Error);
}

TEST(ConceptShift, ZeroFractionKeepsLabels) {
  const auto [a, b] = gen_synthetic_pair(SyntheticConfig{});
  const Dataset out = apply_concept_shift(a, 0.0, 3);
  EXPECT_EQ(out.labels, a.labels);
  EXPECT_TRUE(out.features == a.features);
}

TEST(ConceptShift, FullFractionWithTwoClassesFlipsEverything) {
  SyntheticConfig cfg;
  cfg.num_classes = 2;
  const auto [a, b] = gen_synthetic_pair(cfg);
  const Dataset out = apply_concept_shift(a, 1.0, 3);
  for (std::size_t i = 0; i < a.labels.size(); ++i) EXPECT_EQ(out.labels[i], 1 - a.labels[i]);
  EXPECT_TRUE(out.features == a.features);
}

TEST(ConceptShift, FullFractionChangesEveryLabel) {
  const auto [a, b] = gen_synthetic_pair(SyntheticConfig{});
  const Dataset out = apply_concept_shift(a, 1.0, 17);
  for (std::size_t i = 0; i < a.labels.size(); ++i) EXPECT_NE(out.labels[i], a.labels[i]);
}

TEST(ConceptShift, RejectsSingleClassAndBadFraction) {
  Dataset d;
  d.features = Matrix::Zero(3, 2);
  d.labels = {0, 0, 0};
  d.num_classes = 1;
  EXPECT_THROW(apply_concept_shift(d, 0.5, 1), Error);
  const auto [a, b] = gen_synthetic_pair(SyntheticConfig{});
  EXPECT_THROW(apply_concept_shift(a, 1.5, 1), Error);
}

TEST(RandomDerangement, HasNoFixedPoints) {
  Rng rng = MakeRng(1, 2);
  for (int k = 2; k < 12; ++k) {
    for (int rep = 0; rep < 50; ++rep) {
      const auto p = random_derangement(k, rng);
      std::vector<int> sorted = p;
      std::sort(sorted.begin(), sorted.end());
      for (int i = 0; i < k; ++i) {
        EXPECT_NE(p[static_cast<std::size_t>(i)], i);
        EXPECT_EQ(sorted[static_cast<std::size_t>(i)], i);
      }
    }
  }
}

TEST(HeterogeneitySpec, ValidatesRanges) {
  HeterogeneitySpec s;
  s.kind = HeterogeneityKind::kLabelSkew;
  s.severity = 0.0;
  EXPECT_THROW(s.validate(), Error);
  s.kind = HeterogeneityKind::kConceptShift;
  s.severity = 1.2;
  EXPECT_THROW(s.validate(), Error);
  s.severity = 0.5;
  EXPECT_NO_THROW(s.validate());
  EXPECT_EQ(ParseHeterogeneity(HeterogeneityName(HeterogeneityKind::kFeatureSkew)),
            HeterogeneityKind::kFeatureSkew);
  EXPECT_THROW(ParseHeterogeneity("warp"), Error);
}

TEST(OverlapSweep, MetricIsNonIncreasingInOverlap) {
  const std::vector<double> overlaps = {0.0, 0.25, 0.5, 0.75, 1.0};
  for (uint64_t seed : {0u, 1u}) {
    std::vector<double> costs;
    for (double ov : overlaps) {
      const auto [a, b] = gen_synthetic_pair(testing::ExperimentData(ov, seed));
      costs.push_back(testing::PipelineCost(a, b, seed));
    }
    int inversions = 0;
    for (std::size_t i = 1; i < costs.size(); ++i) {
      if (costs[i] > costs[i - 1]) {
        ++inversions;
        EXPECT_LE(costs[i] - costs[i - 1], 0.02) << "seed " << seed << " step " << i;
      }
    }
    EXPECT_LE(inversions, 1) << "seed " << seed;
  }
}

}  // namespace
}  // namespace otcost::datagen
