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

#include <string>
#include <utility>
#include <vector>

#include "otcost/dataset.h"

namespace otcost::datagen {

// Two-client Gaussian-mixture generator.  Client A samples mixture M_A (one
// isotropic component per class, means along orthogonal random directions
// when dim allows).  Each of client B's samples comes from M_A with
// probability `overlap` and otherwise from M_B, whose class-c component sits
// next to M_A's class-(c+1) component: same-class distributions are disjoint
// and their decision regions conflict.
struct SyntheticConfig {
  int dim = 16;
  int num_classes = 4;
  int samples_per_client = 800;
  double overlap = 1.0;
  double mean_separation = 3.0;
  double covariance_scale = 1.0;
  // Offset of each M_B component from the M_A component it borrows, in
  // units of mean_separation.
  double disjoint_offset = 0.5;
  uint64_t seed = 0;

  void validate() const;
};

std::pair<Dataset, Dataset> gen_synthetic_pair(const SyntheticConfig& cfg);

// Draws `n` samples from M_A only; used when a single pool is partitioned.
Dataset gen_synthetic_pool(const SyntheticConfig& cfg, int n);

enum class HeterogeneityKind { kFeatureSkew, kLabelSkew, kConceptShift };

const char* HeterogeneityName(HeterogeneityKind kind);
HeterogeneityKind ParseHeterogeneity(const std::string& name);

struct HeterogeneitySpec {
  HeterogeneityKind kind = HeterogeneityKind::kFeatureSkew;
  // Transform magnitude, Dirichlet concentration, or permuted-label fraction.
  double severity = 0.0;
  uint64_t seed = 0;

  void validate() const;
};

// Site transform x' = x + (R - I)(x - centroid) + severity * v, where v is a
// seeded unit direction and R rotates by severity * pi/4 in p/2 random planes.
Dataset apply_feature_skew(const Dataset& d, double severity, uint64_t seed);

struct LabelSkewPartition {
  std::vector<Dataset> clients;
  // Row indices into the input for each client.
  std::vector<std::vector<Index>> source_rows;
  // (client, class) slices that received no samples although the input had
  // that class.
  std::vector<std::pair<int, int>> empty_slices;
};

LabelSkewPartition apply_label_skew(const Dataset& d, double alpha_dir, int n_clients,
                                    uint64_t seed);

Dataset apply_concept_shift(const Dataset& d, double fraction, uint64_t seed);

// Seeded permutation of [0, k) with no fixed points.  k >= 2.
std::vector<int> random_derangement(int k, Rng& rng);

}  // namespace otcost::datagen
