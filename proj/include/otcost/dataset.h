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

#include <filesystem>
#include <span>
#include <vector>

#include "otcost/common.h"

namespace otcost {

// One client's data: an n x p feature matrix and n class indices in [0, K).
struct Dataset {
  Matrix features;
  std::vector<int> labels;
  int num_classes = 0;

  Index size() const { return features.rows(); }
  Index dim() const { return features.cols(); }
  bool empty() const { return features.rows() == 0; }

  // Throws kInvalidArgument on: n == 0, label/row count mismatch, labels out
  // of range, non-finite features.
  void validate() const;

  std::vector<Index> class_counts() const;
  std::vector<Index> rows_of_class(int c) const;
  Dataset subset(std::span<const Index> rows) const;

  friend bool operator==(const Dataset& a, const Dataset& b);
};

// Split rows into (train, test) with a seeded shuffle, stratified per class.
std::pair<Dataset, Dataset> train_test_split(const Dataset& d, double test_fraction,
                                             uint64_t seed);

// CSV layout: header `f0,...,f{p-1},label`, one sample per row.  Values are
// written with 17 significant digits so a round trip is exact.
void write_csv(const Dataset& d, const std::filesystem::path& path);
Dataset read_csv(const std::filesystem::path& path, int num_classes = 0);

// Binary cache: magic "OTDS", u32 version, i64 n, i64 p, i32 K, then
// row-major f64 features and i32 labels.  Little-endian host order.
inline constexpr uint32_t kDatasetCacheVersion = 1;
void write_binary(const Dataset& d, const std::filesystem::path& path);
Dataset read_binary(const std::filesystem::path& path);

}  // namespace otcost
