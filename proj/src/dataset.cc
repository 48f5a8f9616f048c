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

#include "otcost/dataset.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace otcost {

void Dataset::validate() const {
  Require(features.rows() >= 1, ErrorCode::kInvalidArgument, "dataset is empty");
  Require(static_cast<Index>(labels.size()) == features.rows(), ErrorCode::kInvalidArgument,
          "dataset has " + std::to_string(features.rows()) + " rows but " +
              std::to_string(labels.size()) + " labels");
  Require(num_classes >= 1, ErrorCode::kInvalidArgument, "dataset num_classes must be >= 1");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    Require(labels[i] >= 0 && labels[i] < num_classes, ErrorCode::kInvalidArgument,
            "label " + std::to_string(labels[i]) + " at row " + std::to_string(i) +
                " outside [0," + std::to_string(num_classes) + ")");
  }
  Require(features.allFinite(), ErrorCode::kInvalidArgument, "dataset features contain NaN/Inf");
}

std::vector<Index> Dataset::class_counts() const {
  std::vector<Index> counts(static_cast<std::size_t>(std::max(num_classes, 0)), 0);
  for (int y : labels) {
    if (y >= 0 && y < num_classes) ++counts[static_cast<std::size_t>(y)];
  }
  return counts;
}

std::vector<Index> Dataset::rows_of_class(int c) const {
  std::vector<Index> rows;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == c) rows.push_back(static_cast<Index>(i));
  }
  return rows;
}

Dataset Dataset::subset(std::span<const Index> rows) const {
  Dataset out;
  out.num_classes = num_classes;
  out.features.resize(static_cast<Index>(rows.size()), features.cols());
  out.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.features.row(static_cast<Index>(i)) = features.row(rows[i]);
    out.labels.push_back(labels[static_cast<std::size_t>(rows[i])]);
  }
  return out;
}

bool operator==(const Dataset& a, const Dataset& b) {
  return a.num_classes == b.num_classes && a.labels == b.labels &&
         a.features.rows() == b.features.rows() && a.features.cols() == b.features.cols() &&
         a.features == b.features;
}

std::pair<Dataset, Dataset> train_test_split(const Dataset& d, double test_fraction,
                                             uint64_t seed) {
  Require(test_fraction > 0.0 && test_fraction < 1.0, ErrorCode::kInvalidArgument,
          "test_fraction must lie in (0,1)");
  Rng rng = MakeRng(seed, 0x5A11);
  std::vector<Index> train_rows;
  std::vector<Index> test_rows;
  for (int c = 0; c < d.num_classes; ++c) {
    auto rows = d.rows_of_class(c);
    std::shuffle(rows.begin(), rows.end(), rng);
    const auto n_test = static_cast<std::size_t>(
        std::llround(test_fraction * static_cast<double>(rows.size())));
    test_rows.insert(test_rows.end(), rows.begin(), rows.begin() + static_cast<long>(n_test));
    train_rows.insert(train_rows.end(), rows.begin() + static_cast<long>(n_test), rows.end());
  }
  std::sort(train_rows.begin(), train_rows.end());
  std::sort(test_rows.begin(), test_rows.end());
  return {d.subset(train_rows), d.subset(test_rows)};
}

void write_csv(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream out(path);
  Require(out.good(), ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  for (Index j = 0; j < d.dim(); ++j) out << 'f' << j << ',';
  out << "label\n";
  char buf[32];
  for (Index i = 0; i < d.size(); ++i) {
    for (Index j = 0; j < d.dim(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", d.features(i, j));
      out << buf << ',';
    }
    out << d.labels[static_cast<std::size_t>(i)] << '\n';
  }
  Require(out.good(), ErrorCode::kIo, "write failed for " + path.string());
}

Dataset read_csv(const std::filesystem::path& path, int num_classes) {
  std::ifstream in(path);
  Require(in.good(), ErrorCode::kIo, "cannot open " + path.string());
  std::string line;
  Require(static_cast<bool>(std::getline(in, line)), ErrorCode::kIo,
          path.string() + ": missing header");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  Require(header.size() >= 2 && header.back() == "label", ErrorCode::kIo,
          path.string() + ": header must end with 'label'");
  const std::size_t p = header.size() - 1;
  for (std::size_t j = 0; j < p; ++j) {
    Require(header[j] == "f" + std::to_string(j), ErrorCode::kIo,
            path.string() + ": unexpected header column '" + header[j] + "'");
  }
  std::vector<double> values;
  std::vector<int> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t col = 0;
    while (std::getline(ss, cell, ',')) {
      try {
        if (col < p) {
          values.push_back(std::stod(cell));
        } else if (col == p) {
          labels.push_back(std::stoi(cell));
        }
      } catch (const std::exception&) {
        Fail(ErrorCode::kIo, path.string() + ":" + std::to_string(line_no) + ": bad value '" +
                                 cell + "'");
      }
      ++col;
    }
    Require(col == p + 1, ErrorCode::kIo,
            path.string() + ":" + std::to_string(line_no) + ": expected " +
                std::to_string(p + 1) + " columns, got " + std::to_string(col));
  }
  Dataset d;
  d.features.resize(static_cast<Index>(labels.size()), static_cast<Index>(p));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      d.features(static_cast<Index>(i), static_cast<Index>(j)) = values[i * p + j];
    }
  }
  d.labels = std::move(labels);
  int max_label = -1;
  for (int y : d.labels) max_label = std::max(max_label, y);
  d.num_classes = num_classes > 0 ? num_classes : max_label + 1;
  return d;
}

namespace {
constexpr char kDatasetMagic[4] = {'O', 'T', 'D', 'S'};
}

void write_binary(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  Require(out.good(), ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  const uint32_t version = kDatasetCacheVersion;
  const int64_t n = d.size();
  const int64_t p = d.dim();
  const int32_t k = d.num_classes;
  out.write(kDatasetMagic, 4);
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  out.write(reinterpret_cast<const char*>(&n), sizeof(n));
  out.write(reinterpret_cast<const char*>(&p), sizeof(p));
  out.write(reinterpret_cast<const char*>(&k), sizeof(k));
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) {
      const double v = d.features(i, j);
      out.write(reinterpret_cast<const char*>(&v), sizeof(v));
    }
  }
  for (int y : d.labels) {
    const int32_t v = y;
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
  }
  Require(out.good(), ErrorCode::kIo, "write failed for " + path.string());
}

Dataset read_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  Require(in.good(), ErrorCode::kIo, "cannot open " + path.string());
  char magic[4];
  uint32_t version = 0;
  int64_t n = 0;
  int64_t p = 0;
  int32_t k = 0;
  in.read(magic, 4);
  Require(in.good() && std::equal(magic, magic + 4, kDatasetMagic), ErrorCode::kIo,
          path.string() + ": not a dataset cache");
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  Require(version == kDatasetCacheVersion, ErrorCode::kIo,
          path.string() + ": unsupported cache version " + std::to_string(version));
  in.read(reinterpret_cast<char*>(&n), sizeof(n));
  in.read(reinterpret_cast<char*>(&p), sizeof(p));
  in.read(reinterpret_cast<char*>(&k), sizeof(k));
  Require(in.good() && n >= 0 && p >= 0, ErrorCode::kIo, path.string() + ": corrupt header");
  Dataset d;
  d.num_classes = k;
  d.features.resize(n, p);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) {
      in.read(reinterpret_cast<char*>(&d.features(i, j)), sizeof(double));
    }
  }
  d.labels.resize(static_cast<std::size_t>(n));
  for (auto& y : d.labels) {
    int32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    y = v;
  }
  Require(in.good(), ErrorCode::kIo, path.string() + ": truncated");
  return d;
}

}  // namespace otcost
