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
#include <string>
#include <vector>

#include "otcost/dataset.h"

namespace otcost::probe {

enum class Activation { kTanh, kRelu };

const char* ActivationName(Activation a);
Activation ParseActivation(const std::string& name);

// Feed-forward classifier: input -> hidden[0] -> ... -> hidden.back() -> K.
// The last hidden layer is the penultimate representation.
struct ModelSpec {
  int input_dim = 16;
  std::vector<int> hidden = {32, 6};
  int num_classes = 4;
  Activation activation = Activation::kTanh;
  uint64_t seed = 0;

  int penultimate_dim() const { return hidden.empty() ? 0 : hidden.back(); }
  void validate() const;
};

struct Layer {
  Matrix weight;  // fan_in x fan_out
  Vector bias;    // fan_out
};

struct ModelParams {
  Activation activation = Activation::kTanh;
  std::vector<Layer> layers;

  int input_dim() const;
  int output_dim() const;
  int penultimate_dim() const;
  Index num_parameters() const;
  uint64_t hash() const;
  void validate() const;

  friend bool operator==(const ModelParams& a, const ModelParams& b);
};

// Per-layer parameter differences, e.g. theta_after - theta_before.
struct WeightDelta {
  std::vector<Layer> layers;

  Vector flatten() const;
  double norm() const;
};

ModelParams init_model(const ModelSpec& spec);

WeightDelta difference(const ModelParams& after, const ModelParams& before);
ModelParams apply_delta(const ModelParams& m, const WeightDelta& delta, double scale = 1.0);
Vector flatten(const ModelParams& m);
bool same_shape(const ModelParams& a, const ModelParams& b);

struct ForwardResult {
  Matrix penultimate;  // n x d
  Matrix logits;       // n x K
};

ForwardResult forward(const ModelParams& m, const Matrix& x);

// Binary file: magic "OTMP", u32 version, u32 activation, u32 layer count,
// then per layer i64 rows, i64 cols, row-major f64 weight, f64 bias.
inline constexpr uint32_t kModelFileVersion = 1;
void save_model(const ModelParams& m, const std::filesystem::path& path);
ModelParams load_model(const std::filesystem::path& path);

}  // namespace otcost::probe
