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

#include "otcost/model.h"

#include <cmath>
#include <fstream>

namespace otcost::probe {

const char* ActivationName(Activation a) {
  return a == Activation::kTanh ? "tanh" : "relu";
}

Activation ParseActivation(const std::string& name) {
  if (name == "tanh") return Activation::kTanh;
  if (name == "relu") return Activation::kRelu;
  Fail(ErrorCode::kInvalidArgument, "unknown activation '" + name + "'");
}

void ModelSpec::validate() const {
  Require(input_dim >= 1, ErrorCode::kInvalidArgument, "model input_dim must be >= 1");
  Require(!hidden.empty(), ErrorCode::kInvalidArgument, "model needs at least one hidden layer");
  for (int w : hidden) {
    Require(w >= 1, ErrorCode::kInvalidArgument, "hidden widths must be >= 1");
  }
  Require(penultimate_dim() >= 2, ErrorCode::kInvalidArgument,
          "penultimate width must be >= 2, got " + std::to_string(penultimate_dim()));
  Require(num_classes >= 2, ErrorCode::kInvalidArgument, "model needs >= 2 classes");
}

int ModelParams::input_dim() const {
  return layers.empty() ? 0 : static_cast<int>(layers.front().weight.rows());
}

int ModelParams::output_dim() const {
  return layers.empty() ? 0 : static_cast<int>(layers.back().weight.cols());
}

int ModelParams::penultimate_dim() const {
  return layers.empty() ? 0 : static_cast<int>(layers.back().weight.rows());
}

Index ModelParams::num_parameters() const {
  Index n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

uint64_t ModelParams::hash() const {
  uint64_t h = HashBytes(&activation, sizeof(activation));
  for (const auto& l : layers) {
    h = HashMatrix(l.weight, h);
    h = HashMatrix(l.bias, h);
  }
  return h;
}

void ModelParams::validate() const {
  Require(layers.size() >= 2, ErrorCode::kShapeMismatch, "model needs >= 2 layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    Require(l.bias.size() == l.weight.cols(), ErrorCode::kShapeMismatch,
            "layer " + std::to_string(i) + " bias/weight mismatch");
    if (i > 0) {
      Require(l.weight.rows() == layers[i - 1].weight.cols(), ErrorCode::kShapeMismatch,
              "layer " + std::to_string(i) + " fan-in does not match previous fan-out");
    }
    Require(l.weight.allFinite() && l.bias.allFinite(), ErrorCode::kNumerical,
            "layer " + std::to_string(i) + " has non-finite parameters");
  }
}

bool operator==(const ModelParams& a, const ModelParams& b) {
  if (a.activation != b.activation || !same_shape(a, b)) return false;
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    if (a.layers[i].weight != b.layers[i].weight || a.layers[i].bias != b.layers[i].bias) {
      return false;
    }
  }
  return true;
}

Vector WeightDelta::flatten() const {
  Index n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  Vector out(n);
  Index k = 0;
  for (const auto& l : layers) {
    out.segment(k, l.weight.size()) = l.weight.reshaped();
    k += l.weight.size();
    out.segment(k, l.bias.size()) = l.bias;
    k += l.bias.size();
  }
  return out;
}

double WeightDelta::norm() const {
  double sq = 0.0;
  for (const auto& l : layers) sq += l.weight.squaredNorm() + l.bias.squaredNorm();
  return std::sqrt(sq);
}

ModelParams init_model(const ModelSpec& spec) {
  spec.validate();
  Rng rng = MakeRng(spec.seed, 0x1417);
  ModelParams m;
  m.activation = spec.activation;
  std::vector<int> widths = {spec.input_dim};
  widths.insert(widths.end(), spec.hidden.begin(), spec.hidden.end());
  widths.push_back(spec.num_classes);
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const int fan_in = widths[i];
    const int fan_out = widths[i + 1];
    // He-uniform for ReLU, LeCun-uniform otherwise.
    const double gain = spec.activation == Activation::kRelu ? 6.0 : 3.0;
    std::uniform_real_distribution<double> dist(-std::sqrt(gain / fan_in),
                                                std::sqrt(gain / fan_in));
    Layer l;
    l.weight.resize(fan_in, fan_out);
    for (Index r = 0; r < fan_in; ++r) {
      for (Index c = 0; c < fan_out; ++c) l.weight(r, c) = dist(rng);
    }
    l.bias = Vector::Zero(fan_out);
    m.layers.push_back(std::move(l));
  }
  return m;
}

bool same_shape(const ModelParams& a, const ModelParams& b) {
  if (a.layers.size() != b.layers.size()) return false;
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    if (a.layers[i].weight.rows() != b.layers[i].weight.rows() ||
        a.layers[i].weight.cols() != b.layers[i].weight.cols() ||
        a.layers[i].bias.size() != b.layers[i].bias.size()) {
      return false;
    }
  }
  return true;
}

WeightDelta difference(const ModelParams& after, const ModelParams& before) {
  Require(same_shape(after, before), ErrorCode::kShapeMismatch,
          "cannot take the difference of differently shaped models");
  WeightDelta d;
  for (std::size_t i = 0; i < after.layers.size(); ++i) {
    d.layers.push_back({after.layers[i].weight - before.layers[i].weight,
                        after.layers[i].bias - before.layers[i].bias});
  }
  return d;
}

ModelParams apply_delta(const ModelParams& m, const WeightDelta& delta, double scale) {
  Require(m.layers.size() == delta.layers.size(), ErrorCode::kShapeMismatch,
          "delta layer count does not match model");
  ModelParams out = m;
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    Require(delta.layers[i].weight.rows() == m.layers[i].weight.rows() &&
                delta.layers[i].weight.cols() == m.layers[i].weight.cols(),
            ErrorCode::kShapeMismatch, "delta shape does not match model");
    out.layers[i].weight += scale * delta.layers[i].weight;
    out.layers[i].bias += scale * delta.layers[i].bias;
  }
  return out;
}

Vector flatten(const ModelParams& m) {
  WeightDelta view;
  view.layers = m.layers;
  return view.flatten();
}

namespace {

Matrix Activate(Activation a, const Matrix& z) {
  if (a == Activation::kTanh) return z.array().tanh().matrix();
  return z.cwiseMax(0.0);
}

}  // namespace

ForwardResult forward(const ModelParams& m, const Matrix& x) {
  Require(!m.layers.empty(), ErrorCode::kShapeMismatch, "model has no layers");
  Require(x.cols() == m.input_dim(), ErrorCode::kShapeMismatch,
          "input has " + std::to_string(x.cols()) + " features, model expects " +
              std::to_string(m.input_dim()));
  Matrix a = x;
  for (std::size_t i = 0; i + 1 < m.layers.size(); ++i) {
    const auto& l = m.layers[i];
    a = Activate(m.activation, (a * l.weight).rowwise() + l.bias.transpose());
  }
  ForwardResult out;
  out.logits = (a * m.layers.back().weight).rowwise() + m.layers.back().bias.transpose();
  out.penultimate = std::move(a);
  return out;
}

namespace {
constexpr char kModelMagic[4] = {'O', 'T', 'M', 'P'};

void WriteRowMajor(std::ofstream& out, const Matrix& m) {
  const int64_t rows = m.rows();
  const int64_t cols = m.cols();
  out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
  out.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) {
      const double v = m(r, c);
      out.write(reinterpret_cast<const char*>(&v), sizeof(v));
    }
  }
}

}  // namespace

void save_model(const ModelParams& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  Require(out.good(), ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  const uint32_t header[3] = {kModelFileVersion, static_cast<uint32_t>(m.activation),
                              static_cast<uint32_t>(m.layers.size())};
  out.write(kModelMagic, 4);
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  for (const auto& l : m.layers) {
    WriteRowMajor(out, l.weight);
    for (Index i = 0; i < l.bias.size(); ++i) {
      out.write(reinterpret_cast<const char*>(&l.bias(i)), sizeof(double));
    }
  }
  Require(out.good(), ErrorCode::kIo, "write failed for " + path.string());
}

ModelParams load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  Require(in.good(), ErrorCode::kIo, "cannot open " + path.string());
  char magic[4];
  uint32_t header[3] = {0, 0, 0};
  in.read(magic, 4);
  Require(in.good() && std::equal(magic, magic + 4, kModelMagic), ErrorCode::kIo,
          path.string() + ": not a model file");
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  Require(in.good() && header[0] == kModelFileVersion, ErrorCode::kIo,
          path.string() + ": unsupported model file version");
  Require(header[1] <= 1, ErrorCode::kIo, path.string() + ": unknown activation id");
  ModelParams m;
  m.activation = static_cast<Activation>(header[1]);
  for (uint32_t i = 0; i < header[2]; ++i) {
    int64_t rows = 0;
    int64_t cols = 0;
    in.read(reinterpret_cast<char*>(&rows), sizeof(rows));
    in.read(reinterpret_cast<char*>(&cols), sizeof(cols));
    Require(in.good() && rows > 0 && cols > 0 && rows < (1 << 24) && cols < (1 << 24),
            ErrorCode::kIo, path.string() + ": corrupt layer header");
    Layer l;
    l.weight.resize(rows, cols);
    for (Index r = 0; r < rows; ++r) {
      for (Index c = 0; c < cols; ++c) {
        in.read(reinterpret_cast<char*>(&l.weight(r, c)), sizeof(double));
      }
    }
    l.bias.resize(cols);
    for (Index c = 0; c < cols; ++c) in.read(reinterpret_cast<char*>(&l.bias(c)), sizeof(double));
    m.layers.push_back(std::move(l));
  }
  Require(in.good(), ErrorCode::kIo, path.string() + ": truncated");
  m.validate();
  return m;
}

}  // namespace otcost::probe
