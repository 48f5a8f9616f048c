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

#include "otcost/common.h"

#include <cstdio>

namespace otcost {

const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kShapeMismatch: return "shape_mismatch";
    case ErrorCode::kNumerical: return "numerical";
    case ErrorCode::kInsufficientData: return "insufficient_data";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kPrivacyGate: return "privacy_gate";
    case ErrorCode::kProtocol: return "protocol";
  }
  return "unknown";
}

void Fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

uint64_t MixSeed(uint64_t seed, uint64_t stream) {
  uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

uint64_t HashBytes(const void* data, std::size_t size, uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

uint64_t HashMatrix(const Matrix& m, uint64_t h) {
  const int64_t shape[2] = {m.rows(), m.cols()};
  h = HashBytes(shape, sizeof(shape), h);
  return HashBytes(m.data(), sizeof(double) * static_cast<std::size_t>(m.size()), h);
}

std::string HexDigest(uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

bool AllFinite(const Matrix& m) { return m.allFinite(); }

}  // namespace otcost
