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

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace otcost {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;
using Rng = std::mt19937_64;

enum class ErrorCode {
  kInvalidArgument,
  kShapeMismatch,
  kNumerical,
  kInsufficientData,
  kIo,
  kPrivacyGate,
  kProtocol,
};

const char* ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void Fail(ErrorCode code, const std::string& message);

inline void Require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) Fail(code, message);
}

// splitmix64 finalizer; used to derive independent sub-streams from one seed.
uint64_t MixSeed(uint64_t seed, uint64_t stream);

inline Rng MakeRng(uint64_t seed, uint64_t stream = 0) {
  return Rng(MixSeed(seed, stream));
}

// FNV-1a over the raw bytes of a matrix; stable for a given platform.
uint64_t HashBytes(const void* data, std::size_t size, uint64_t h = 14695981039346656037ULL);
uint64_t HashMatrix(const Matrix& m, uint64_t h = 14695981039346656037ULL);
std::string HexDigest(uint64_t h);

bool AllFinite(const Matrix& m);

}  // namespace otcost
