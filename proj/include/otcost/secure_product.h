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
#include <vector>

#include "json.hpp"

#include "otcost/common.h"

namespace otcost::privacy {

// One protocol message as seen on the wire.  The payload itself is kept only
// when an invocation is run with record_payloads (audit mode).
struct Message {
  std::string sender;
  std::string receiver;
  std::string label;
  std::string digest;
  Index rows = 0;
  Index cols = 0;
  std::vector<uint64_t> mask_ids;
  Matrix payload;
};

struct PartyTranscript {
  uint64_t invocation = 0;
  std::vector<Message> messages;
  // Every mask identifier consumed by this invocation.
  std::vector<uint64_t> mask_ids;

  nlohmann::json to_json() const;
};

// Correlated randomness dealt by the commodity server for one product of an
// n x d matrix (party A) with the transpose of an m x d matrix (party B):
//   ra + rb = Ra Rb^T.
struct CorrelatedRandomness {
  Matrix ra_mask;   // Ra, n x d, to A
  Matrix rb_mask;   // Rb, m x d, to B
  Matrix ra_share;  // ra, n x m, to A
  Matrix rb_share;  // rb, n x m, to B
  uint64_t id_ra_mask = 0;
  uint64_t id_rb_mask = 0;
  uint64_t id_ra_share = 0;
  uint64_t id_rb_share = 0;
};

// Semi-honest third party that only deals randomness; it never sees inputs.
class CommodityServer {
 public:
  explicit CommodityServer(uint64_t seed, double mask_scale = 1.0);

  CorrelatedRandomness deal(Index n, Index m, Index d);

 private:
  Rng rng_;
  double mask_scale_;
};

// Hands out process-unique identifiers and remembers every one that has been
// consumed by a protocol run.
uint64_t next_mask_id();
// Throws kProtocol if any id was consumed before.
void consume_mask_ids(const std::vector<uint64_t>& ids);

struct SecureProductResult {
  Matrix product;  // x_a * x_b^T
  PartyTranscript transcript;
};

// Commodity-server scalar-product protocol, simulated in-process:
//   A -> B : X + Ra          B -> A : Y + Rb
//   B -> A : U = (X + Ra) Y^T + rb - V2         (V2 is B's fresh share)
//   A : V1 = U - Ra (Y + Rb)^T + ra = X Y^T - V2
//   A, B -> output : V1, V2
SecureProductResult secure_dot_product(const Matrix& x_a, const Matrix& x_b, uint64_t seed,
                                       bool record_payloads = false);
SecureProductResult secure_dot_product(const Matrix& x_a, const Matrix& x_b,
                                       const CorrelatedRandomness& dealt, uint64_t seed,
                                       bool record_payloads = false);

}  // namespace otcost::privacy
