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

#include "otcost/secure_product.h"

#include <atomic>
#include <mutex>
#include <unordered_set>

namespace otcost::privacy {
namespace {

std::atomic<uint64_t> g_next_id{1};
std::atomic<uint64_t> g_next_invocation{1};

struct Ledger {
  std::mutex mu;
  std::unordered_set<uint64_t> consumed;
};

Ledger& GlobalLedger() {
  static Ledger ledger;
  return ledger;
}

Matrix UniformMatrix(Index rows, Index cols, double scale, Rng& rng) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) m(i, j) = dist(rng);
  }
  return m;
}

void Send(PartyTranscript& t, const char* from, const char* to, const char* label,
          const Matrix& payload, std::vector<uint64_t> ids, bool record) {
  Message msg;
  msg.sender = from;
  msg.receiver = to;
  msg.label = label;
  msg.digest = HexDigest(HashMatrix(payload));
  msg.rows = payload.rows();
  msg.cols = payload.cols();
  msg.mask_ids = std::move(ids);
  if (record) msg.payload = payload;
  t.messages.push_back(std::move(msg));
}

}  // namespace

nlohmann::json PartyTranscript::to_json() const {
  nlohmann::json j;
  j["invocation"] = invocation;
  j["mask_ids"] = mask_ids;
  auto& msgs = j["messages"] = nlohmann::json::array();
  for (const auto& m : messages) {
    msgs.push_back({{"sender", m.sender},
                    {"receiver", m.receiver},
                    {"label", m.label},
                    {"digest", m.digest},
                    {"shape", {m.rows, m.cols}},
                    {"mask_ids", m.mask_ids}});
  }
  return j;
}

uint64_t next_mask_id() { return g_next_id.fetch_add(1); }

void consume_mask_ids(const std::vector<uint64_t>& ids) {
  auto& ledger = GlobalLedger();
  std::lock_guard<std::mutex> lock(ledger.mu);
  for (uint64_t id : ids) {
    if (ledger.consumed.count(id) != 0) {
      Fail(ErrorCode::kProtocol, "mask " + std::to_string(id) + " reused; aborting protocol");
    }
  }
  ledger.consumed.insert(ids.begin(), ids.end());
}

CommodityServer::CommodityServer(uint64_t seed, double mask_scale)
    : rng_(MakeRng(seed, 0xC0DE)), mask_scale_(mask_scale) {
  Require(mask_scale > 0.0, ErrorCode::kInvalidArgument, "mask scale must be > 0");
}

CorrelatedRandomness CommodityServer::deal(Index n, Index m, Index d) {
  Require(n > 0 && m > 0 && d > 0, ErrorCode::kInvalidArgument, "cannot deal empty masks");
  CorrelatedRandomness r;
  r.ra_mask = UniformMatrix(n, d, mask_scale_, rng_);
  r.rb_mask = UniformMatrix(m, d, mask_scale_, rng_);
  r.ra_share = UniformMatrix(n, m, mask_scale_ * static_cast<double>(d), rng_);
  r.rb_share = r.ra_mask * r.rb_mask.transpose() - r.ra_share;
  r.id_ra_mask = next_mask_id();
  r.id_rb_mask = next_mask_id();
  r.id_ra_share = next_mask_id();
  r.id_rb_share = next_mask_id();
  return r;
}

SecureProductResult secure_dot_product(const Matrix& x_a, const Matrix& x_b, uint64_t seed,
                                       bool record_payloads) {
  CommodityServer server(seed);
  const auto dealt = server.deal(x_a.rows(), x_b.rows(), x_a.cols());
  return secure_dot_product(x_a, x_b, dealt, seed, record_payloads);
}

SecureProductResult secure_dot_product(const Matrix& x_a, const Matrix& x_b,
                                       const CorrelatedRandomness& dealt, uint64_t seed,
                                       bool record_payloads) {
  Require(x_a.cols() == x_b.cols(), ErrorCode::kShapeMismatch,
          "secure product inner dimensions differ: " + std::to_string(x_a.cols()) + " vs " +
              std::to_string(x_b.cols()));
  Require(x_a.rows() > 0 && x_b.rows() > 0 && x_a.cols() > 0, ErrorCode::kInvalidArgument,
          "secure product inputs must be nonempty");
  Require(dealt.ra_mask.rows() == x_a.rows() && dealt.ra_mask.cols() == x_a.cols() &&
              dealt.rb_mask.rows() == x_b.rows() && dealt.rb_mask.cols() == x_b.cols(),
          ErrorCode::kShapeMismatch, "dealt randomness does not match input shapes");

  SecureProductResult res;
  auto& t = res.transcript;
  t.invocation = g_next_invocation.fetch_add(1);
  const uint64_t id_v2 = next_mask_id();
  t.mask_ids = {dealt.id_ra_mask, dealt.id_rb_mask, dealt.id_ra_share, dealt.id_rb_share, id_v2};
  consume_mask_ids(t.mask_ids);

  const bool rec = record_payloads;
  Send(t, "server", "A", "Ra", dealt.ra_mask, {dealt.id_ra_mask}, rec);
  Send(t, "server", "A", "ra", dealt.ra_share, {dealt.id_ra_share}, rec);
  Send(t, "server", "B", "Rb", dealt.rb_mask, {dealt.id_rb_mask}, rec);
  Send(t, "server", "B", "rb", dealt.rb_share, {dealt.id_rb_share}, rec);

  // Party A masks its input for B; party B masks its input for A.
  const Matrix a_masked = x_a + dealt.ra_mask;
  Send(t, "A", "B", "X+Ra", a_masked, {dealt.id_ra_mask}, rec);
  const Matrix b_masked = x_b + dealt.rb_mask;
  Send(t, "B", "A", "Y+Rb", b_masked, {dealt.id_rb_mask}, rec);

  // B: fresh output share V2, reply U to A.
  Rng rng_b = MakeRng(seed, 0xB0B0000ULL + id_v2);
  const Matrix v2 =
      UniformMatrix(x_a.rows(), x_b.rows(), static_cast<double>(x_a.cols()), rng_b);
  const Matrix u = a_masked * x_b.transpose() + dealt.rb_share - v2;
  Send(t, "B", "A", "U", u, {dealt.id_rb_share, id_v2}, rec);

  // A: its output share.
  const Matrix v1 = u - dealt.ra_mask * b_masked.transpose() + dealt.ra_share;
  Send(t, "A", "output", "V1", v1, {}, rec);
  Send(t, "B", "output", "V2", v2, {id_v2}, rec);

  res.product = v1 + v2;
  return res;
}

}  // namespace otcost::privacy
