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

#include "otcost/model.h"

namespace otcost::probe {

struct TrainOpts {
  double learning_rate = 0.05;
  int batch_size = 64;
  int local_epochs = 1;
  // FedProx proximal weight; 0 gives plain SGD.
  double prox_mu = 0.0;
  uint64_t seed = 0;

  void validate() const;
};

struct TrainingDiagnostics {
  int epoch = 0;
  int step = 0;
  double loss = 0.0;
  double learning_rate = 0.0;
};

// Raised when the loss becomes non-finite; usually a learning rate that is
// too high for the data scale.
class TrainingDivergedError : public Error {
 public:
  explicit TrainingDivergedError(const TrainingDiagnostics& diag);
  const TrainingDiagnostics& diagnostics() const { return diag_; }

 private:
  TrainingDiagnostics diag_;
};

// E epochs of minibatch SGD on softmax cross-entropy.  With prox_mu > 0 every
// step also pulls toward the input parameters with weight mu.  Minibatch order
// is drawn from (opts.seed, stream), so clients that share a stream see the
// same shuffle of their own rows.
ModelParams local_update(const ModelParams& m, const Dataset& d, const TrainOpts& opts,
                         uint64_t stream = 0);

ModelParams fedavg(const std::vector<ModelParams>& models, const std::vector<double>& weights);

struct ProbeResult {
  ModelParams initial_global;             // theta_g^0
  ModelParams global;                     // theta_g^1
  std::vector<ModelParams> client_models;  // theta_c^1
  std::vector<WeightDelta> deltas;         // theta_c^1 - theta_g^0
};

ProbeResult run_probe_round(const std::vector<Dataset>& clients, const ModelSpec& spec,
                            const TrainOpts& opts);

struct ActivationSet {
  Matrix h;  // n x d penultimate activations
  std::vector<int> labels;
  int num_classes = 0;
  std::string client_id;
  uint64_t model_hash = 0;

  Index size() const { return h.rows(); }
  Index dim() const { return h.cols(); }
};

ActivationSet extract_activations(const Dataset& d, const ModelParams& m,
                                  std::string client_id = {});

// ||global - local|| / ||local|| over all flattened parameters.
double weight_divergence(const WeightDelta& global_delta, const WeightDelta& local_delta);

struct EvalMetrics {
  double accuracy = 0.0;
  double mean_loss = 0.0;
};

EvalMetrics evaluate(const ModelParams& m, const Dataset& d);

enum class FedAlgorithm { kFedAvg, kFedProx };
const char* FedAlgorithmName(FedAlgorithm a);

struct RoundRecord {
  int round = 0;  // 1-based
  ModelParams global;
  std::vector<WeightDelta> client_deltas;
  std::vector<double> divergence;
  std::vector<EvalMetrics> eval;  // global model on each client's eval set
};

struct TrainingTrace {
  ModelParams initial_global;
  std::vector<RoundRecord> rounds;
  // Each client's model after its last local update (the personalized model).
  std::vector<ModelParams> final_local_models;
  std::vector<EvalMetrics> final_local_eval;

  double terminal_divergence() const;
};

// `eval_sets` may be empty, in which case each client is evaluated on its
// own training data.
TrainingTrace train_federated(const std::vector<Dataset>& clients, const ModelSpec& spec,
                              const TrainOpts& opts, int rounds, FedAlgorithm algo,
                              const std::vector<Dataset>& eval_sets = {});

// Independent per-client training from theta_g^0 with the same per-round
// seeding as train_federated; returns each client's final eval metrics.
std::vector<EvalMetrics> train_local(const std::vector<Dataset>& clients, const ModelSpec& spec,
                                     const TrainOpts& opts, int rounds,
                                     const std::vector<Dataset>& eval_sets);

// Columns: round,client,divergence,accuracy,loss
void write_trace_csv(const TrainingTrace& trace, const std::filesystem::path& path);

struct GradientBound {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds(double tol = 1e-9) const { return lhs <= rhs + tol; }
};

// Compares the last-layer cross-entropy gradient contributions of two
// same-class samples with unit activations z_c, z_k and predicted class
// probabilities p_a, p_b:
//   lhs = ||(p_a - e_y) z_c^T - (p_b - e_y) z_k^T||_F
//   rhs = ||p_a - e_y|| ||z_c - z_k|| + ||p_a - p_b||
GradientBound check_gradient_bound(const Vector& z_c, const Vector& z_k, const Vector& p_a,
                                   const Vector& p_b, int y);

}  // namespace otcost::probe
