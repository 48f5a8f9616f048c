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

#include "otcost/training.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace otcost::probe {
namespace {

// Row-wise log-sum-exp.
Vector LogSumExpRows(const Matrix& logits) {
  const Vector row_max = logits.rowwise().maxCoeff();
  return row_max.array() +
         (logits.colwise() - row_max).array().exp().rowwise().sum().log();
}

double CrossEntropy(const Matrix& logits, std::span<const int> labels, Matrix* grad) {
  const Vector lse = LogSumExpRows(logits);
  double loss = 0.0;
  for (Index i = 0; i < logits.rows(); ++i) {
    loss += lse(i) - logits(i, labels[static_cast<std::size_t>(i)]);
  }
  if (grad != nullptr) {
    *grad = (logits.colwise() - lse).array().exp().matrix();
    for (Index i = 0; i < logits.rows(); ++i) (*grad)(i, labels[static_cast<std::size_t>(i)]) -= 1.0;
    *grad /= static_cast<double>(logits.rows());
  }
  return loss / static_cast<double>(logits.rows());
}

void CheckCompatible(const ModelParams& m, const Dataset& d) {
  Require(d.dim() == m.input_dim(), ErrorCode::kShapeMismatch,
          "dataset has " + std::to_string(d.dim()) + " features, model expects " +
              std::to_string(m.input_dim()));
  Require(d.num_classes <= m.output_dim(), ErrorCode::kShapeMismatch,
          "dataset has " + std::to_string(d.num_classes) + " classes, model outputs " +
              std::to_string(m.output_dim()));
}

}  // namespace

void TrainOpts::validate() const {
  Require(learning_rate > 0.0 && std::isfinite(learning_rate), ErrorCode::kInvalidArgument,
          "learning rate must be > 0");
  Require(batch_size >= 1, ErrorCode::kInvalidArgument, "batch size must be >= 1");
  Require(local_epochs >= 1, ErrorCode::kInvalidArgument, "local epochs must be >= 1");
  Require(prox_mu >= 0.0 && std::isfinite(prox_mu), ErrorCode::kInvalidArgument,
          "FedProx mu must be >= 0");
}

TrainingDivergedError::TrainingDivergedError(const TrainingDiagnostics& diag)
    : Error(ErrorCode::kNumerical,
            "non-finite loss at epoch " + std::to_string(diag.epoch) + " step " +
                std::to_string(diag.step) + " (lr=" + std::to_string(diag.learning_rate) +
                "); learning rate likely too high"),
      diag_(diag) {}

ModelParams local_update(const ModelParams& m, const Dataset& d, const TrainOpts& opts,
                         uint64_t stream) {
  opts.validate();
  m.validate();
  d.validate();
  CheckCompatible(m, d);

  const std::size_t n_layers = m.layers.size();
  ModelParams w = m;
  Rng rng = MakeRng(opts.seed, 0x70CA1000ULL + stream);
  std::vector<Index> order(static_cast<std::size_t>(d.size()));
  std::iota(order.begin(), order.end(), 0);

  std::vector<Matrix> acts(n_layers);  // acts[i] = input to layer i
  std::vector<int> batch_labels;
  int step = 0;
  for (int epoch = 0; epoch < opts.local_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(opts.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(opts.batch_size));
      const auto b = static_cast<Index>(end - start);
      acts[0].resize(b, d.dim());
      batch_labels.resize(static_cast<std::size_t>(b));
      for (Index i = 0; i < b; ++i) {
        const Index row = order[start + static_cast<std::size_t>(i)];
        acts[0].row(i) = d.features.row(row);
        batch_labels[static_cast<std::size_t>(i)] = d.labels[static_cast<std::size_t>(row)];
      }
      for (std::size_t l = 0; l + 1 < n_layers; ++l) {
        Matrix z = (acts[l] * w.layers[l].weight).rowwise() + w.layers[l].bias.transpose();
        acts[l + 1] = w.activation == Activation::kTanh ? Matrix(z.array().tanh())
                                                         : Matrix(z.cwiseMax(0.0));
      }
      const Matrix logits =
          (acts[n_layers - 1] * w.layers.back().weight).rowwise() + w.layers.back().bias.transpose();
      Matrix delta;
      const double loss = CrossEntropy(logits, batch_labels, &delta);
      if (!std::isfinite(loss)) {
        throw TrainingDivergedError({epoch, step, loss, opts.learning_rate});
      }

      for (std::size_t l = n_layers; l-- > 0;) {
        Matrix grad_w = acts[l].transpose() * delta;
        Vector grad_b = delta.colwise().sum().transpose();
        if (l > 0) {
          Matrix upstream = delta * w.layers[l].weight.transpose();
          if (w.activation == Activation::kTanh) {
            delta = upstream.cwiseProduct((1.0 - acts[l].array().square()).matrix());
          } else {
            delta = upstream.cwiseProduct((acts[l].array() > 0.0).cast<double>().matrix());
          }
        }
        if (opts.prox_mu > 0.0) {
          grad_w += opts.prox_mu * (w.layers[l].weight - m.layers[l].weight);
          grad_b += opts.prox_mu * (w.layers[l].bias - m.layers[l].bias);
        }
        w.layers[l].weight -= opts.learning_rate * grad_w;
        w.layers[l].bias -= opts.learning_rate * grad_b;
      }
      ++step;
    }
  }
  return w;
}

ModelParams fedavg(const std::vector<ModelParams>& models, const std::vector<double>& weights) {
  Require(!models.empty(), ErrorCode::kInvalidArgument, "fedavg needs at least one model");
  Require(models.size() == weights.size(), ErrorCode::kInvalidArgument,
          "fedavg needs one weight per model");
  double total = 0.0;
  for (double w : weights) {
    Require(w >= 0.0 && std::isfinite(w), ErrorCode::kInvalidArgument,
            "fedavg weights must be nonnegative");
    total += w;
  }
  Require(total > 0.0, ErrorCode::kInvalidArgument, "fedavg weights are all zero");
  for (const auto& m : models) {
    Require(same_shape(m, models.front()) && m.activation == models.front().activation,
            ErrorCode::kShapeMismatch, "fedavg models differ in shape");
  }
  ModelParams out = models.front();
  for (std::size_t l = 0; l < out.layers.size(); ++l) {
    out.layers[l].weight.setZero();
    out.layers[l].bias.setZero();
    for (std::size_t k = 0; k < models.size(); ++k) {
      if (weights[k] == 0.0) continue;
      const double share = weights[k] / total;
      out.layers[l].weight += share * models[k].layers[l].weight;
      out.layers[l].bias += share * models[k].layers[l].bias;
    }
  }
  return out;
}

namespace {

std::vector<double> ClientWeights(const std::vector<Dataset>& clients) {
  std::vector<double> w;
  for (const auto& c : clients) w.push_back(static_cast<double>(c.size()));
  return w;
}

}  // namespace

ProbeResult run_probe_round(const std::vector<Dataset>& clients, const ModelSpec& spec,
                            const TrainOpts& opts) {
  Require(clients.size() >= 2, ErrorCode::kInvalidArgument, "probe round needs >= 2 clients");
  ProbeResult r;
  r.initial_global = init_model(spec);
  for (const auto& c : clients) {
    r.client_models.push_back(local_update(r.initial_global, c, opts, /*stream=*/0));
  }
  r.global = fedavg(r.client_models, ClientWeights(clients));
  for (const auto& m : r.client_models) r.deltas.push_back(difference(m, r.initial_global));
  return r;
}

ActivationSet extract_activations(const Dataset& d, const ModelParams& m, std::string client_id) {
  d.validate();
  m.validate();
  CheckCompatible(m, d);
  ActivationSet out;
  out.h = forward(m, d.features).penultimate;
  out.labels = d.labels;
  out.num_classes = d.num_classes;
  out.client_id = std::move(client_id);
  out.model_hash = m.hash();
  return out;
}

double weight_divergence(const WeightDelta& global_delta, const WeightDelta& local_delta) {
  const Vector g = global_delta.flatten();
  const Vector l = local_delta.flatten();
  Require(g.size() == l.size(), ErrorCode::kShapeMismatch,
          "weight deltas have different parameter counts");
  const double denom = l.norm();
  Require(denom > 0.0, ErrorCode::kNumerical,
          "weight divergence undefined: local update has zero norm");
  return (g - l).norm() / denom;
}

EvalMetrics evaluate(const ModelParams& m, const Dataset& d) {
  Require(d.size() > 0, ErrorCode::kInvalidArgument, "cannot evaluate on an empty dataset");
  d.validate();
  CheckCompatible(m, d);
  const Matrix logits = forward(m, d.features).logits;
  EvalMetrics e;
  e.mean_loss = CrossEntropy(logits, d.labels, nullptr);
  Index correct = 0;
  for (Index i = 0; i < logits.rows(); ++i) {
    Index arg = 0;
    logits.row(i).maxCoeff(&arg);
    correct += arg == d.labels[static_cast<std::size_t>(i)] ? 1 : 0;
  }
  e.accuracy = static_cast<double>(correct) / static_cast<double>(d.size());
  return e;
}

const char* FedAlgorithmName(FedAlgorithm a) {
  return a == FedAlgorithm::kFedAvg ? "fedavg" : "fedprox";
}

double TrainingTrace::terminal_divergence() const {
  Require(!rounds.empty(), ErrorCode::kInvalidArgument, "trace has no rounds");
  const auto& d = rounds.back().divergence;
  return std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
}

TrainingTrace train_federated(const std::vector<Dataset>& clients, const ModelSpec& spec,
                              const TrainOpts& opts, int rounds, FedAlgorithm algo,
                              const std::vector<Dataset>& eval_sets) {
  Require(rounds >= 1, ErrorCode::kInvalidArgument, "rounds must be >= 1");
  Require(clients.size() >= 2, ErrorCode::kInvalidArgument, "federated training needs >= 2 clients");
  Require(eval_sets.empty() || eval_sets.size() == clients.size(), ErrorCode::kInvalidArgument,
          "eval_sets must be empty or one per client");
  const std::vector<Dataset>& evals = eval_sets.empty() ? clients : eval_sets;
  TrainOpts round_opts = opts;
  if (algo == FedAlgorithm::kFedAvg) round_opts.prox_mu = 0.0;
  const auto weights = ClientWeights(clients);

  TrainingTrace trace;
  trace.initial_global = init_model(spec);
  ModelParams global = trace.initial_global;
  std::vector<ModelParams> locals;
  for (int r = 1; r <= rounds; ++r) {
    locals.clear();
    for (const auto& c : clients) {
      locals.push_back(local_update(global, c, round_opts, static_cast<uint64_t>(r - 1)));
    }
    ModelParams next = fedavg(locals, weights);
    RoundRecord rec;
    rec.round = r;
    const WeightDelta global_delta = difference(next, global);
    for (std::size_t k = 0; k < clients.size(); ++k) {
      rec.client_deltas.push_back(difference(locals[k], global));
      rec.divergence.push_back(weight_divergence(global_delta, rec.client_deltas.back()));
      rec.eval.push_back(evaluate(next, evals[k]));
    }
    rec.global = next;
    global = std::move(next);
    trace.rounds.push_back(std::move(rec));
  }
  trace.final_local_models = locals;
  for (std::size_t k = 0; k < clients.size(); ++k) {
    trace.final_local_eval.push_back(evaluate(locals[k], evals[k]));
  }
  return trace;
}

std::vector<EvalMetrics> train_local(const std::vector<Dataset>& clients, const ModelSpec& spec,
                                     const TrainOpts& opts, int rounds,
                                     const std::vector<Dataset>& eval_sets) {
  Require(rounds >= 1, ErrorCode::kInvalidArgument, "rounds must be >= 1");
  Require(eval_sets.size() == clients.size(), ErrorCode::kInvalidArgument,
          "train_local needs one eval set per client");
  const ModelParams init = init_model(spec);
  TrainOpts local_opts = opts;
  local_opts.prox_mu = 0.0;
  std::vector<EvalMetrics> out;
  for (std::size_t k = 0; k < clients.size(); ++k) {
    ModelParams m = init;
    for (int r = 1; r <= rounds; ++r) {
      m = local_update(m, clients[k], local_opts, static_cast<uint64_t>(r - 1));
    }
    out.push_back(evaluate(m, eval_sets[k]));
  }
  return out;
}

void write_trace_csv(const TrainingTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path);
  Require(out.good(), ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out << "round,client,divergence,accuracy,loss\n";
  out.precision(17);
  for (const auto& rec : trace.rounds) {
    for (std::size_t k = 0; k < rec.divergence.size(); ++k) {
      out << rec.round << ',' << k << ',' << rec.divergence[k] << ',' << rec.eval[k].accuracy
          << ',' << rec.eval[k].mean_loss << '\n';
    }
  }
  Require(out.good(), ErrorCode::kIo, "write failed for " + path.string());
}

GradientBound check_gradient_bound(const Vector& z_c, const Vector& z_k, const Vector& p_a,
                                   const Vector& p_b, int y) {
  Require(z_c.size() == z_k.size() && z_c.size() > 0, ErrorCode::kShapeMismatch,
          "activation vectors must share a nonzero dimension");
  Require(p_a.size() == p_b.size() && p_a.size() > 0, ErrorCode::kShapeMismatch,
          "probability vectors must share a nonzero dimension");
  Require(y >= 0 && y < p_a.size(), ErrorCode::kInvalidArgument, "class index out of range");
  constexpr double kTol = 1e-9;
  Require(std::abs(z_c.norm() - 1.0) <= kTol && std::abs(z_k.norm() - 1.0) <= kTol,
          ErrorCode::kInvalidArgument, "activation vectors must have unit norm");
  for (const Vector* p : {&p_a, &p_b}) {
    Require(p->minCoeff() >= -kTol && std::abs(p->sum() - 1.0) <= kTol,
            ErrorCode::kInvalidArgument, "probability vector is not on the simplex");
  }
  Vector r_a = p_a;
  r_a(y) -= 1.0;
  Vector r_b = p_b;
  r_b(y) -= 1.0;
  const Matrix g = r_a * z_c.transpose() - r_b * z_k.transpose();
  GradientBound out;
  out.lhs = g.norm();
  out.rhs = r_a.norm() * (z_c - z_k).norm() + (p_a - p_b).norm();
  return out;
}

}  // namespace otcost::probe
