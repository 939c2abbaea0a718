// Copyright 2026 The mcprec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mcprec/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "mcprec/embedding_index.hpp"
#include "mcprec/error.hpp"
#include "mcprec/metrics.hpp"

namespace mcprec {
namespace {

double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& v) {
  const double m = v.maxCoeff();
  return m + std::log((v.array() - m).exp().sum());
}

Eigen::MatrixXd row_softmax(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd p(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const Eigen::RowVectorXd row = logits.row(i);
    const double m = row.maxCoeff();
    const Eigen::RowVectorXd e = (row.array() - m).exp().matrix();
    p.row(i) = e / e.sum();
  }
  return p;
}

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

TowerGradients zeros_like(const Tower& tower) {
  TowerGradients g;
  for (const auto& layer : tower.layers) {
    g.push_back({Eigen::MatrixXd::Zero(layer.weight.rows(), layer.weight.cols()),
                 Eigen::VectorXd::Zero(layer.bias.size())});
  }
  return g;
}

bool finite(const TowerGradients& g) {
  return std::all_of(g.begin(), g.end(),
                     [](const DenseLayer& l) { return l.weight.allFinite() && l.bias.allFinite(); });
}

double max_abs(const TowerGradients& g) {
  double m = 0.0;
  for (const auto& l : g) {
    if (l.weight.size()) m = std::max(m, l.weight.cwiseAbs().maxCoeff());
    if (l.bias.size()) m = std::max(m, l.bias.cwiseAbs().maxCoeff());
  }
  return m;
}

template <class Param>
void adamw_update(Param& p, const Param& g, Param& m, Param& v, const OptimizerConfig& c, double bc1, double bc2) {
  p *= 1.0 - c.learning_rate * c.weight_decay;
  m = c.beta1 * m + (1.0 - c.beta1) * g;
  v = c.beta2 * v + (1.0 - c.beta2) * g.cwiseProduct(g);
  p.array() -= c.learning_rate * (m.array() / bc1) / ((v.array() / bc2).sqrt() + c.epsilon);
}

void adamw_tower(Tower& tower, const TowerGradients& g, TowerGradients& m, TowerGradients& v,
                 const OptimizerConfig& c, double bc1, double bc2) {
  for (std::size_t l = 0; l < tower.layers.size(); ++l) {
    adamw_update(tower.layers[l].weight, g[l].weight, m[l].weight, v[l].weight, c, bc1, bc2);
    adamw_update(tower.layers[l].bias, g[l].bias, m[l].bias, v[l].bias, c, bc1, bc2);
  }
}

}  // namespace

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::kSymmetric: return "symmetric";
    case LossKind::kOneSided: return "one_sided";
    case LossKind::kBce: return "bce";
  }
  return "symmetric";
}

LossKind parse_loss_kind(std::string_view name) {
  if (name == "symmetric") return LossKind::kSymmetric;
  if (name == "one_sided") return LossKind::kOneSided;
  if (name == "bce") return LossKind::kBce;
  throw ConfigError(fmt::format("unknown loss '{}'", name));
}

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("betas must be in [0, 1)");
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight decay must be non-negative");
}

void TrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("batch size must be at least 1");
  if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
  if (eval_every == 0) throw ConfigError("eval_every must be at least 1");
  if (eval_k == 0) throw ConfigError("eval_k must be at least 1");
  optimizer.validate();
}

Batch sample_batch(std::span<const std::string> task_ids, const InteractionSet& interactions, Rng& rng) {
  Batch batch;
  std::unordered_set<std::string_view> seen;
  for (const auto& task_id : task_ids) {
    if (!seen.insert(task_id).second) throw std::invalid_argument("task appears twice in a batch: " + task_id);
    auto it = interactions.find(task_id);
    if (it == interactions.end() || it->second.empty()) {
      spdlog::warn("task {} has no positives; skipped", task_id);
      continue;
    }
    batch.push_back({task_id, it->second[rng.index(it->second.size())]});
  }
  return batch;
}

std::vector<Batch> epoch_batches(std::vector<std::string> task_ids, const InteractionSet& interactions,
                                 std::size_t batch_size, Rng& rng) {
  if (batch_size == 0) throw ConfigError("batch size must be at least 1");
  rng.shuffle(task_ids);
  std::vector<Batch> batches;
  for (std::size_t start = 0; start < task_ids.size(); start += batch_size) {
    const std::size_t end = std::min(task_ids.size(), start + batch_size);
    auto batch = sample_batch(std::span(task_ids).subspan(start, end - start), interactions, rng);
    if (!batch.empty()) batches.push_back(std::move(batch));
  }
  return batches;
}

LossResult contrastive_loss(const Eigen::MatrixXd& task_embeddings, const Eigen::MatrixXd& server_embeddings,
                            double temperature, LossKind kind) {
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
  if (task_embeddings.rows() != server_embeddings.rows() || task_embeddings.cols() != server_embeddings.cols()) {
    throw std::invalid_argument("task and server embedding batches differ in shape");
  }
  const Eigen::Index b = task_embeddings.cols();
  LossResult result;
  result.d_task = Eigen::MatrixXd::Zero(task_embeddings.rows(), b);
  result.d_server = Eigen::MatrixXd::Zero(server_embeddings.rows(), b);
  if (b == 0) return result;

  const Eigen::MatrixXd logits = task_embeddings.transpose() * server_embeddings / temperature;
  const double n = static_cast<double>(b);
  Eigen::MatrixXd grad;  // dLoss / dlogits

  if (kind == LossKind::kBce) {
    grad.resize(b, b);
    double loss = 0.0;
    for (Eigen::Index i = 0; i < b; ++i) {
      for (Eigen::Index j = 0; j < b; ++j) {
        const double x = logits(i, j);
        const double y = i == j ? 1.0 : 0.0;
        loss += softplus(x) - y * x;
        grad(i, j) = (sigmoid(x) - y) / (n * n);
      }
    }
    result.loss = loss / (n * n);
  } else {
    double task_side = 0.0;
    for (Eigen::Index i = 0; i < b; ++i) task_side += log_sum_exp(logits.row(i).transpose()) - logits(i, i);
    task_side /= n;
    const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(b, b);
    const Eigen::MatrixXd task_grad = (row_softmax(logits) - identity) / n;
    if (kind == LossKind::kOneSided) {
      result.loss = task_side;
      grad = task_grad;
    } else {
      double server_side = 0.0;
      for (Eigen::Index j = 0; j < b; ++j) server_side += log_sum_exp(logits.col(j)) - logits(j, j);
      server_side /= n;
      const Eigen::MatrixXd server_grad = (row_softmax(logits.transpose()).transpose() - identity) / n;
      result.loss = 0.5 * (task_side + server_side);
      grad = 0.5 * (task_grad + server_grad);
    }
  }
  result.d_task = server_embeddings * grad.transpose() / temperature;
  result.d_server = task_embeddings * grad / temperature;
  return result;
}

Eigen::MatrixXd normalize_backward(const Eigen::MatrixXd& z, const Eigen::MatrixXd& d_normalized) {
  Eigen::MatrixXd dz = Eigen::MatrixXd::Zero(z.rows(), z.cols());
  for (Eigen::Index c = 0; c < z.cols(); ++c) {
    const double norm = z.col(c).norm();
    if (norm == 0.0) continue;
    const Eigen::VectorXd unit = z.col(c) / norm;
    dz.col(c) = (d_normalized.col(c) - unit * unit.dot(d_normalized.col(c))) / norm;
  }
  return dz;
}

TowerGradients backward(const Tower& tower, const SparseBatch& inputs, const TowerTrace& trace,
                        const Eigen::MatrixXd& d_output) {
  const std::size_t layers = tower.layers.size();
  if (trace.pre.size() != layers || trace.post.size() != layers) {
    throw std::invalid_argument("backward: trace does not match the tower");
  }
  TowerGradients grads(layers);
  Eigen::MatrixXd delta = d_output;
  for (std::size_t l = layers; l-- > 0;) {
    if (l == 0) {
      grads[0].weight = delta * inputs.transpose();
    } else {
      grads[l].weight = delta * trace.post[l - 1].transpose();
    }
    grads[l].bias = delta.rowwise().sum();
    if (l == 0) break;
    Eigen::MatrixXd upstream = tower.layers[l].weight.transpose() * delta;
    const auto& pre = trace.pre[l - 1];
    upstream = upstream.cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
    if (trace.mask[l - 1].size() != 0) upstream = upstream.cwiseProduct(trace.mask[l - 1]);
    delta = std::move(upstream);
  }
  return grads;
}

bool DualGradients::all_finite() const { return finite(task) && finite(server); }

double DualGradients::max_abs() const { return std::max(mcprec::max_abs(task), mcprec::max_abs(server)); }

StepResult compute_gradients(const DualEncoder& encoder, const SparseBatch& task_inputs,
                             const SparseBatch& server_inputs, double temperature, LossKind kind, Rng* rng) {
  if (encoder.identity) throw std::invalid_argument("an identity encoder has no parameters to train");
  TowerTrace task_trace;
  TowerTrace server_trace;
  const Eigen::MatrixXd zt = forward_batch(encoder.task_tower, task_inputs, Mode::kTrain, rng, &task_trace);
  const Eigen::MatrixXd zs = forward_batch(encoder.server_tower, server_inputs, Mode::kTrain, rng, &server_trace);
  const auto loss = contrastive_loss(normalize_columns(zt), normalize_columns(zs), temperature, kind);
  StepResult step;
  step.loss = loss.loss;
  step.gradients.task = backward(encoder.task_tower, task_inputs, task_trace, normalize_backward(zt, loss.d_task));
  step.gradients.server =
      backward(encoder.server_tower, server_inputs, server_trace, normalize_backward(zs, loss.d_server));
  return step;
}

bool optimizer_step(DualEncoder& encoder, const DualGradients& gradients, AdamWState& state,
                    const OptimizerConfig& config) {
  if (!gradients.all_finite()) {
    spdlog::warn("non-finite gradient; optimizer step skipped");
    return false;
  }
  if (gradients.task.size() != encoder.task_tower.layers.size() ||
      gradients.server.size() != encoder.server_tower.layers.size()) {
    throw std::invalid_argument("gradient shapes do not match the encoder");
  }
  if (state.step == 0) {
    state.first_moment = {zeros_like(encoder.task_tower), zeros_like(encoder.server_tower)};
    state.second_moment = state.first_moment;
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(config.beta1, t);
  const double bc2 = 1.0 - std::pow(config.beta2, t);
  adamw_tower(encoder.task_tower, gradients.task, state.first_moment.task, state.second_moment.task, config, bc1,
              bc2);
  adamw_tower(encoder.server_tower, gradients.server, state.first_moment.server, state.second_moment.server,
              config, bc1, bc2);
  return true;
}

nlohmann::ordered_json EpochRecord::to_json() const {
  nlohmann::ordered_json out;
  out["epoch"] = epoch;
  out["loss"] = loss;
  out[fmt::format("recall@{}_valid", k)] = valid_recall ? nlohmann::ordered_json(*valid_recall) : nlohmann::ordered_json(nullptr);
  return out;
}

double semantic_recall(const DualEncoder& encoder, const Dataset& dataset, const Vocabulary& vocabulary,
                       std::span<const std::string> task_ids, std::size_t k) {
  const auto index = encode_corpus(encoder, dataset.servers, vocabulary);
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& task_id : task_ids) {
    const auto* task = dataset.tasks.find(task_id);
    auto positives = dataset.interactions.find(task_id);
    if (task == nullptr || positives == dataset.interactions.end() || positives->second.empty()) continue;
    const auto query = encoder.encode_task(lexical_input(*task, vocabulary)).vector;
    std::vector<std::string> ranked;
    for (std::size_t row : top_k_rows(index.similarity_pass(query), index.ids(), k)) ranked.push_back(index.id(row));
    sum += recall_precision_f1(ranked, positives->second, k).recall;
    ++count;
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

TrainResult train(const Dataset& dataset, const DatasetSplit& split, const Vocabulary& vocabulary,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  Rng init_rng(config.seed);
  Rng order_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  Rng dropout_rng(config.seed ^ 0xc2b2ae3d27d4eb4fULL);

  const auto has_positives = [&](const std::string& id) {
    auto it = dataset.interactions.find(id);
    return dataset.tasks.find(id) != nullptr && it != dataset.interactions.end() && !it->second.empty();
  };
  std::vector<std::string> train_ids;
  for (const auto& id : split.train) {
    if (has_positives(id)) train_ids.push_back(id);
  }
  if (train_ids.size() < split.train.size()) {
    spdlog::warn("{} training task(s) without positives ignored", split.train.size() - train_ids.size());
  }
  if (train_ids.empty()) throw ConfigError("no training tasks with positives");
  std::vector<std::string> valid_ids;
  for (const auto& id : split.valid) {
    if (has_positives(id)) valid_ids.push_back(id);
  }

  std::unordered_map<std::string, SparseVector> task_inputs;
  for (const auto& id : train_ids) task_inputs.emplace(id, lexical_input(*dataset.tasks.find(id), vocabulary));
  std::unordered_map<std::string, SparseVector> server_inputs;
  for (const auto& server : dataset.servers) server_inputs.emplace(server.id, lexical_input(server, vocabulary));

  TrainResult result;
  DualEncoder encoder = make_dual_encoder(config.tower, vocabulary, init_rng);
  result.best = encoder;
  const bool has_valid = !valid_ids.empty();
  if (has_valid) {
    result.best_valid_recall = semantic_recall(encoder, dataset, vocabulary, valid_ids, config.eval_k);
  }

  AdamWState state;
  const std::size_t dim = vocabulary.size();
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    EpochRecord record;
    record.epoch = epoch;
    record.k = config.eval_k;
    double weighted_loss = 0.0;
    std::size_t examples = 0;
    bool diverged = false;
    for (const auto& batch : epoch_batches(train_ids, dataset.interactions, config.batch_size, order_rng)) {
      std::vector<SparseVector> tasks;
      std::vector<SparseVector> servers;
      for (const auto& pair : batch) {
        tasks.push_back(task_inputs.at(pair.task_id));
        servers.push_back(server_inputs.at(pair.server_id));
      }
      auto step = compute_gradients(encoder, to_batch(tasks, dim), to_batch(servers, dim), config.temperature,
                                    config.loss, &dropout_rng);
      if (!std::isfinite(step.loss)) {
        diverged = true;
        break;
      }
      if (!optimizer_step(encoder, step.gradients, state, config.optimizer)) ++record.skipped_steps;
      weighted_loss += step.loss * static_cast<double>(batch.size());
      examples += batch.size();
    }
    if (diverged) {
      record.loss = std::numeric_limits<double>::quiet_NaN();
      result.log.push_back(record);
      if (on_epoch) on_epoch(record);
      spdlog::error("training diverged at epoch {}; keeping the best parameters so far", epoch);
      result.diverged = true;
      break;
    }
    record.loss = examples == 0 ? 0.0 : weighted_loss / static_cast<double>(examples);
    if (has_valid && (epoch % config.eval_every == 0 || epoch == config.epochs)) {
      record.valid_recall = semantic_recall(encoder, dataset, vocabulary, valid_ids, config.eval_k);
      if (*record.valid_recall > *result.best_valid_recall) {
        result.best_valid_recall = record.valid_recall;
        result.best_epoch = epoch;
        result.best = encoder;
      }
    }
    if (!has_valid && encoder.task_tower.all_finite() && encoder.server_tower.all_finite()) {
      result.best = encoder;
      result.best_epoch = epoch;
    }
    result.log.push_back(record);
    if (on_epoch) on_epoch(record);
  }
  return result;
}

}  // namespace mcprec
