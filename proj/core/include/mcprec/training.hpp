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

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "mcprec/corpus.hpp"
#include "mcprec/encoder.hpp"
#include "mcprec/lexical.hpp"
#include "mcprec/random.hpp"

namespace mcprec {

enum class LossKind {
  kSymmetric,  // task->server and server->task softmax terms, averaged
  kOneSided,   // task->server only
  kBce,        // point-wise sigmoid cross-entropy over all in-batch pairs
};

std::string_view to_string(LossKind kind);
LossKind parse_loss_kind(std::string_view name);

struct OptimizerConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;

  void validate() const;
};

struct TrainConfig {
  std::size_t batch_size = 256;
  std::size_t epochs = 200;
  double temperature = 0.07;
  std::uint64_t seed = 42;
  std::size_t eval_every = 1;
  std::size_t eval_k = 10;
  LossKind loss = LossKind::kSymmetric;
  OptimizerConfig optimizer;
  TowerConfig tower;  // input_dim is taken from the vocabulary

  void validate() const;
};

struct TrainingPair {
  std::string task_id;
  std::string server_id;
};

using Batch = std::vector<TrainingPair>;

// One uniformly drawn positive per task, in the given task order. Tasks
// without positives are skipped with a warning; repeated task ids are an
// error (std::invalid_argument).
Batch sample_batch(std::span<const std::string> task_ids, const InteractionSet& interactions, Rng& rng);

// Shuffles the tasks and slices them into batches of at most `batch_size`,
// so every task appears once per epoch.
std::vector<Batch> epoch_batches(std::vector<std::string> task_ids, const InteractionSet& interactions,
                                 std::size_t batch_size, Rng& rng);

// Loss over unit-norm embeddings stored as columns (d' x B) and its gradient
// with respect to both inputs.
struct LossResult {
  double loss = 0.0;
  Eigen::MatrixXd d_task;
  Eigen::MatrixXd d_server;
};

LossResult contrastive_loss(const Eigen::MatrixXd& task_embeddings, const Eigen::MatrixXd& server_embeddings,
                            double temperature, LossKind kind = LossKind::kSymmetric);

// Gradient through column-wise L2 normalization: given z and dL/dz_hat,
// returns dL/dz. Zero columns get a zero gradient.
Eigen::MatrixXd normalize_backward(const Eigen::MatrixXd& z, const Eigen::MatrixXd& d_normalized);

// Per-layer gradients, shaped like Tower::layers.
using TowerGradients = std::vector<DenseLayer>;

// Backpropagates dL/d(output) through a tower using the activations recorded
// by forward_batch.
TowerGradients backward(const Tower& tower, const SparseBatch& inputs, const TowerTrace& trace,
                        const Eigen::MatrixXd& d_output);

struct DualGradients {
  TowerGradients task;
  TowerGradients server;

  bool all_finite() const;
  double max_abs() const;
};

struct StepResult {
  double loss = 0.0;
  DualGradients gradients;
};

// Forward both towers in train mode (dropout drawn from `rng` when the tower
// config has dropout), evaluate the loss and backpropagate.
StepResult compute_gradients(const DualEncoder& encoder, const SparseBatch& task_inputs,
                             const SparseBatch& server_inputs, double temperature, LossKind kind, Rng* rng);

struct AdamWState {
  std::uint64_t step = 0;
  DualGradients first_moment;
  DualGradients second_moment;
};

// Decoupled AdamW: p <- p (1 - lr wd), then the bias-corrected Adam update.
// Returns false and leaves everything untouched when a gradient is not
// finite.
bool optimizer_step(DualEncoder& encoder, const DualGradients& gradients, AdamWState& state,
                    const OptimizerConfig& config);

struct EpochRecord {
  std::size_t epoch = 0;
  std::size_t k = 10;
  double loss = 0.0;
  std::optional<double> valid_recall;  // only on evaluation epochs
  std::size_t skipped_steps = 0;

  nlohmann::ordered_json to_json() const;  // {epoch, loss, recall@<k>_valid}
};

struct TrainResult {
  DualEncoder best;
  std::size_t best_epoch = 0;  // 0 = initial parameters
  std::optional<double> best_valid_recall;
  std::vector<EpochRecord> log;
  bool diverged = false;
};

// Semantic-only Recall@k of `encoder` over `task_ids`, exact search.
double semantic_recall(const DualEncoder& encoder, const Dataset& dataset, const Vocabulary& vocabulary,
                       std::span<const std::string> task_ids, std::size_t k);

using EpochCallback = std::function<void(const EpochRecord&)>;

// Trains on split.train, keeps the parameters with the best validation
// Recall@eval_k (earliest epoch on ties; the final parameters when there is
// no validation data). A non-finite epoch loss stops training and returns the
// best parameters seen so far with `diverged` set.
TrainResult train(const Dataset& dataset, const DatasetSplit& split, const Vocabulary& vocabulary,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

}  // namespace mcprec
