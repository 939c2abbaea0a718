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
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "mcprec/lexical.hpp"
#include "mcprec/random.hpp"

namespace mcprec {

struct TowerConfig {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 512;
  std::size_t output_dim = 256;
  std::size_t layers = 3;  // affine layers; ReLU + dropout after all but the last
  double dropout = 0.2;

  void validate() const;
};

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
};

struct Tower {
  TowerConfig config;
  std::vector<DenseLayer> layers;

  std::size_t input_dim() const { return config.input_dim; }
  std::size_t output_dim() const { return config.output_dim; }
  std::size_t parameter_count() const;
  bool all_finite() const;
};

enum class Mode { kTrain, kInfer };

// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero.
Tower init_tower(const TowerConfig& config, Rng& rng);

// Single-example forward pass producing the unnormalized embedding. Dropout
// is applied only in train mode and requires `rng`. Throws
// std::invalid_argument on a dimension mismatch.
Eigen::VectorXd forward(const Tower& tower, const SparseVector& input, Mode mode = Mode::kInfer,
                        Rng* rng = nullptr);

// Examples stored column-wise: rows = input dim, cols = batch size.
using SparseBatch = Eigen::SparseMatrix<double>;
SparseBatch to_batch(std::span<const SparseVector> inputs, std::size_t dim);

// Activations kept for backpropagation. pre[l] and post[l] are the layer-l
// affine output and its activation (post == pre for the last layer); mask[l]
// holds the inverted-dropout multipliers for hidden layers (empty in infer
// mode).
struct TowerTrace {
  std::vector<Eigen::MatrixXd> pre;
  std::vector<Eigen::MatrixXd> post;
  std::vector<Eigen::MatrixXd> mask;
};

Eigen::MatrixXd forward_batch(const Tower& tower, const SparseBatch& inputs, Mode mode, Rng* rng,
                              TowerTrace* trace = nullptr);

Normalized<Eigen::VectorXd> normalize(Eigen::VectorXd z);
// Column-wise normalization; zero columns stay zero.
Eigen::MatrixXd normalize_columns(const Eigen::MatrixXd& z);

// Tolerance for "unit norm" checks on embeddings.
inline constexpr double kUnitNormTolerance = 1e-6;
bool is_unit_or_zero(const Eigen::VectorXd& v);

// Dot product of two normalized embeddings (zero vectors allowed and score 0).
// Throws std::invalid_argument for unnormalized input or a size mismatch.
double semantic_score(const Eigen::VectorXd& server_embedding, const Eigen::VectorXd& task_embedding);

// Task and server towers plus the fingerprint of the vocabulary they consume.
// In identity mode (no projection networks) the embedding is the normalized
// sparse input itself.
struct DualEncoder {
  Tower task_tower;
  Tower server_tower;
  std::uint64_t vocabulary_fingerprint = 0;
  bool identity = false;
  std::size_t identity_dim = 0;

  std::size_t input_dim() const { return identity ? identity_dim : task_tower.input_dim(); }
  std::size_t embedding_dim() const { return identity ? identity_dim : task_tower.output_dim(); }

  Normalized<Eigen::VectorXd> encode_task(const SparseVector& normalized_input) const;
  Normalized<Eigen::VectorXd> encode_server(const SparseVector& normalized_input) const;
};

DualEncoder make_dual_encoder(const TowerConfig& config, const Vocabulary& vocabulary, Rng& rng);
DualEncoder make_identity_encoder(const Vocabulary& vocabulary);

// Versioned little-endian binary checkpoint.
void save_checkpoint(const DualEncoder& encoder, const std::filesystem::path& path);
// Throws DataError when the file is malformed or was trained against a
// different vocabulary.
DualEncoder load_checkpoint(const std::filesystem::path& path, const Vocabulary& vocabulary);

}  // namespace mcprec
