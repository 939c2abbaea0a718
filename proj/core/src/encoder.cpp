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

#include "mcprec/encoder.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <fmt/format.h>

#include "binary_io.hpp"
#include "mcprec/error.hpp"

namespace mcprec {
namespace {

constexpr char kCheckpointMagic[9] = "MCPRECCK";
constexpr std::uint32_t kCheckpointVersion = 1;

void relu_inplace(Eigen::MatrixXd& m) { m = m.cwiseMax(0.0); }

Eigen::MatrixXd dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, Rng& rng) {
  Eigen::MatrixXd mask(rows, cols);
  const double keep_scale = 1.0 / (1.0 - rate);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) {
      mask(r, c) = rng.bernoulli(rate) ? 0.0 : keep_scale;
    }
  }
  return mask;
}

void write_tower(std::ostream& out, const Tower& tower) {
  io::write_pod<std::uint64_t>(out, tower.config.input_dim);
  io::write_pod<std::uint64_t>(out, tower.config.hidden_dim);
  io::write_pod<std::uint64_t>(out, tower.config.output_dim);
  io::write_pod<std::uint64_t>(out, tower.config.layers);
  io::write_pod<double>(out, tower.config.dropout);
  for (const auto& layer : tower.layers) {
    io::write_matrix(out, layer.weight);
    io::write_matrix(out, layer.bias);
  }
}

Tower read_tower(std::istream& in) {
  Tower tower;
  tower.config.input_dim = io::read_pod<std::uint64_t>(in);
  tower.config.hidden_dim = io::read_pod<std::uint64_t>(in);
  tower.config.output_dim = io::read_pod<std::uint64_t>(in);
  tower.config.layers = io::read_pod<std::uint64_t>(in);
  tower.config.dropout = io::read_pod<double>(in);
  try {
    tower.config.validate();
  } catch (const ConfigError& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  }
  Eigen::Index in_dim = static_cast<Eigen::Index>(tower.config.input_dim);
  for (std::size_t l = 0; l < tower.config.layers; ++l) {
    DenseLayer layer;
    layer.weight = io::read_matrix<Eigen::MatrixXd>(in);
    layer.bias = io::read_matrix<Eigen::VectorXd>(in);
    const auto out_dim = static_cast<Eigen::Index>(l + 1 == tower.config.layers ? tower.config.output_dim
                                                                                 : tower.config.hidden_dim);
    if (layer.weight.rows() != out_dim || layer.weight.cols() != in_dim || layer.bias.size() != out_dim) {
      throw DataError(fmt::format("checkpoint: layer {} has inconsistent shape", l));
    }
    in_dim = out_dim;
    tower.layers.push_back(std::move(layer));
  }
  if (!tower.all_finite()) throw DataError("checkpoint: non-finite parameters");
  return tower;
}

}  // namespace

void TowerConfig::validate() const {
  if (input_dim == 0) throw ConfigError("tower input dimension must be positive");
  if (output_dim == 0) throw ConfigError("tower output dimension must be positive");
  if (layers == 0) throw ConfigError("tower needs at least one layer");
  if (layers > 1 && hidden_dim == 0) throw ConfigError("tower hidden dimension must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must be in [0, 1)");
}

std::size_t Tower::parameter_count() const {
  std::size_t count = 0;
  for (const auto& layer : layers) count += layer.weight.size() + layer.bias.size();
  return count;
}

bool Tower::all_finite() const {
  for (const auto& layer : layers) {
    if (!layer.weight.allFinite() || !layer.bias.allFinite()) return false;
  }
  return true;
}

Tower init_tower(const TowerConfig& config, Rng& rng) {
  config.validate();
  Tower tower;
  tower.config = config;
  std::size_t in_dim = config.input_dim;
  for (std::size_t l = 0; l < config.layers; ++l) {
    const std::size_t out_dim = l + 1 == config.layers ? config.output_dim : config.hidden_dim;
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_dim));
    DenseLayer layer;
    layer.weight.resize(static_cast<Eigen::Index>(out_dim), static_cast<Eigen::Index>(in_dim));
    for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
      for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) layer.weight(r, c) = rng.uniform(-bound, bound);
    }
    layer.bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(out_dim));
    tower.layers.push_back(std::move(layer));
    in_dim = out_dim;
  }
  return tower;
}

Eigen::VectorXd forward(const Tower& tower, const SparseVector& input, Mode mode, Rng* rng) {
  if (input.dim != tower.input_dim()) {
    throw std::invalid_argument(fmt::format("tower expects input dimension {}, got {}",
                                            tower.input_dim(), input.dim));
  }
  if (mode == Mode::kTrain && tower.config.dropout > 0.0 && rng == nullptr) {
    throw std::invalid_argument("train-mode forward needs a random generator for dropout");
  }
  const auto& first = tower.layers.front();
  Eigen::VectorXd h = first.bias;
  for (std::size_t k = 0; k < input.nnz(); ++k) {
    if (input.indices[k] >= input.dim) throw std::invalid_argument("sparse index out of range");
    h.noalias() += first.weight.col(input.indices[k]) * input.values[k];
  }
  for (std::size_t l = 1; l < tower.layers.size(); ++l) {
    h = h.cwiseMax(0.0);
    if (mode == Mode::kTrain && tower.config.dropout > 0.0) {
      h = h.cwiseProduct(dropout_mask(h.size(), 1, tower.config.dropout, *rng).col(0));
    }
    const auto& layer = tower.layers[l];
    h = layer.weight * h + layer.bias;
  }
  return h;
}

SparseBatch to_batch(std::span<const SparseVector> inputs, std::size_t dim) {
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t c = 0; c < inputs.size(); ++c) {
    if (inputs[c].dim != dim) {
      throw std::invalid_argument(fmt::format("batch expects input dimension {}, got {}", dim, inputs[c].dim));
    }
    for (std::size_t k = 0; k < inputs[c].nnz(); ++k) {
      triplets.emplace_back(static_cast<int>(inputs[c].indices[k]), static_cast<int>(c), inputs[c].values[k]);
    }
  }
  SparseBatch batch(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(inputs.size()));
  batch.setFromTriplets(triplets.begin(), triplets.end());
  return batch;
}

Eigen::MatrixXd forward_batch(const Tower& tower, const SparseBatch& inputs, Mode mode, Rng* rng,
                              TowerTrace* trace) {
  if (static_cast<std::size_t>(inputs.rows()) != tower.input_dim()) {
    throw std::invalid_argument(fmt::format("tower expects input dimension {}, got {}",
                                            tower.input_dim(), inputs.rows()));
  }
  const bool use_dropout = mode == Mode::kTrain && tower.config.dropout > 0.0;
  if (use_dropout && rng == nullptr) {
    throw std::invalid_argument("train-mode forward needs a random generator for dropout");
  }
  if (trace) *trace = TowerTrace{};

  Eigen::MatrixXd h = tower.layers.front().weight * inputs;
  h.colwise() += tower.layers.front().bias;
  for (std::size_t l = 0; l < tower.layers.size(); ++l) {
    const bool last = l + 1 == tower.layers.size();
    if (trace) trace->pre.push_back(h);
    if (last) {
      if (trace) {
        trace->post.push_back(h);
        trace->mask.emplace_back();
      }
      break;
    }
    relu_inplace(h);
    if (use_dropout) {
      Eigen::MatrixXd mask = dropout_mask(h.rows(), h.cols(), tower.config.dropout, *rng);
      h = h.cwiseProduct(mask);
      if (trace) trace->mask.push_back(std::move(mask));
    } else if (trace) {
      trace->mask.emplace_back();
    }
    if (trace) trace->post.push_back(h);
    const auto& next = tower.layers[l + 1];
    Eigen::MatrixXd z = next.weight * h;
    z.colwise() += next.bias;
    h = std::move(z);
  }
  return h;
}

Normalized<Eigen::VectorXd> normalize(Eigen::VectorXd z) {
  const double norm = z.norm();
  if (norm == 0.0 || !std::isfinite(norm)) {
    if (!std::isfinite(norm)) z.setZero();
    return {std::move(z), true};
  }
  z /= norm;
  return {std::move(z), false};
}

Eigen::MatrixXd normalize_columns(const Eigen::MatrixXd& z) {
  Eigen::MatrixXd out = z;
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    const double norm = out.col(c).norm();
    if (norm > 0.0) out.col(c) /= norm;
  }
  return out;
}

bool is_unit_or_zero(const Eigen::VectorXd& v) {
  const double norm = v.norm();
  return norm == 0.0 || std::abs(norm - 1.0) <= kUnitNormTolerance;
}

double semantic_score(const Eigen::VectorXd& server_embedding, const Eigen::VectorXd& task_embedding) {
  if (server_embedding.size() != task_embedding.size()) {
    throw std::invalid_argument("semantic_score: embedding sizes differ");
  }
  if (!is_unit_or_zero(server_embedding) || !is_unit_or_zero(task_embedding)) {
    throw std::invalid_argument("semantic_score: embeddings must be L2-normalized");
  }
  return server_embedding.dot(task_embedding);
}

namespace {

Eigen::VectorXd densify(const SparseVector& v) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(v.dim));
  for (std::size_t k = 0; k < v.nnz(); ++k) out(v.indices[k]) = v.values[k];
  return out;
}

}  // namespace

Normalized<Eigen::VectorXd> DualEncoder::encode_task(const SparseVector& input) const {
  if (identity) {
    if (input.dim != identity_dim) throw std::invalid_argument("encode_task: dimension mismatch");
    return normalize(densify(input));
  }
  return normalize(forward(task_tower, input, Mode::kInfer));
}

Normalized<Eigen::VectorXd> DualEncoder::encode_server(const SparseVector& input) const {
  if (identity) {
    if (input.dim != identity_dim) throw std::invalid_argument("encode_server: dimension mismatch");
    return normalize(densify(input));
  }
  return normalize(forward(server_tower, input, Mode::kInfer));
}

DualEncoder make_dual_encoder(const TowerConfig& config, const Vocabulary& vocabulary, Rng& rng) {
  TowerConfig sized = config;
  sized.input_dim = vocabulary.size();
  DualEncoder encoder;
  encoder.task_tower = init_tower(sized, rng);
  encoder.server_tower = init_tower(sized, rng);
  encoder.vocabulary_fingerprint = vocabulary.fingerprint();
  return encoder;
}

DualEncoder make_identity_encoder(const Vocabulary& vocabulary) {
  DualEncoder encoder;
  encoder.identity = true;
  encoder.identity_dim = vocabulary.size();
  encoder.vocabulary_fingerprint = vocabulary.fingerprint();
  return encoder;
}

void save_checkpoint(const DualEncoder& encoder, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint: " + path.string());
  out.write(kCheckpointMagic, 8);
  io::write_pod<std::uint32_t>(out, kCheckpointVersion);
  io::write_pod<std::uint64_t>(out, encoder.vocabulary_fingerprint);
  io::write_pod<std::uint8_t>(out, encoder.identity ? 1 : 0);
  io::write_pod<std::uint64_t>(out, encoder.identity_dim);
  if (!encoder.identity) {
    write_tower(out, encoder.task_tower);
    write_tower(out, encoder.server_tower);
  }
  if (!out) throw DataError("failed writing checkpoint: " + path.string());
}

DualEncoder load_checkpoint(const std::filesystem::path& path, const Vocabulary& vocabulary) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path.string());
  io::expect_magic(in, kCheckpointMagic, path.string());
  const auto version = io::read_pod<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw DataError(fmt::format("{}: unsupported checkpoint version {}", path.string(), version));
  }
  DualEncoder encoder;
  encoder.vocabulary_fingerprint = io::read_pod<std::uint64_t>(in);
  if (encoder.vocabulary_fingerprint != vocabulary.fingerprint()) {
    throw DataError(path.string() + ": checkpoint was trained against a different vocabulary");
  }
  encoder.identity = io::read_pod<std::uint8_t>(in) != 0;
  encoder.identity_dim = io::read_pod<std::uint64_t>(in);
  if (encoder.identity) {
    if (encoder.identity_dim != vocabulary.size()) throw DataError(path.string() + ": identity dimension mismatch");
    return encoder;
  }
  encoder.task_tower = read_tower(in);
  encoder.server_tower = read_tower(in);
  if (encoder.task_tower.input_dim() != vocabulary.size() ||
      encoder.server_tower.input_dim() != vocabulary.size() ||
      encoder.task_tower.output_dim() != encoder.server_tower.output_dim()) {
    throw DataError(path.string() + ": tower shapes do not match the vocabulary");
  }
  return encoder;
}

}  // namespace mcprec
