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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "mcprec/corpus.hpp"
#include "mcprec/encoder.hpp"
#include "mcprec/lexical.hpp"

namespace mcprec {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// Immutable exact-search index: one unit-norm (or flagged zero) embedding per
// server, stored row-wise in corpus order. Sparse storage serves the
// projection-free variant, whose embeddings live in vocabulary space.
class EmbeddingIndex {
 public:
  EmbeddingIndex() = default;
  // Throws DataError for duplicate ids, a row/id count mismatch, or a row
  // that is neither unit-norm nor zero.
  EmbeddingIndex(std::vector<std::string> ids, RowMatrix embeddings);
  EmbeddingIndex(std::vector<std::string> ids, SparseRowMatrix embeddings);
  virtual ~EmbeddingIndex() = default;

  EmbeddingIndex(const EmbeddingIndex&) = default;
  EmbeddingIndex& operator=(const EmbeddingIndex&) = default;
  EmbeddingIndex(EmbeddingIndex&&) = default;
  EmbeddingIndex& operator=(EmbeddingIndex&&) = default;

  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  std::size_t dim() const { return dim_; }
  bool is_sparse() const { return sparse_; }
  const std::vector<std::string>& ids() const { return ids_; }
  const std::string& id(std::size_t row) const { return ids_.at(row); }
  std::optional<std::size_t> row_of(std::string_view id) const;
  Eigen::VectorXd embedding(std::size_t row) const;
  bool degenerate(std::size_t row) const { return degenerate_.at(row); }
  std::size_t degenerate_count() const;

  // Dot product of every row with `query`: one O(M d') pass.
  virtual Eigen::VectorXd similarity_pass(const Eigen::VectorXd& query) const;

  // Hash of ids and embedding bytes.
  std::uint64_t snapshot_id() const { return snapshot_id_; }

  void save(const std::filesystem::path& path) const;
  static EmbeddingIndex load(const std::filesystem::path& path);

 private:
  void finish();

  std::vector<std::string> ids_;
  bool sparse_ = false;
  std::size_t dim_ = 0;
  RowMatrix dense_;
  SparseRowMatrix sparse_rows_;
  std::vector<bool> degenerate_;
  std::unordered_map<std::string, std::size_t> rows_;
  std::uint64_t snapshot_id_ = 0;
};

// Encodes pre-normalized sparse server inputs with the server tower.
EmbeddingIndex encode_corpus(const DualEncoder& encoder, std::vector<std::string> ids,
                             std::span<const SparseVector> inputs);
EmbeddingIndex encode_corpus(const DualEncoder& encoder, const ServerCorpus& servers,
                             const Vocabulary& vocabulary);

// Normalized lexical input for a record's unified text.
SparseVector lexical_input(const McpRecord& server, const Vocabulary& vocabulary);
SparseVector lexical_input(const TaskRecord& task, const Vocabulary& vocabulary);
SparseVector lexical_input(std::string_view text, const Vocabulary& vocabulary);

// Positions of the `k` highest scores, descending, ties broken by ascending
// id. Rows whose `excluded` flag is set are skipped.
std::vector<std::size_t> top_k_rows(const Eigen::VectorXd& scores, const std::vector<std::string>& ids,
                                    std::size_t k, const std::vector<bool>* excluded = nullptr);

}  // namespace mcprec
