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

#include "mcprec/embedding_index.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <fmt/format.h>

#include "binary_io.hpp"
#include "mcprec/error.hpp"
#include "mcprec/text.hpp"

namespace mcprec {
namespace {

constexpr char kIndexMagic[9] = "MCPRECIX";
constexpr std::uint32_t kIndexVersion = 1;

std::uint64_t hash_bytes(const void* data, std::size_t bytes, std::uint64_t h) {
  return fnv1a(std::string_view(static_cast<const char*>(data), bytes), h);
}

template <class T>
void write_array(std::ostream& out, const T* data, std::size_t count) {
  io::write_pod<std::uint64_t>(out, count);
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(sizeof(T) * count));
}

template <class T>
std::vector<T> read_array(std::istream& in, std::uint64_t max_count) {
  const auto count = io::read_pod<std::uint64_t>(in);
  if (count > max_count) throw DataError("binary artifact: array too large");
  std::vector<T> values(count);
  in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(sizeof(T) * count));
  if (!in) throw DataError("unexpected end of binary artifact");
  return values;
}

}  // namespace

EmbeddingIndex::EmbeddingIndex(std::vector<std::string> ids, RowMatrix embeddings)
    : ids_(std::move(ids)), sparse_(false), dim_(static_cast<std::size_t>(embeddings.cols())),
      dense_(std::move(embeddings)) {
  if (static_cast<std::size_t>(dense_.rows()) != ids_.size()) {
    throw DataError(fmt::format("embedding index: {} ids for {} rows", ids_.size(), dense_.rows()));
  }
  finish();
}

EmbeddingIndex::EmbeddingIndex(std::vector<std::string> ids, SparseRowMatrix embeddings)
    : ids_(std::move(ids)), sparse_(true), dim_(static_cast<std::size_t>(embeddings.cols())),
      sparse_rows_(std::move(embeddings)) {
  if (static_cast<std::size_t>(sparse_rows_.rows()) != ids_.size()) {
    throw DataError(fmt::format("embedding index: {} ids for {} rows", ids_.size(), sparse_rows_.rows()));
  }
  sparse_rows_.makeCompressed();
  finish();
}

void EmbeddingIndex::finish() {
  degenerate_.assign(ids_.size(), false);
  std::uint64_t h = fnv1a(fmt::format("{}:{}x{}", sparse_ ? "sparse" : "dense", ids_.size(), dim_));
  for (std::size_t row = 0; row < ids_.size(); ++row) {
    if (!rows_.emplace(ids_[row], row).second) throw DataError("embedding index: duplicate id " + ids_[row]);
    const auto r = static_cast<Eigen::Index>(row);
    const double norm = sparse_ ? sparse_rows_.row(r).norm() : dense_.row(r).norm();
    if (norm == 0.0) {
      degenerate_[row] = true;
    } else if (!(std::abs(norm - 1.0) <= kUnitNormTolerance)) {
      throw DataError(fmt::format("embedding index: row for {} has norm {}", ids_[row], norm));
    }
    h = fnv1a(ids_[row], fnv1a(std::string_view("\0", 1), h));
  }
  if (sparse_) {
    h = hash_bytes(sparse_rows_.outerIndexPtr(), sizeof(int) * (sparse_rows_.outerSize() + 1), h);
    h = hash_bytes(sparse_rows_.innerIndexPtr(), sizeof(int) * sparse_rows_.nonZeros(), h);
    h = hash_bytes(sparse_rows_.valuePtr(), sizeof(double) * sparse_rows_.nonZeros(), h);
  } else {
    h = hash_bytes(dense_.data(), sizeof(double) * dense_.size(), h);
  }
  snapshot_id_ = h;
}

std::optional<std::size_t> EmbeddingIndex::row_of(std::string_view id) const {
  auto it = rows_.find(std::string(id));
  if (it == rows_.end()) return std::nullopt;
  return it->second;
}

Eigen::VectorXd EmbeddingIndex::embedding(std::size_t row) const {
  if (row >= size()) throw std::out_of_range("embedding index row out of range");
  const auto r = static_cast<Eigen::Index>(row);
  if (sparse_) return Eigen::VectorXd(sparse_rows_.row(r).transpose());
  return dense_.row(r).transpose();
}

std::size_t EmbeddingIndex::degenerate_count() const {
  return static_cast<std::size_t>(std::count(degenerate_.begin(), degenerate_.end(), true));
}

Eigen::VectorXd EmbeddingIndex::similarity_pass(const Eigen::VectorXd& query) const {
  if (empty()) return Eigen::VectorXd();
  if (static_cast<std::size_t>(query.size()) != dim()) {
    throw std::invalid_argument(fmt::format("query has dimension {}, index {}", query.size(), dim()));
  }
  if (sparse_) return sparse_rows_ * query;
  return dense_ * query;
}

void EmbeddingIndex::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write index: " + path.string());
  out.write(kIndexMagic, 8);
  io::write_pod<std::uint32_t>(out, kIndexVersion);
  io::write_pod<std::uint64_t>(out, ids_.size());
  for (const auto& id : ids_) io::write_string(out, id);
  io::write_pod<std::uint8_t>(out, sparse_ ? 1 : 0);
  io::write_pod<std::uint64_t>(out, dim_);
  if (sparse_) {
    write_array(out, sparse_rows_.outerIndexPtr(), static_cast<std::size_t>(sparse_rows_.outerSize() + 1));
    write_array(out, sparse_rows_.innerIndexPtr(), static_cast<std::size_t>(sparse_rows_.nonZeros()));
    write_array(out, sparse_rows_.valuePtr(), static_cast<std::size_t>(sparse_rows_.nonZeros()));
  } else {
    write_array(out, dense_.data(), static_cast<std::size_t>(dense_.size()));
  }
  io::write_pod<std::uint64_t>(out, snapshot_id_);
  if (!out) throw DataError("failed writing index: " + path.string());
}

EmbeddingIndex EmbeddingIndex::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open index: " + path.string());
  io::expect_magic(in, kIndexMagic, path.string());
  const auto version = io::read_pod<std::uint32_t>(in);
  if (version != kIndexVersion) throw DataError(fmt::format("{}: unsupported index version {}", path.string(), version));
  const auto count = io::read_pod<std::uint64_t>(in);
  if (count > (1u << 28)) throw DataError(path.string() + ": implausible index size");
  std::vector<std::string> ids;
  ids.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) ids.push_back(io::read_string(in));
  const bool sparse = io::read_pod<std::uint8_t>(in) != 0;
  const auto dim = io::read_pod<std::uint64_t>(in);
  if (dim > (1u << 26)) throw DataError(path.string() + ": implausible embedding dimension");
  constexpr std::uint64_t kMaxValues = 1ull << 32;
  const auto rows = static_cast<Eigen::Index>(count);
  const auto cols = static_cast<Eigen::Index>(dim);
  std::optional<EmbeddingIndex> index;
  if (sparse) {
    const auto outer = read_array<int>(in, count + 1);
    const auto inner = read_array<int>(in, kMaxValues);
    const auto values = read_array<double>(in, kMaxValues);
    if (outer.size() != count + 1 || inner.size() != values.size() || outer.front() != 0 ||
        static_cast<std::size_t>(outer.back()) != inner.size()) {
      throw DataError(path.string() + ": corrupt sparse index");
    }
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(values.size());
    for (Eigen::Index r = 0; r < rows; ++r) {
      if (outer[r] > outer[r + 1]) throw DataError(path.string() + ": corrupt sparse index");
      for (int k = outer[r]; k < outer[r + 1]; ++k) {
        if (inner[k] < 0 || inner[k] >= cols) throw DataError(path.string() + ": corrupt sparse index");
        triplets.emplace_back(static_cast<int>(r), inner[k], values[k]);
      }
    }
    SparseRowMatrix m(rows, cols);
    m.setFromTriplets(triplets.begin(), triplets.end());
    index.emplace(std::move(ids), std::move(m));
  } else {
    const auto values = read_array<double>(in, kMaxValues);
    if (values.size() != count * dim) throw DataError(path.string() + ": corrupt dense index");
    RowMatrix m = Eigen::Map<const RowMatrix>(values.data(), rows, cols);
    index.emplace(std::move(ids), std::move(m));
  }
  const auto stored = io::read_pod<std::uint64_t>(in);
  if (index->snapshot_id() != stored) throw DataError(path.string() + ": index checksum mismatch");
  return std::move(*index);
}

EmbeddingIndex encode_corpus(const DualEncoder& encoder, std::vector<std::string> ids,
                             std::span<const SparseVector> inputs) {
  if (ids.size() != inputs.size()) throw std::invalid_argument("encode_corpus: ids and inputs differ in length");
  if (encoder.identity) {
    std::vector<Eigen::Triplet<double>> triplets;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      if (inputs[i].dim != encoder.identity_dim) throw std::invalid_argument("encode_corpus: dimension mismatch");
      const auto unit = l2_normalize(inputs[i]).vector;
      for (std::size_t k = 0; k < unit.nnz(); ++k) {
        triplets.emplace_back(static_cast<int>(i), static_cast<int>(unit.indices[k]), unit.values[k]);
      }
    }
    SparseRowMatrix m(static_cast<Eigen::Index>(ids.size()), static_cast<Eigen::Index>(encoder.identity_dim));
    m.setFromTriplets(triplets.begin(), triplets.end());
    return EmbeddingIndex(std::move(ids), std::move(m));
  }
  RowMatrix m(static_cast<Eigen::Index>(ids.size()), static_cast<Eigen::Index>(encoder.embedding_dim()));
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    m.row(static_cast<Eigen::Index>(i)) = encoder.encode_server(inputs[i]).vector.transpose();
  }
  return EmbeddingIndex(std::move(ids), std::move(m));
}

EmbeddingIndex encode_corpus(const DualEncoder& encoder, const ServerCorpus& servers,
                             const Vocabulary& vocabulary) {
  std::vector<std::string> ids;
  std::vector<SparseVector> inputs;
  ids.reserve(servers.size());
  inputs.reserve(servers.size());
  for (const auto& server : servers) {
    ids.push_back(server.id);
    inputs.push_back(lexical_input(server, vocabulary));
  }
  return encode_corpus(encoder, std::move(ids), inputs);
}

SparseVector lexical_input(std::string_view text, const Vocabulary& vocabulary) {
  return l2_normalize(vectorize(text, vocabulary)).vector;
}

SparseVector lexical_input(const McpRecord& server, const Vocabulary& vocabulary) {
  return lexical_input(concat_text(server), vocabulary);
}

SparseVector lexical_input(const TaskRecord& task, const Vocabulary& vocabulary) {
  return lexical_input(concat_text(task), vocabulary);
}

std::vector<std::size_t> top_k_rows(const Eigen::VectorXd& scores, const std::vector<std::string>& ids,
                                    std::size_t k, const std::vector<bool>* excluded) {
  std::vector<std::size_t> rows;
  rows.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (excluded == nullptr || !(*excluded)[i]) rows.push_back(i);
  }
  const auto better = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return ids[a] < ids[b];
  };
  k = std::min(k, rows.size());
  std::partial_sort(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(k), rows.end(), better);
  rows.resize(k);
  return rows;
}

}  // namespace mcprec
