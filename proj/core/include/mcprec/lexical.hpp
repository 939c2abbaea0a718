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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mcprec {

struct TokenizerConfig {
  std::size_t min_token_length = 2;
};

// Lower-cases ASCII letters and splits on non-alphanumeric ASCII; bytes of
// multi-byte UTF-8 sequences count as token characters.
std::vector<std::string> tokenize(std::string_view text, const TokenizerConfig& config = {});

struct VocabularyConfig {
  std::size_t min_doc_freq = 1;
  double max_doc_freq_ratio = 1.0;
  bool use_idf = true;
  TokenizerConfig tokenizer;
};

// Sorted (index, weight) pairs over a vocabulary of `dim` tokens.
struct SparseVector {
  std::vector<std::uint32_t> indices;
  std::vector<double> values;
  std::size_t dim = 0;

  std::size_t nnz() const { return indices.size(); }
  bool is_zero() const;
  double norm() const;
  double dot(const SparseVector& other) const;
};

template <class Vector>
struct Normalized {
  Vector vector;
  bool degenerate = false;  // input had zero norm; returned unchanged
};

Normalized<SparseVector> l2_normalize(SparseVector v);

// Token -> dense index in [0, size()), tokens in lexicographic order, with a
// smoothed idf weight ln((1 + N) / (1 + df)) + 1 per token.
class Vocabulary {
 public:
  Vocabulary() = default;

  static Vocabulary build(std::span<const std::string> texts, const VocabularyConfig& config = {});

  static Vocabulary parse(std::string_view serialized);
  static Vocabulary load(const std::filesystem::path& path);
  std::string serialize() const;
  void save(const std::filesystem::path& path) const;

  std::size_t size() const { return tokens_.size(); }
  std::optional<std::uint32_t> index_of(std::string_view token) const;
  const std::string& token(std::uint32_t index) const { return tokens_.at(index); }
  double idf(std::uint32_t index) const { return idf_.at(index); }
  std::size_t document_count() const { return documents_; }
  const VocabularyConfig& config() const { return config_; }

  // Hash of the serialized form; checkpoints record it.
  std::uint64_t fingerprint() const;

 private:
  std::vector<std::string> tokens_;
  std::vector<double> idf_;
  std::size_t documents_ = 0;
  VocabularyConfig config_;
};

Vocabulary build_vocabulary(std::span<const std::string> texts, const VocabularyConfig& config = {});

// Term counts (times idf when the vocabulary uses idf); out-of-vocabulary
// tokens are dropped.
SparseVector vectorize(std::string_view text, const Vocabulary& vocabulary);

}  // namespace mcprec
