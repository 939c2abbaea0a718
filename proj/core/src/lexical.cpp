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

#include "mcprec/lexical.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "mcprec/error.hpp"
#include "mcprec/text.hpp"

namespace mcprec {
namespace {

constexpr std::string_view kVocabMagic = "#mcprec-vocabulary v1";

bool is_token_char(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

std::string format_double(double value) { return fmt::format("{:.17g}", value); }

}  // namespace

std::vector<std::string> tokenize(std::string_view text, const TokenizerConfig& config) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty() && current.size() >= config.min_token_length) tokens.push_back(current);
    current.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_token_char(c)) {
      current.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

bool SparseVector::is_zero() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; });
}

double SparseVector::norm() const {
  double sum = 0.0;
  for (double v : values) sum += v * v;
  return std::sqrt(sum);
}

double SparseVector::dot(const SparseVector& other) const {
  double sum = 0.0;
  std::size_t i = 0, j = 0;
  while (i < indices.size() && j < other.indices.size()) {
    if (indices[i] == other.indices[j]) {
      sum += values[i++] * other.values[j++];
    } else if (indices[i] < other.indices[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  return sum;
}

Normalized<SparseVector> l2_normalize(SparseVector v) {
  const double norm = v.norm();
  if (norm == 0.0 || !std::isfinite(norm)) return {std::move(v), true};
  for (double& value : v.values) value /= norm;
  return {std::move(v), false};
}

Vocabulary Vocabulary::build(std::span<const std::string> texts, const VocabularyConfig& config) {
  if (config.max_doc_freq_ratio <= 0.0 || config.max_doc_freq_ratio > 1.0) {
    throw ConfigError("max_doc_freq_ratio must be in (0, 1]");
  }
  if (config.tokenizer.min_token_length == 0) throw ConfigError("min_token_length must be >= 1");

  std::map<std::string, std::size_t> doc_freq;
  bool any_token = false;
  for (const auto& text : texts) {
    const auto tokens = tokenize(text, config.tokenizer);
    const std::set<std::string> unique(tokens.begin(), tokens.end());
    any_token = any_token || !unique.empty();
    for (const auto& token : unique) ++doc_freq[token];
  }
  if (!any_token) throw DataError("cannot build a vocabulary from an empty corpus");

  Vocabulary vocab;
  vocab.config_ = config;
  vocab.documents_ = texts.size();
  const auto n = static_cast<double>(texts.size());
  for (const auto& [token, df] : doc_freq) {
    if (df < config.min_doc_freq) continue;
    if (static_cast<double>(df) / n > config.max_doc_freq_ratio) continue;
    vocab.tokens_.push_back(token);
    vocab.idf_.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(df))) + 1.0);
  }
  if (vocab.tokens_.empty()) throw DataError("document-frequency bounds removed every token");
  return vocab;
}

Vocabulary build_vocabulary(std::span<const std::string> texts, const VocabularyConfig& config) {
  return Vocabulary::build(texts, config);
}

std::optional<std::uint32_t> Vocabulary::index_of(std::string_view token) const {
  auto it = std::lower_bound(tokens_.begin(), tokens_.end(), token);
  if (it == tokens_.end() || *it != token) return std::nullopt;
  return static_cast<std::uint32_t>(it - tokens_.begin());
}

std::string Vocabulary::serialize() const {
  std::string out;
  out += kVocabMagic;
  out += '\n';
  out += fmt::format("#documents {}\n", documents_);
  out += fmt::format("#min_doc_freq {}\n", config_.min_doc_freq);
  out += fmt::format("#max_doc_freq_ratio {}\n", format_double(config_.max_doc_freq_ratio));
  out += fmt::format("#use_idf {}\n", config_.use_idf ? 1 : 0);
  out += fmt::format("#min_token_length {}\n", config_.tokenizer.min_token_length);
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    out += fmt::format("{}\t{}\t{}\n", tokens_[i], i, format_double(idf_[i]));
  }
  return out;
}

Vocabulary Vocabulary::parse(std::string_view serialized) {
  std::istringstream in{std::string(serialized)};
  std::string line;
  if (!std::getline(in, line) || line != kVocabMagic) throw DataError("vocabulary: bad header");
  Vocabulary vocab;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    if (line[0] == '#') {
      std::string key;
      fields >> key;
      if (key == "#documents") fields >> vocab.documents_;
      else if (key == "#min_doc_freq") fields >> vocab.config_.min_doc_freq;
      else if (key == "#max_doc_freq_ratio") fields >> vocab.config_.max_doc_freq_ratio;
      else if (key == "#use_idf") { int flag = 1; fields >> flag; vocab.config_.use_idf = flag != 0; }
      else if (key == "#min_token_length") fields >> vocab.config_.tokenizer.min_token_length;
      if (fields.fail()) throw DataError(fmt::format("vocabulary:{}: bad header field", line_no));
      continue;
    }
    const auto tab1 = line.find('\t');
    const auto tab2 = tab1 == std::string::npos ? std::string::npos : line.find('\t', tab1 + 1);
    if (tab2 == std::string::npos) throw DataError(fmt::format("vocabulary:{}: expected 3 fields", line_no));
    std::string token = line.substr(0, tab1);
    std::size_t index = 0;
    double idf = 0.0;
    try {
      index = std::stoull(line.substr(tab1 + 1, tab2 - tab1 - 1));
      idf = std::stod(line.substr(tab2 + 1));
    } catch (const std::exception&) {
      throw DataError(fmt::format("vocabulary:{}: bad number", line_no));
    }
    if (index != vocab.tokens_.size()) {
      throw DataError(fmt::format("vocabulary:{}: indices must be dense and ordered", line_no));
    }
    if (!vocab.tokens_.empty() && !(vocab.tokens_.back() < token)) {
      throw DataError(fmt::format("vocabulary:{}: tokens must be strictly sorted", line_no));
    }
    vocab.tokens_.push_back(std::move(token));
    vocab.idf_.push_back(idf);
  }
  if (vocab.tokens_.empty()) throw DataError("vocabulary: no tokens");
  return vocab;
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open vocabulary file: " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write vocabulary file: " + path.string());
  out << serialize();
}

std::uint64_t Vocabulary::fingerprint() const { return fnv1a(serialize()); }

SparseVector vectorize(std::string_view text, const Vocabulary& vocabulary) {
  std::map<std::uint32_t, double> counts;
  for (const auto& token : tokenize(text, vocabulary.config().tokenizer)) {
    if (auto index = vocabulary.index_of(token)) counts[*index] += 1.0;
  }
  SparseVector v;
  v.dim = vocabulary.size();
  v.indices.reserve(counts.size());
  v.values.reserve(counts.size());
  for (const auto& [index, count] : counts) {
    v.indices.push_back(index);
    v.values.push_back(vocabulary.config().use_idf ? count * vocabulary.idf(index) : count);
  }
  return v;
}

}  // namespace mcprec
