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
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "mcprec/corpus.hpp"
#include "mcprec/embedding_index.hpp"
#include "mcprec/encoder.hpp"
#include "mcprec/lexical.hpp"
#include "mcprec/rerank.hpp"
#include "mcprec/structural.hpp"
#include "mcprec/taxonomy.hpp"

namespace mcprec {

struct RecommendConfig {
  std::size_t k1 = 20;  // anchors
  std::size_t k2 = 50;  // pool size
  std::size_t k = 10;   // returned
  FusionWeights fusion;

  // Throws ConfigError unless 1 <= k1 <= k2 and 1 <= k <= k2.
  void validate() const;
};

// Read-only inference state: the server corpus, aligned row by row with the
// embedding index, plus the vocabulary, encoder and structural scorer.
class Engine {
 public:
  // Throws DataError when the pieces disagree: index rows not in corpus
  // order, encoder trained on another vocabulary, or embedding sizes that do
  // not match.
  Engine(ServerCorpus servers, Vocabulary vocabulary, DualEncoder encoder,
         std::shared_ptr<const EmbeddingIndex> index, StructuralScorer scorer);

  const ServerCorpus& servers() const { return servers_; }
  const Vocabulary& vocabulary() const { return vocabulary_; }
  const DualEncoder& encoder() const { return encoder_; }
  const EmbeddingIndex& index() const { return *index_; }
  const StructuralScorer& scorer() const { return scorer_; }
  std::uint64_t snapshot_id() const { return index_->snapshot_id(); }

  Normalized<Eigen::VectorXd> encode_task(std::string_view text) const;

 private:
  ServerCorpus servers_;
  Vocabulary vocabulary_;
  DualEncoder encoder_;
  std::shared_ptr<const EmbeddingIndex> index_;
  StructuralScorer scorer_;
};

struct ArtifactPaths {
  std::filesystem::path servers;      // servers JSONL
  std::filesystem::path taxonomy;     // optional taxonomy JSON; empty scores every category as unknown
  std::filesystem::path theme_rules;  // optional theme -> systems JSON
  std::filesystem::path vocabulary;
  std::filesystem::path checkpoint;
  std::filesystem::path index;  // optional; re-encoded from the checkpoint when empty
};

// Loads and cross-checks all artifacts. Throws DataError.
std::shared_ptr<const Engine> load_engine(const ArtifactPaths& paths,
                                          StructuralWeights structural_weights = {});

struct TaskQuery {
  std::string id;    // optional; used only in prompts and logs
  std::string name;  // optional
  std::string text;  // unified task text fed to the lexical channel
  TaskAttributes attributes;
};

TaskQuery query_from_task(const TaskRecord& task);

enum class Provenance { kAnchor, kExpansion };
std::string_view to_string(Provenance provenance);

struct CandidateScores {
  double semantic = 0.0;
  double structural = 0.0;
  double fused = 0.0;
  double centroid = 0.0;  // similarity to the anchor centroid
};

struct Candidate {
  std::string id;
  std::size_t row = 0;  // corpus / index row
  Provenance provenance = Provenance::kAnchor;
  CandidateScores scores;
};

struct CandidatePool {
  std::vector<Candidate> anchors;    // fused score descending
  std::vector<Candidate> expansion;  // centroid similarity descending

  std::size_t size() const { return anchors.size() + expansion.size(); }
  // anchors followed by expansion
  std::vector<Candidate> members() const;
  std::vector<std::string> ids() const;
  // Pool ids by fused score descending, ties by ascending id.
  std::vector<std::string> fused_order() const;
  const Candidate* find(std::string_view id) const;
};

struct RankedEntry {
  std::string id;
  std::size_t rank = 0;  // 1-based
  Provenance provenance = Provenance::kAnchor;
  CandidateScores scores;
};

struct RankedList {
  std::vector<RankedEntry> entries;
  RerankStatus status = RerankStatus::kAccepted;
  std::string reason;       // set on fallback
  std::string explanation;  // re-ranker text, verbatim

  std::vector<std::string> ids() const;
};

// Work counters for one recommend call.
struct PipelineTrace {
  std::size_t task_encodings = 0;
  std::size_t semantic_passes = 0;
  std::size_t structural_passes = 0;
  std::size_t centroid_passes = 0;
  std::size_t backend_calls = 0;
};

struct Recommendation {
  CandidatePool pool;
  RankedList list;
  PipelineTrace trace;
};

// Row positions sorted by score descending, ties by ascending id.
std::vector<std::size_t> rank_fused(const Eigen::VectorXd& fused, const std::vector<std::string>& ids);
// First min(k1, |ranked|) entries.
std::vector<std::size_t> anchor(std::span<const std::size_t> ranked, std::size_t k1);
// (task + sum(anchors)) / (|anchors| + 1), not re-normalized. With no
// anchors the task embedding is returned and a warning logged.
Eigen::VectorXd centroid(const Eigen::VectorXd& task_embedding, std::span<const Eigen::VectorXd> anchors);
// Top `count` rows by centroid similarity, skipping `excluded` rows.
std::vector<std::size_t> expand(const Eigen::VectorXd& centroid_similarity, const std::vector<std::string>& ids,
                                std::span<const std::size_t> excluded, std::size_t count);

// Constraint summary handed to the re-ranker.
std::string constraint_summary(const TaskAttributes& attributes);

// Fused ranking -> anchors -> centroid expansion -> re-rank of the pool.
// `backend` null means no re-ranking (fused-order prefix).
Recommendation recommend(const Engine& engine, const TaskQuery& task, const RecommendConfig& config,
                         const RerankBackend* backend = nullptr, const CallOptions& options = {});

// Same, with the task embedding supplied by the caller.
Recommendation recommend(const Engine& engine, const TaskQuery& task, const Eigen::VectorXd& task_embedding,
                         const RecommendConfig& config, const RerankBackend* backend = nullptr,
                         const CallOptions& options = {});

nlohmann::ordered_json to_json(const RankedList& list);

}  // namespace mcprec
