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

#include "mcprec/recommender.hpp"

#include <algorithm>
#include <unordered_set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "mcprec/error.hpp"

namespace mcprec {

void RecommendConfig::validate() const {
  if (k1 == 0) throw ConfigError("k1 must be at least 1");
  if (k2 < k1) throw ConfigError(fmt::format("k2 ({}) must be at least k1 ({})", k2, k1));
  if (k == 0) throw ConfigError("k must be at least 1");
  if (k > k2) throw ConfigError(fmt::format("k ({}) cannot exceed the pool size k2 ({})", k, k2));
  fusion.validate();
}

Engine::Engine(ServerCorpus servers, Vocabulary vocabulary, DualEncoder encoder,
               std::shared_ptr<const EmbeddingIndex> index, StructuralScorer scorer)
    : servers_(std::move(servers)),
      vocabulary_(std::move(vocabulary)),
      encoder_(std::move(encoder)),
      index_(std::move(index)),
      scorer_(std::move(scorer)) {
  if (!index_) throw DataError("engine needs an embedding index");
  if (encoder_.vocabulary_fingerprint != vocabulary_.fingerprint()) {
    throw DataError("checkpoint was trained against a different vocabulary");
  }
  if (encoder_.input_dim() != vocabulary_.size()) throw DataError("encoder input size differs from the vocabulary");
  if (index_->size() != servers_.size()) {
    throw DataError(fmt::format("index has {} rows for {} servers", index_->size(), servers_.size()));
  }
  for (std::size_t row = 0; row < servers_.size(); ++row) {
    if (index_->id(row) != servers_[row].id) {
      throw DataError(fmt::format("index row {} is {} but the corpus has {}", row, index_->id(row), servers_[row].id));
    }
  }
  if (!index_->empty() && index_->dim() != encoder_.embedding_dim()) {
    throw DataError(fmt::format("index dimension {} differs from encoder output {}", index_->dim(),
                                encoder_.embedding_dim()));
  }
}

Normalized<Eigen::VectorXd> Engine::encode_task(std::string_view text) const {
  return encoder_.encode_task(lexical_input(text, vocabulary_));
}

std::shared_ptr<const Engine> load_engine(const ArtifactPaths& paths, StructuralWeights structural_weights) {
  ServerCorpus servers(read_servers(paths.servers));
  auto taxonomy = std::make_shared<const Taxonomy>(paths.taxonomy.empty() ? Taxonomy{} : Taxonomy::load(paths.taxonomy));
  ThemeSystemRules rules = paths.theme_rules.empty() ? ThemeSystemRules{} : ThemeSystemRules::load(paths.theme_rules);
  auto vocabulary = Vocabulary::load(paths.vocabulary);
  auto encoder = load_checkpoint(paths.checkpoint, vocabulary);
  std::shared_ptr<const EmbeddingIndex> index;
  if (paths.index.empty()) {
    index = std::make_shared<const EmbeddingIndex>(encode_corpus(encoder, servers, vocabulary));
  } else {
    index = std::make_shared<const EmbeddingIndex>(EmbeddingIndex::load(paths.index));
  }
  return std::make_shared<const Engine>(std::move(servers), std::move(vocabulary), std::move(encoder),
                                        std::move(index),
                                        StructuralScorer(std::move(taxonomy), std::move(rules), structural_weights));
}

TaskQuery query_from_task(const TaskRecord& task) {
  return TaskQuery{task.id, task.name, concat_text(task), attributes_of(task)};
}

std::string_view to_string(Provenance provenance) {
  return provenance == Provenance::kAnchor ? "anchor" : "expansion";
}

std::vector<Candidate> CandidatePool::members() const {
  std::vector<Candidate> out = anchors;
  out.insert(out.end(), expansion.begin(), expansion.end());
  return out;
}

std::vector<std::string> CandidatePool::ids() const {
  std::vector<std::string> out;
  out.reserve(size());
  for (const auto& c : anchors) out.push_back(c.id);
  for (const auto& c : expansion) out.push_back(c.id);
  return out;
}

std::vector<std::string> CandidatePool::fused_order() const {
  auto all = members();
  std::sort(all.begin(), all.end(), [](const Candidate& a, const Candidate& b) {
    if (a.scores.fused != b.scores.fused) return a.scores.fused > b.scores.fused;
    return a.id < b.id;
  });
  std::vector<std::string> out;
  out.reserve(all.size());
  for (const auto& c : all) out.push_back(c.id);
  return out;
}

const Candidate* CandidatePool::find(std::string_view id) const {
  for (const auto* part : {&anchors, &expansion}) {
    for (const auto& c : *part) {
      if (c.id == id) return &c;
    }
  }
  return nullptr;
}

std::vector<std::string> RankedList::ids() const {
  std::vector<std::string> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.id);
  return out;
}

std::vector<std::size_t> rank_fused(const Eigen::VectorXd& fused, const std::vector<std::string>& ids) {
  return top_k_rows(fused, ids, ids.size());
}

std::vector<std::size_t> anchor(std::span<const std::size_t> ranked, std::size_t k1) {
  const std::size_t n = std::min(k1, ranked.size());
  return {ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(n)};
}

Eigen::VectorXd centroid(const Eigen::VectorXd& task_embedding, std::span<const Eigen::VectorXd> anchors) {
  if (anchors.empty()) {
    spdlog::warn("no anchors; the centroid falls back to the task embedding");
    return task_embedding;
  }
  Eigen::VectorXd sum = task_embedding;
  for (const auto& a : anchors) {
    if (a.size() != sum.size()) throw std::invalid_argument("centroid: embedding sizes differ");
    sum += a;
  }
  return sum / static_cast<double>(anchors.size() + 1);
}

std::vector<std::size_t> expand(const Eigen::VectorXd& centroid_similarity, const std::vector<std::string>& ids,
                                std::span<const std::size_t> excluded, std::size_t count) {
  std::vector<bool> skip(ids.size(), false);
  for (std::size_t row : excluded) skip.at(row) = true;
  return top_k_rows(centroid_similarity, ids, count, &skip);
}

std::string constraint_summary(const TaskAttributes& a) {
  std::vector<std::string> parts;
  if (!a.category.empty()) {
    parts.push_back(a.subcategory.empty() ? fmt::format("category={}", a.category)
                                          : fmt::format("category={}/{}", a.category, a.subcategory));
  }
  if (!a.language.empty()) parts.push_back(fmt::format("language={}", a.language));
  if (a.system) parts.push_back(fmt::format("system={}", to_string(*a.system)));
  if (!a.theme.empty()) parts.push_back(fmt::format("theme={}", a.theme));
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? "; " : "") + parts[i];
  return out;
}

Recommendation recommend(const Engine& engine, const TaskQuery& task, const RecommendConfig& config,
                         const RerankBackend* backend, const CallOptions& options) {
  config.validate();
  const auto embedding = engine.encode_task(task.text);
  if (embedding.degenerate) spdlog::warn("task text has no usable signal; semantic scores are all 0");
  auto result = recommend(engine, task, embedding.vector, config, backend, options);
  ++result.trace.task_encodings;
  return result;
}

Recommendation recommend(const Engine& engine, const TaskQuery& task, const Eigen::VectorXd& task_embedding,
                         const RecommendConfig& config, const RerankBackend* backend, const CallOptions& options) {
  config.validate();
  Recommendation out;
  const auto& index = engine.index();
  if (index.empty()) return out;
  const auto& ids = index.ids();

  const Eigen::VectorXd semantic = index.similarity_pass(task_embedding);
  ++out.trace.semantic_passes;
  const auto structural = engine.scorer().score_all(task.attributes, engine.servers().records());
  ++out.trace.structural_passes;
  Eigen::VectorXd fused(semantic.size());
  for (Eigen::Index i = 0; i < fused.size(); ++i) {
    fused[i] = fuse(semantic[i], structural[static_cast<std::size_t>(i)], config.fusion);
  }

  const auto anchors = top_k_rows(fused, ids, config.k1);
  std::vector<Eigen::VectorXd> anchor_embeddings;
  anchor_embeddings.reserve(anchors.size());
  for (std::size_t row : anchors) anchor_embeddings.push_back(index.embedding(row));
  const Eigen::VectorXd c = centroid(task_embedding, anchor_embeddings);
  const Eigen::VectorXd centroid_similarity = index.similarity_pass(c);
  ++out.trace.centroid_passes;
  const auto expansion = expand(centroid_similarity, ids, anchors, config.k2 - config.k1);

  const auto make = [&](std::size_t row, Provenance provenance) {
    const auto r = static_cast<Eigen::Index>(row);
    return Candidate{ids[row], row, provenance, {semantic[r], structural[row], fused[r], centroid_similarity[r]}};
  };
  for (std::size_t row : anchors) out.pool.anchors.push_back(make(row, Provenance::kAnchor));
  for (std::size_t row : expansion) out.pool.expansion.push_back(make(row, Provenance::kExpansion));

  RerankRequest request;
  request.task_id = task.id;
  request.task_name = task.name;
  request.task_text = task.text;
  request.constraints = constraint_summary(task.attributes);
  for (const auto& candidate : out.pool.members()) request.cards.push_back(make_card(engine.servers()[candidate.row]));
  request.pre_order = out.pool.fused_order();
  request.k = std::min(config.k, out.pool.size());

  const auto reranked = rerank(request, backend, options);
  if (backend != nullptr) ++out.trace.backend_calls;
  out.list.status = reranked.status;
  out.list.reason = reranked.reason;
  out.list.explanation = reranked.explanation;
  for (std::size_t i = 0; i < reranked.ids.size(); ++i) {
    const auto* candidate = out.pool.find(reranked.ids[i]);
    out.list.entries.push_back({candidate->id, i + 1, candidate->provenance, candidate->scores});
  }
  return out;
}

nlohmann::ordered_json to_json(const RankedList& list) {
  nlohmann::ordered_json out;
  out["status"] = std::string(to_string(list.status));
  if (!list.reason.empty()) out["reason"] = list.reason;
  out["explanation"] = list.explanation;
  out["results"] = nlohmann::ordered_json::array();
  for (const auto& e : list.entries) {
    out["results"].push_back({{"rank", e.rank},
                              {"id", e.id},
                              {"provenance", std::string(to_string(e.provenance))},
                              {"semantic", e.scores.semantic},
                              {"structural", e.scores.structural},
                              {"fused", e.scores.fused},
                              {"centroid", e.scores.centroid}});
  }
  return out;
}

}  // namespace mcprec
