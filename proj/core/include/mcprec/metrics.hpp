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
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mcprec/corpus.hpp"

namespace mcprec {

// Number of relevant ids among the first k entries of `ranked`.
std::size_t hits(std::span<const std::string> ranked, std::span<const std::string> positives, std::size_t k);

struct RetrievalScores {
  double recall = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
};

// Recall = H/|positives|, precision = H/k, F1 the harmonic mean (0 when both
// are 0). Throws std::invalid_argument for empty positives or k = 0.
RetrievalScores recall_precision_f1(std::span<const std::string> ranked, std::span<const std::string> positives,
                                    std::size_t k);

// Binary-gain NDCG with log2(i + 1) discounts; the ideal DCG places
// min(k, |positives|) relevant items first.
double ndcg(std::span<const std::string> ranked, std::span<const std::string> positives, std::size_t k);

struct MetricRow {
  std::size_t k = 0;
  double recall = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
  double ndcg = 0.0;
};

struct TaskEvaluation {
  std::string task_id;
  std::vector<MetricRow> rows;  // one per requested k
};

struct EvalReport {
  std::vector<std::size_t> ks;
  std::vector<MetricRow> macro;  // one per k, same order as ks
  std::vector<TaskEvaluation> tasks;
  std::size_t excluded_tasks = 0;  // tasks without positives

  std::size_t task_count() const { return tasks.size(); }
  const MetricRow& at_k(std::size_t k) const;

  // Columns grouped by metric, then k: Recall@5 Recall@10 Precision@5 ...
  std::string to_table(std::string_view label = "model") const;
  nlohmann::ordered_json to_json() const;
};

using Ranker = std::function<std::vector<std::string>(const std::string& task_id)>;

inline const std::vector<std::size_t> kDefaultKs = {5, 10};

// Macro averages over `task_ids`, skipping tasks with no positives. Throws
// std::invalid_argument when the ranker returns a duplicate id or ks is empty
// or contains 0.
EvalReport evaluate(const Ranker& ranker, std::span<const std::string> task_ids,
                    const InteractionSet& interactions, std::span<const std::size_t> ks = kDefaultKs);

}  // namespace mcprec
