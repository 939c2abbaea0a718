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

#include "mcprec/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace mcprec {
namespace {

std::unordered_set<std::string_view> as_set(std::span<const std::string> values) {
  return {values.begin(), values.end()};
}

double macro(const std::vector<TaskEvaluation>& tasks, std::size_t column, double MetricRow::*field) {
  if (tasks.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& task : tasks) sum += task.rows[column].*field;
  return sum / static_cast<double>(tasks.size());
}

}  // namespace

std::size_t hits(std::span<const std::string> ranked, std::span<const std::string> positives, std::size_t k) {
  const auto relevant = as_set(positives);
  const std::size_t n = std::min(k, ranked.size());
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) count += relevant.count(ranked[i]);
  return count;
}

RetrievalScores recall_precision_f1(std::span<const std::string> ranked, std::span<const std::string> positives,
                                    std::size_t k) {
  if (positives.empty()) throw std::invalid_argument("metrics need at least one positive");
  if (k == 0) throw std::invalid_argument("k must be positive");
  const auto relevant = as_set(positives);
  const auto h = static_cast<double>(hits(ranked, positives, k));
  RetrievalScores s;
  s.recall = h / static_cast<double>(relevant.size());
  s.precision = h / static_cast<double>(k);
  if (s.recall + s.precision > 0.0) s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

double ndcg(std::span<const std::string> ranked, std::span<const std::string> positives, std::size_t k) {
  if (positives.empty()) throw std::invalid_argument("metrics need at least one positive");
  if (k == 0) throw std::invalid_argument("k must be positive");
  const auto relevant = as_set(positives);
  double dcg = 0.0;
  const std::size_t n = std::min(k, ranked.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (relevant.count(ranked[i])) dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  }
  double idcg = 0.0;
  const std::size_t ideal = std::min(k, relevant.size());
  for (std::size_t i = 0; i < ideal; ++i) idcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  return dcg / idcg;
}

const MetricRow& EvalReport::at_k(std::size_t k) const {
  for (const auto& row : macro) {
    if (row.k == k) return row;
  }
  throw std::out_of_range(fmt::format("report has no k={}", k));
}

std::string EvalReport::to_table(std::string_view label) const {
  std::string header = fmt::format("{:<16}", "Model");
  std::string values = fmt::format("{:<16}", label);
  const auto add = [&](std::string_view name, double MetricRow::*field) {
    for (const auto& row : macro) {
      header += fmt::format(" {:>12}", fmt::format("{}@{}", name, row.k));
      values += fmt::format(" {:>12.4f}", row.*field);
    }
  };
  add("Recall", &MetricRow::recall);
  add("Precision", &MetricRow::precision);
  add("F1", &MetricRow::f1);
  add("NDCG", &MetricRow::ndcg);
  return fmt::format("{}\n{}\ntasks: {} (excluded without positives: {})\n", header, values, task_count(),
                     excluded_tasks);
}

nlohmann::ordered_json EvalReport::to_json() const {
  nlohmann::ordered_json out;
  out["ks"] = ks;
  out["task_count"] = task_count();
  out["excluded_tasks"] = excluded_tasks;
  auto row_json = [](const MetricRow& row) {
    return nlohmann::ordered_json{{"k", row.k}, {"recall", row.recall}, {"precision", row.precision},
                                  {"f1", row.f1}, {"ndcg", row.ndcg}};
  };
  out["macro"] = nlohmann::ordered_json::array();
  for (const auto& row : macro) out["macro"].push_back(row_json(row));
  out["tasks"] = nlohmann::ordered_json::array();
  for (const auto& task : tasks) {
    nlohmann::ordered_json t{{"task_id", task.task_id}, {"rows", nlohmann::ordered_json::array()}};
    for (const auto& row : task.rows) t["rows"].push_back(row_json(row));
    out["tasks"].push_back(std::move(t));
  }
  return out;
}

EvalReport evaluate(const Ranker& ranker, std::span<const std::string> task_ids,
                    const InteractionSet& interactions, std::span<const std::size_t> ks) {
  if (ks.empty()) throw std::invalid_argument("evaluate needs at least one k");
  if (std::find(ks.begin(), ks.end(), std::size_t{0}) != ks.end()) throw std::invalid_argument("k must be positive");
  EvalReport report;
  report.ks.assign(ks.begin(), ks.end());
  for (const auto& task_id : task_ids) {
    auto it = interactions.find(task_id);
    if (it == interactions.end() || it->second.empty()) {
      ++report.excluded_tasks;
      continue;
    }
    const auto ranked = ranker(task_id);
    std::unordered_set<std::string_view> seen;
    for (const auto& id : ranked) {
      if (!seen.insert(id).second) {
        throw std::invalid_argument(fmt::format("ranker returned duplicate id {} for task {}", id, task_id));
      }
    }
    TaskEvaluation row{task_id, {}};
    for (std::size_t k : ks) {
      const auto s = recall_precision_f1(ranked, it->second, k);
      row.rows.push_back({k, s.recall, s.precision, s.f1, ndcg(ranked, it->second, k)});
    }
    report.tasks.push_back(std::move(row));
  }
  if (report.excluded_tasks > 0) {
    spdlog::warn("evaluation skipped {} task(s) without positives", report.excluded_tasks);
  }
  for (std::size_t c = 0; c < ks.size(); ++c) {
    report.macro.push_back({ks[c], macro(report.tasks, c, &MetricRow::recall),
                            macro(report.tasks, c, &MetricRow::precision), macro(report.tasks, c, &MetricRow::f1),
                            macro(report.tasks, c, &MetricRow::ndcg)});
  }
  return report;
}

}  // namespace mcprec
