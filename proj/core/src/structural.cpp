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

#include "mcprec/structural.hpp"

#include <cmath>
#include <fstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "mcprec/error.hpp"
#include "mcprec/text.hpp"

namespace mcprec {
namespace {

constexpr double kWeightSumTolerance = 1e-9;

bool is_wildcard(std::string_view folded) { return folded.empty() || folded == "any"; }

}  // namespace

void StructuralWeights::validate() const {
  if (!(category > 0.0 && language > 0.0 && theme > 0.0)) {
    throw ConfigError("structural weights must be positive");
  }
  if (std::abs(category + language + theme - 1.0) > kWeightSumTolerance) {
    throw ConfigError(fmt::format("structural weights must sum to 1 (got {})",
                                  category + language + theme));
  }
}

void FusionWeights::validate() const {
  if (semantic < 0.0 || structural < 0.0) throw ConfigError("fusion weights must be non-negative");
  if (std::abs(semantic + structural - 1.0) > kWeightSumTolerance) {
    throw ConfigError(fmt::format("fusion weights must sum to 1 (got {})", semantic + structural));
  }
}

double category_feature(int distance) { return 1.0 - static_cast<double>(distance) / 4.0; }

double language_feature(std::string_view task_language, std::string_view server_language) {
  const std::string task = fold_categorical(task_language);
  const std::string server = fold_categorical(server_language);
  if (is_wildcard(task) || is_wildcard(server)) return 1.0;
  return task == server ? 1.0 : 0.0;
}

ThemeSystemRules ThemeSystemRules::from_json(const nlohmann::json& rules) {
  if (!rules.is_object()) throw DataError("theme rules: expected an object {theme: [systems]}");
  ThemeSystemRules out;
  for (const auto& [theme, systems] : rules.items()) {
    if (!systems.is_array()) throw DataError("theme rules: systems of '" + theme + "' must be an array");
    for (const auto& system : systems) {
      if (!system.is_string()) throw DataError("theme rules: system names must be strings");
      out.allow(theme, parse_system(system.get<std::string>()));
    }
  }
  return out;
}

ThemeSystemRules ThemeSystemRules::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open theme rules file: " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void ThemeSystemRules::allow(std::string_view theme, System system) {
  allowed_[fold_categorical(theme)].insert(system);
}

std::vector<std::string> ThemeSystemRules::themes() const {
  std::vector<std::string> out;
  out.reserve(allowed_.size());
  for (const auto& [theme, systems] : allowed_) out.push_back(theme);
  return out;
}

bool ThemeSystemRules::has_rule(std::string_view theme) const {
  return allowed_.find(fold_categorical(theme)) != allowed_.end();
}

bool ThemeSystemRules::compatible(std::string_view theme, System system) const {
  if (system == System::kAny) return true;
  auto it = allowed_.find(fold_categorical(theme));
  if (it == allowed_.end()) return true;
  return it->second.count(system) != 0 || it->second.count(System::kAny) != 0;
}

double theme_feature(std::string_view task_theme, System server_system,
                     const ThemeSystemRules& rules) {
  return rules.compatible(task_theme, server_system) ? 1.0 : 0.0;
}

double structural_score(const CompatFeatures& f, const StructuralWeights& w) {
  return w.category * f.category + w.language * f.language + w.theme * f.theme;
}

double fuse(double semantic, double structural, const FusionWeights& w) {
  return w.semantic * semantic + w.structural * structural;
}

TaskAttributes attributes_of(const TaskRecord& task) {
  return TaskAttributes{task.category, task.subcategory, task.language, task.theme, std::nullopt};
}

StructuralScorer::StructuralScorer(std::shared_ptr<const Taxonomy> taxonomy,
                                   ThemeSystemRules rules, StructuralWeights weights)
    : taxonomy_(std::move(taxonomy)), rules_(std::move(rules)), weights_(weights) {
  if (!taxonomy_) throw ConfigError("structural scorer needs a taxonomy");
  weights_.validate();
}

CompatFeatures StructuralScorer::features(const TaskAttributes& task, std::optional<NodeId> task_node,
                                          const McpRecord& server, bool& server_unknown) const {
  CompatFeatures f;
  const auto server_node = taxonomy_->find(server.category, server.subcategory);
  server_unknown = !server_node.has_value();
  if (task_node && server_node) {
    f.category = category_feature(taxonomy_distance(*server_node, *task_node, *taxonomy_));
  }
  f.language = language_feature(task.language, server.language);
  if (task.system) {
    const bool ok = *task.system == System::kAny || server.system == System::kAny ||
                    *task.system == server.system;
    f.theme = ok ? 1.0 : 0.0;
  } else {
    f.theme = theme_feature(task.theme, server.system, rules_);
  }
  return f;
}

CompatFeatures StructuralScorer::features(const TaskAttributes& task, const McpRecord& server) const {
  bool server_unknown = false;
  return features(task, taxonomy_->find(task.category, task.subcategory), server, server_unknown);
}

double StructuralScorer::score(const TaskAttributes& task, const McpRecord& server) const {
  return structural_score(features(task, server), weights_);
}

std::vector<double> StructuralScorer::score_all(const TaskAttributes& task,
                                                std::span<const McpRecord> servers) const {
  const auto task_node = taxonomy_->find(task.category, task.subcategory);
  if (!task_node && !task.category.empty()) {
    spdlog::warn("task category '{}/{}' is not in the taxonomy; category feature is 0",
                 task.category, task.subcategory);
  }
  std::vector<double> scores;
  scores.reserve(servers.size());
  std::size_t unknown = 0;
  for (const auto& server : servers) {
    bool server_unknown = false;
    scores.push_back(structural_score(features(task, task_node, server, server_unknown), weights_));
    unknown += server_unknown ? 1 : 0;
  }
  if (unknown > 0) {
    spdlog::warn("{} server(s) have categories outside the taxonomy; category feature is 0", unknown);
  }
  return scores;
}

}  // namespace mcprec
