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

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mcprec/corpus.hpp"
#include "mcprec/taxonomy.hpp"

namespace mcprec {

struct CompatFeatures {
  double category = 0.0;  // taxonomy proximity, one of {0, 0.5, 1}
  double language = 0.0;  // {0, 1}
  double theme = 0.0;     // {0, 1}
};

// Positive weights over the three compatibility features, summing to 1.
struct StructuralWeights {
  double category = 1.0 / 3.0;
  double language = 1.0 / 3.0;
  double theme = 1.0 / 3.0;
  void validate() const;
};

// Convex blend of semantic and structural scores.
struct FusionWeights {
  double semantic = 0.9;
  double structural = 0.1;
  void validate() const;
};

// 1 - distance / 4 for distance in {0, 2, 4}.
double category_feature(int distance);

// 1 when the languages match case-insensitively or either side is "any" or
// missing.
double language_feature(std::string_view task_language, std::string_view server_language);

// Theme -> systems the theme is known to run on. Themes without an entry are
// compatible with every system.
class ThemeSystemRules {
 public:
  ThemeSystemRules() = default;
  // {"theme": ["linux", "windows"], ...}
  static ThemeSystemRules from_json(const nlohmann::json& rules);
  static ThemeSystemRules load(const std::filesystem::path& path);

  void allow(std::string_view theme, System system);
  bool has_rule(std::string_view theme) const;
  bool compatible(std::string_view theme, System system) const;
  // Folded theme names with a rule, sorted.
  std::vector<std::string> themes() const;

 private:
  std::map<std::string, std::set<System>, std::less<>> allowed_;
};

double theme_feature(std::string_view task_theme, System server_system,
                     const ThemeSystemRules& rules);

double structural_score(const CompatFeatures& features, const StructuralWeights& weights);
double fuse(double semantic, double structural, const FusionWeights& weights);

// Task-side structured attributes. `system` is an explicit platform
// constraint (from the interactive service); when present it replaces the
// theme rule lookup for the theme feature.
struct TaskAttributes {
  std::string category;
  std::string subcategory;
  std::string language;
  std::string theme;
  std::optional<System> system;
};

TaskAttributes attributes_of(const TaskRecord& task);

class StructuralScorer {
 public:
  StructuralScorer(std::shared_ptr<const Taxonomy> taxonomy, ThemeSystemRules rules = {},
                   StructuralWeights weights = {});

  // Unknown taxonomy nodes on either side yield a category feature of 0.
  CompatFeatures features(const TaskAttributes& task, const McpRecord& server) const;
  double score(const TaskAttributes& task, const McpRecord& server) const;

  // One linear pass over the corpus; logs one warning per call when records
  // fall outside the taxonomy.
  std::vector<double> score_all(const TaskAttributes& task, std::span<const McpRecord> servers) const;

  const Taxonomy& taxonomy() const { return *taxonomy_; }
  const StructuralWeights& weights() const { return weights_; }
  const ThemeSystemRules& rules() const { return rules_; }

 private:
  CompatFeatures features(const TaskAttributes& task, std::optional<NodeId> task_node,
                          const McpRecord& server, bool& server_unknown) const;

  std::shared_ptr<const Taxonomy> taxonomy_;
  ThemeSystemRules rules_;
  StructuralWeights weights_;
};

}  // namespace mcprec
