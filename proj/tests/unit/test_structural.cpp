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

#include <algorithm>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "mcprec/error.hpp"
#include "mcprec/random.hpp"
#include "mcprec/structural.hpp"

namespace mcprec {
namespace {

std::shared_ptr<const Taxonomy> taxonomy() {
  return std::make_shared<const Taxonomy>(
      Taxonomy::from_json(nlohmann::json::parse(R"({"media": ["video", "audio"], "communication": ["chat"]})")));
}

McpRecord server(std::string category, std::string subcategory, std::string language, System system) {
  McpRecord s;
  s.id = "m";
  s.category = std::move(category);
  s.subcategory = std::move(subcategory);
  s.language = std::move(language);
  s.system = system;
  return s;
}

TEST(CategoryFeatureTest, Values) {
  EXPECT_EQ(category_feature(0), 1.0);
  EXPECT_EQ(category_feature(2), 0.5);
  EXPECT_EQ(category_feature(4), 0.0);
}

TEST(LanguageFeatureTest, Rules) {
  EXPECT_EQ(language_feature("python", "Python"), 1.0);
  EXPECT_EQ(language_feature("rust", "any"), 1.0);
  EXPECT_EQ(language_feature("rust", ""), 1.0);
  EXPECT_EQ(language_feature("", "go"), 1.0);
  EXPECT_EQ(language_feature("rust", "go"), 0.0);
}

TEST(ThemeFeatureTest, Rules) {
  ThemeSystemRules rules = ThemeSystemRules::from_json({{"Education", {"linux", "Windows"}}});
  EXPECT_EQ(theme_feature("education", System::kLinux, rules), 1.0);
  EXPECT_EQ(theme_feature("education", System::kIos, rules), 0.0);
  EXPECT_EQ(theme_feature("education", System::kAny, rules), 1.0);
  EXPECT_EQ(theme_feature("gaming", System::kIos, rules), 1.0);
  EXPECT_EQ(rules.themes(), (std::vector<std::string>{"education"}));
}

TEST(StructuralScoreTest, Examples) {
  const StructuralWeights w;
  EXPECT_NEAR(structural_score({1, 1, 1}, w), 1.0, 1e-15);
  EXPECT_EQ(structural_score({0, 0, 0}, w), 0.0);
  EXPECT_NEAR(structural_score({0.5, 1, 0}, w), 0.5, 1e-15);
}

TEST(StructuralScoreTest, WeightValidation) {
  EXPECT_THROW((StructuralWeights{0.5, 0.5, 0.5}.validate()), ConfigError);
  EXPECT_THROW((StructuralWeights{0.0, 0.5, 0.5}.validate()), ConfigError);
  EXPECT_NO_THROW((StructuralWeights{0.2, 0.3, 0.5}.validate()));
  EXPECT_THROW((FusionWeights{0.5, 0.6}.validate()), ConfigError);
  EXPECT_THROW((FusionWeights{1.5, -0.5}.validate()), ConfigError);
  EXPECT_NO_THROW((FusionWeights{1.0, 0.0}.validate()));
}

TEST(FuseTest, Examples) {
  EXPECT_EQ(fuse(0.3, 0.9, {1.0, 0.0}), 0.3);
  EXPECT_NEAR(fuse(0.8, 1.0, {0.9, 0.1}), 0.82, 1e-15);
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    const double x = rng.uniform(-1, 1);
    const double a = rng.uniform01();
    EXPECT_NEAR(fuse(x, x, {a, 1.0 - a}), x, 1e-15);
  }
}

TEST(FuseTest, MonotoneAndSemanticOrderWithoutStructure) {
  Rng rng(2);
  for (int round = 0; round < 200; ++round) {
    const double a = rng.uniform01();
    const FusionWeights w{a, 1.0 - a};
    const double s = rng.uniform(-1, 1), t = rng.uniform01(), d = rng.uniform01();
    ASSERT_LE(fuse(s, t, w), fuse(s + d, t, w));
    ASSERT_LE(fuse(s, t, w), fuse(s, std::min(1.0, t + d), w));
    std::vector<double> sem(20), str(20);
    for (int i = 0; i < 20; ++i) {
      sem[i] = rng.uniform(-1, 1);
      str[i] = rng.uniform01();
    }
    std::vector<int> by_sem(20), by_fused(20);
    std::iota(by_sem.begin(), by_sem.end(), 0);
    std::iota(by_fused.begin(), by_fused.end(), 0);
    std::stable_sort(by_sem.begin(), by_sem.end(), [&](int x, int y) { return sem[x] > sem[y]; });
    std::stable_sort(by_fused.begin(), by_fused.end(), [&](int x, int y) {
      return fuse(sem[x], str[x], {1.0, 0.0}) > fuse(sem[y], str[y], {1.0, 0.0});
    });
    ASSERT_EQ(by_sem, by_fused);
  }
}

TEST(StructuralScorerTest, Features) {
  const StructuralScorer scorer(taxonomy(), ThemeSystemRules::from_json({{"education", {"linux"}}}));
  TaskAttributes task{"media", "video", "python", "education", std::nullopt};
  auto f = scorer.features(task, server("media", "video", "python", System::kLinux));
  EXPECT_EQ(f.category, 1.0);
  EXPECT_EQ(f.language, 1.0);
  EXPECT_EQ(f.theme, 1.0);
  f = scorer.features(task, server("media", "audio", "go", System::kWindows));
  EXPECT_EQ(f.category, 0.5);
  EXPECT_EQ(f.language, 0.0);
  EXPECT_EQ(f.theme, 0.0);
  f = scorer.features(task, server("communication", "chat", "any", System::kAny));
  EXPECT_EQ(f.category, 0.0);
  EXPECT_EQ(f.language, 1.0);
  EXPECT_EQ(f.theme, 1.0);
}

TEST(StructuralScorerTest, UnknownNodesScoreZeroCategory) {
  const StructuralScorer scorer(taxonomy());
  TaskAttributes task{"media", "podcasts", "python", "", std::nullopt};
  EXPECT_EQ(scorer.features(task, server("media", "video", "python", System::kAny)).category, 0.0);
  task.subcategory = "video";
  EXPECT_EQ(scorer.features(task, server("games", "rpg", "python", System::kAny)).category, 0.0);
}

TEST(StructuralScorerTest, ExplicitSystemOverridesThemeRule) {
  const StructuralScorer scorer(taxonomy(), ThemeSystemRules::from_json({{"education", {"linux"}}}));
  TaskAttributes task{"media", "video", "python", "education", System::kWindows};
  EXPECT_EQ(scorer.features(task, server("media", "video", "python", System::kWindows)).theme, 1.0);
  EXPECT_EQ(scorer.features(task, server("media", "video", "python", System::kLinux)).theme, 0.0);
  EXPECT_EQ(scorer.features(task, server("media", "video", "python", System::kAny)).theme, 1.0);
}

TEST(StructuralScorerTest, ScoreAllMatchesPerServer) {
  const StructuralScorer scorer(taxonomy(), ThemeSystemRules::from_json({{"education", {"linux"}}}));
  const std::vector<McpRecord> servers{server("media", "video", "python", System::kLinux),
                                       server("media", "audio", "go", System::kIos),
                                       server("communication", "chat", "", System::kAny),
                                       server("x", "y", "python", System::kWindows)};
  const TaskAttributes task{"media", "video", "python", "education", std::nullopt};
  const auto all = scorer.score_all(task, servers);
  ASSERT_EQ(all.size(), servers.size());
  for (std::size_t i = 0; i < servers.size(); ++i) {
    EXPECT_EQ(all[i], scorer.score(task, servers[i]));
    EXPECT_GE(all[i], 0.0);
    EXPECT_LE(all[i], 1.0 + 1e-15);
  }
}

TEST(StructuralScorerTest, CategoryFeatureAlwaysInThreeValues) {
  Taxonomy t;
  for (int c = 0; c < 5; ++c) {
    for (int s = 0; s < 3; ++s) t.add("c" + std::to_string(c), "s" + std::to_string(s));
  }
  const StructuralScorer scorer(std::make_shared<const Taxonomy>(t));
  for (int c1 = 0; c1 < 5; ++c1) {
    for (int s1 = 0; s1 < 3; ++s1) {
      for (int c2 = 0; c2 < 5; ++c2) {
        for (int s2 = 0; s2 < 3; ++s2) {
          const TaskAttributes task{"c" + std::to_string(c1), "s" + std::to_string(s1), "", "", std::nullopt};
          const double f = scorer.features(task, server("c" + std::to_string(c2), "s" + std::to_string(s2), "",
                                                        System::kAny)).category;
          const double expected = c1 != c2 ? 0.0 : s1 != s2 ? 0.5 : 1.0;
          ASSERT_EQ(f, expected);
        }
      }
    }
  }
}

}  // namespace
}  // namespace mcprec
