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

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mcprec/corpus.hpp"
#include "mcprec/random.hpp"
#include "mcprec/structural.hpp"
#include "mcprec/taxonomy.hpp"

namespace mcprec::testing {

// Disjoint token clusters. Every cluster holds `groups_per_cluster` server
// groups; a task's positives are exactly the servers of one group, and task
// and server texts share that group's tokens plus cluster tokens.
struct SyntheticConfig {
  std::size_t clusters = 8;
  std::size_t tasks_per_cluster = 40;
  std::size_t servers_per_cluster = 40;
  std::size_t groups_per_cluster = 8;
  std::size_t cluster_vocab = 12;
  std::size_t group_vocab = 4;
  std::size_t shared_vocab = 20;
  std::size_t text_cluster_tokens = 3;
  std::size_t text_group_tokens = 6;
  std::size_t text_shared_tokens = 1;
  std::uint64_t seed = 1;
};

struct SyntheticCorpus {
  Dataset dataset;
  Taxonomy taxonomy;
  ThemeSystemRules rules;
  nlohmann::json taxonomy_json;
  nlohmann::json rules_json;
};

SyntheticCorpus make_synthetic(const SyntheticConfig& config = {});

// mcp.jsonl, tasks.jsonl, interactions.jsonl, taxonomy.json, theme_rules.json
void write_synthetic(const SyntheticCorpus& corpus, const std::filesystem::path& dir);

// Small random corpus with free-form texts, random attributes and at least
// one positive per task; used by property tests.
Dataset make_random_dataset(Rng& rng, std::size_t servers, std::size_t tasks, std::size_t words);

// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

}  // namespace mcprec::testing
