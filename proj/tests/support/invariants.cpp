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

#include "invariants.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <nlohmann/json.hpp>

#include "mcprec/rerank.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

namespace mcprec::testing {
namespace {

constexpr double kTieTolerance = 1e-12;

std::shared_ptr<const Taxonomy> dataset_taxonomy(const Dataset& dataset) {
  auto taxonomy = std::make_shared<Taxonomy>();
  std::set<std::pair<std::string, std::string>> seen;
  const auto add = [&](const std::string& c, const std::string& s) {
    if (!c.empty() && !s.empty() && seen.emplace(c, s).second) taxonomy->add(c, s);
  };
  for (const auto& s : dataset.servers) add(s.category, s.subcategory);
  for (const auto& t : dataset.tasks) add(t.category, t.subcategory);
  return taxonomy;
}

std::string join(const std::vector<std::string>& ids) { return fmt::format("[{}]", fmt::join(ids, ",")); }

}  // namespace

std::vector<std::string> corpus_texts(const Dataset& dataset) {
  std::vector<std::string> texts;
  for (const auto& s : dataset.servers) texts.push_back(concat_text(s));
  for (const auto& t : dataset.tasks) texts.push_back(concat_text(t));
  return texts;
}

std::shared_ptr<const Engine> make_engine(const Dataset& dataset, const DualEncoder& encoder,
                                          const Vocabulary& vocabulary, std::shared_ptr<const Taxonomy> taxonomy,
                                          ThemeSystemRules rules, std::shared_ptr<const EmbeddingIndex> index) {
  if (!taxonomy) taxonomy = dataset_taxonomy(dataset);
  if (!index) index = std::make_shared<const EmbeddingIndex>(encode_corpus(encoder, dataset.servers, vocabulary));
  return std::make_shared<const Engine>(dataset.servers, vocabulary, encoder, std::move(index),
                                        StructuralScorer(std::move(taxonomy), std::move(rules)));
}

std::string check_refinement_case(Rng& rng) {
  const std::size_t m = 1 + rng.index(60);
  const auto dataset = make_random_dataset(rng, m, 2, 3 + rng.index(30));
  const auto vocabulary = Vocabulary::build(corpus_texts(dataset));
  DualEncoder encoder;
  if (rng.bernoulli(0.3)) {
    encoder = make_identity_encoder(vocabulary);
  } else {
    TowerConfig tower;
    tower.hidden_dim = 4 + rng.index(12);
    tower.output_dim = 2 + rng.index(8);
    tower.layers = 1 + rng.index(3);
    encoder = make_dual_encoder(tower, vocabulary, rng);
  }
  const auto engine = make_engine(dataset, encoder, vocabulary);

  RecommendConfig config;
  config.k1 = 1 + rng.index(m + 5);
  config.k2 = config.k1 + rng.index(25);
  config.k = 1 + rng.index(config.k2);
  const bool semantic_only = rng.bernoulli(0.5);
  const double alpha = rng.uniform01();
  config.fusion = semantic_only ? FusionWeights{1.0, 0.0} : FusionWeights{alpha, 1.0 - alpha};
  const BuiltinHeuristicBackend builtin;
  const bool use_backend = rng.bernoulli(0.3);

  const auto& task = dataset.tasks[rng.index(dataset.tasks.size())];
  const auto query = query_from_task(task);
  const auto result = recommend(*engine, query, config, use_backend ? &builtin : nullptr);
  const auto describe = [&](std::string what) {
    return fmt::format("{} (M={}, k1={}, k2={}, k={}, alpha_str={}, backend={})", what, m, config.k1, config.k2,
                       config.k, config.fusion.structural, use_backend);
  };

  const auto pool_ids = result.pool.ids();
  const std::set<std::string> pool(pool_ids.begin(), pool_ids.end());
  if (pool.size() != pool_ids.size()) return describe("pool has duplicates");
  if (pool_ids.size() != std::min(config.k2, m)) return describe(fmt::format("pool size {}", pool_ids.size()));
  if (result.pool.anchors.size() != std::min(config.k1, m)) return describe("anchor count");
  for (const auto& a : result.pool.anchors) {
    if (!pool.count(a.id)) return describe("anchor outside pool");
  }
  const auto ids = result.list.ids();
  if (ids.size() != std::min(config.k, pool_ids.size())) return describe(fmt::format("list length {}", ids.size()));
  const std::set<std::string> unique(ids.begin(), ids.end());
  if (unique.size() != ids.size()) return describe("list has duplicates");
  for (const auto& id : ids) {
    if (!pool.count(id)) return describe("list id outside pool: " + id);
  }
  if (result.trace.semantic_passes != 1 || result.trace.centroid_passes != 1 || result.trace.structural_passes != 1 ||
      result.trace.task_encodings != 1 || result.trace.backend_calls > 1) {
    return describe("pass counts");
  }

  if (semantic_only && !use_backend) {
    RecommendConfig exact = config;
    exact.k = std::min(config.k, config.k1);
    const auto got = recommend(*engine, query, exact).list.ids();
    const auto scored = oracle::brute_force_scores(encoder, vocabulary, dataset.servers, query.text);
    std::map<std::string, double> score_of(scored.begin(), scored.end());
    std::vector<std::string> expected;
    for (std::size_t i = 0; i < exact.k && i < scored.size(); ++i) expected.push_back(scored[i].first);
    bool same = got.size() == expected.size();
    for (std::size_t i = 0; same && i < got.size(); ++i) {
      same = std::abs(score_of.at(got[i]) - score_of.at(expected[i])) <= kTieTolerance;
    }
    if (!same) {
      std::string scores;
      for (const auto& id : expected) scores += fmt::format(" {}={:.17g}", id, score_of.at(id));
      return describe(fmt::format("brute force mismatch {} vs {};{}", join(got), join(expected), scores));
    }
  }
  return {};
}

std::string check_rerank_fuzz_case(Rng& rng) {
  const std::size_t n = 1 + rng.index(30);
  std::vector<std::string> pool;
  for (std::size_t i = 0; i < n; ++i) pool.push_back(fmt::format("srv-{}", rng.index(1000) * 31 + i));
  std::vector<std::string> pre_order = pool;
  rng.shuffle(pre_order);
  const std::size_t k = 1 + rng.index(n);

  std::vector<std::string> foreign{"ghost", "srv-x", "", "SRV-1"};
  std::string raw;
  bool structured = false;
  std::vector<std::string> proposal;
  const auto variant = rng.index(10);
  if (variant == 0) {
    const std::size_t len = rng.index(80);
    for (std::size_t i = 0; i < len; ++i) raw.push_back(static_cast<char>(32 + rng.index(95)));
  } else {
    // Start from a permutation of the pool; take the first k with mutations.
    proposal = pre_order;
    const std::size_t swaps = rng.index(n + 1);
    for (std::size_t i = 0; i < swaps; ++i) std::swap(proposal[rng.index(n)], proposal[rng.index(n)]);
    std::size_t len = k;
    if (rng.bernoulli(0.15)) len = rng.index(n + 3);
    proposal.resize(std::min(len, proposal.size()));
    while (proposal.size() < len) proposal.push_back(pool[rng.index(n)]);
    if (!proposal.empty() && rng.bernoulli(0.15)) proposal[rng.index(proposal.size())] = foreign[rng.index(foreign.size())];
    if (!proposal.empty() && rng.bernoulli(0.1)) proposal[rng.index(proposal.size())] = proposal[rng.index(proposal.size())];
    if (!proposal.empty() && rng.bernoulli(0.1)) {
      auto& id = proposal[rng.index(proposal.size())];
      if (rng.bernoulli(0.5)) {
        id = " " + id;
      } else {
        std::transform(id.begin(), id.end(), id.begin(), [](unsigned char c) { return std::toupper(c); });
      }
    }
    nlohmann::json reply;
    if (rng.bernoulli(0.9)) reply["Task"] = "t";
    reply["MCP_servers"] = proposal;
    if (rng.bernoulli(0.8)) reply["Explanation"] = "because";
    raw = reply.dump();
    structured = true;
    if (rng.bernoulli(0.1)) {
      raw = raw.substr(0, rng.index(raw.size()));
      structured = false;
    } else if (rng.bernoulli(0.1)) {
      raw = "```json\n" + raw + "\n```";
    } else if (rng.bernoulli(0.05)) {
      nlohmann::json broken = reply;
      broken["MCP_servers"].push_back(7);
      raw = broken.dump();
      structured = false;
    }
  }

  const auto result = validate(raw, pool, pre_order, k);
  const std::vector<std::string> prefix(pre_order.begin(), pre_order.begin() + static_cast<std::ptrdiff_t>(k));
  const std::set<std::string> members(pool.begin(), pool.end());
  const std::set<std::string> top(prefix.begin(), prefix.end());

  bool expected_accept = false;
  if (structured) {
    const std::set<std::string> unique(proposal.begin(), proposal.end());
    const bool in_pool = std::all_of(proposal.begin(), proposal.end(), [&](const auto& id) { return members.count(id); });
    const auto outside = std::count_if(proposal.begin(), proposal.end(), [&](const auto& id) { return !top.count(id); });
    expected_accept = proposal.size() == k && in_pool && unique.size() == proposal.size() && outside <= 2;
  }

  if (result.status == RerankStatus::kAccepted) {
    if (!expected_accept) return fmt::format("accepted an invalid reply: {}", raw);
    if (result.ids != proposal) return "accepted list differs from the reply";
    const std::set<std::string> unique(result.ids.begin(), result.ids.end());
    if (result.ids.size() != k || unique.size() != k) return "accepted list violates length or uniqueness";
    std::size_t outside = 0;
    for (const auto& id : result.ids) {
      if (!members.count(id)) return "accepted list leaves the pool";
      outside += top.count(id) ? 0 : 1;
    }
    if (outside > kMaxSubstitutions) return "accepted list exceeds the substitution budget";
  } else {
    if (expected_accept) return fmt::format("rejected a valid reply ({}): {}", result.reason, raw);
    if (result.ids != prefix) return "fallback is not the fused-order prefix";
    if (result.reason.empty()) return "fallback without a reason";
  }
  return {};
}

}  // namespace mcprec::testing
