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

#include "mcprec/evidence.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "mcprec/lexical.hpp"

namespace mcprec {
namespace {

bool contains_token(std::string_view text, const std::string& term) {
  const auto tokens = tokenize(text);
  return std::find(tokens.begin(), tokens.end(), term) != tokens.end();
}

CheckResult fail(std::string stage, std::string detail) { return {false, std::move(stage), std::move(detail)}; }

EvidenceCard base_card(const RankedEntry& entry, const McpRecord& server) {
  EvidenceCard card;
  card.id = server.id;
  card.name = server.name;
  card.rank = entry.rank;
  card.provenance = entry.provenance;
  card.scores = entry.scores;
  card.category = server.category;
  card.subcategory = server.subcategory;
  card.language = server.language;
  card.system = std::string(to_string(server.system));
  card.license = server.license;
  card.official = server.official;
  card.repo_url = server.repo_url;
  card.guidance = render_guidance(server);
  return card;
}

std::size_t expected_cards(const DraftInput& input) {
  return std::min(input.k, input.recommendation->list.entries.size());
}

bool same_scores(const CandidateScores& a, const CandidateScores& b) {
  return a.semantic == b.semantic && a.structural == b.structural && a.fused == b.fused && a.centroid == b.centroid;
}

CheckResult check_truth(const EvidenceCard& card, const McpRecord& server, const Candidate& candidate,
                        const RankedList& list) {
  const auto mismatch = [&](std::string_view field) {
    return fail("truthfulness", fmt::format("{}: {} does not match the corpus", card.id, field));
  };
  if (card.name != server.name) return mismatch("name");
  if (card.category != server.category) return mismatch("category");
  if (card.subcategory != server.subcategory) return mismatch("subcategory");
  if (card.language != server.language) return mismatch("language");
  if (card.system != to_string(server.system)) return mismatch("system");
  if (card.license != server.license) return mismatch("license");
  if (card.official != server.official) return mismatch("official");
  if (card.repo_url != server.repo_url) return mismatch("repo_url");
  if (card.guidance != render_guidance(server)) return mismatch("guidance");
  if (card.provenance != candidate.provenance) return mismatch("provenance");
  if (!same_scores(card.scores, candidate.scores)) return mismatch("scores");
  const std::string allowed = list.status == RerankStatus::kAccepted ? list.explanation : std::string();
  if (!card.explanation.empty() && card.explanation != allowed) return mismatch("explanation");
  for (const auto& note : card.matched) {
    bool grounded = false;
    if (note.field == "tools") {
      grounded = std::find(server.tools.begin(), server.tools.end(), note.value) != server.tools.end();
    } else if (note.field == "name") {
      grounded = note.value == server.name;
    } else if (note.field == "description") {
      grounded = note.value == server.description;
    }
    if (!grounded || !contains_token(note.value, note.term)) {
      return fail("truthfulness", fmt::format("{}: capability note '{}' is not in the record", card.id, note.term));
    }
  }
  return {};
}

}  // namespace

nlohmann::ordered_json EvidenceCard::to_json() const {
  nlohmann::ordered_json out;
  out["id"] = id;
  out["name"] = name;
  out["rank"] = rank;
  out["provenance"] = std::string(mcprec::to_string(provenance));
  out["scores"] = {{"semantic", scores.semantic}, {"structural", scores.structural}, {"fused", scores.fused}};
  nlohmann::ordered_json evidence;
  evidence["metadata"] = {{"category", category}, {"subcategory", subcategory}, {"language", language},
                          {"system", system},     {"license", license},         {"official", official}};
  evidence["repo_url"] = repo_url;
  evidence["matched_capabilities"] = nlohmann::ordered_json::array();
  for (const auto& note : matched) {
    evidence["matched_capabilities"].push_back({{"term", note.term}, {"field", note.field}, {"value", note.value}});
  }
  if (!explanation.empty()) evidence["explanation"] = explanation;
  evidence["guidance"] = guidance;
  out["evidence"] = std::move(evidence);
  return out;
}

std::string render_guidance(const McpRecord& server) {
  std::string out = server.repo_url.empty() ? fmt::format("Register {} as an MCP server.", server.name)
                                            : fmt::format("Register {} as an MCP server from {}.", server.name,
                                                          server.repo_url);
  if (!server.language.empty()) out += fmt::format(" Implementation language: {}.", server.language);
  if (server.system != System::kAny) out += fmt::format(" Target system: {}.", to_string(server.system));
  if (!server.license.empty()) out += fmt::format(" License: {}.", server.license);
  if (!server.tools.empty()) out += fmt::format(" Exposes {} tool(s).", server.tools.size());
  return out;
}

std::vector<CapabilityNote> match_capabilities(std::string_view task_text, const McpRecord& server, bool tools_only,
                                               std::size_t limit) {
  TokenizerConfig config;
  config.min_token_length = 3;
  std::vector<CapabilityNote> out;
  std::set<std::string> seen;
  for (const auto& term : tokenize(task_text, config)) {
    if (out.size() == limit) break;
    if (!seen.insert(term).second) continue;
    const auto tool = std::find_if(server.tools.begin(), server.tools.end(),
                                   [&](const std::string& t) { return contains_token(t, term); });
    if (tool != server.tools.end()) {
      out.push_back({term, "tools", *tool});
    } else if (!tools_only && contains_token(server.name, term)) {
      out.push_back({term, "name", server.name});
    } else if (!tools_only && contains_token(server.description, term)) {
      out.push_back({term, "description", server.description});
    }
  }
  return out;
}

ResponseDraft TemplateDraftGenerator::generate(const DraftInput& input, bool strict) const {
  ResponseDraft draft;
  const auto& list = input.recommendation->list;
  for (std::size_t i = 0; i < expected_cards(input); ++i) {
    const auto& entry = list.entries[i];
    const auto* server = input.corpus->find(entry.id);
    if (server == nullptr) continue;
    auto card = base_card(entry, *server);
    card.matched = match_capabilities(input.task_text, *server, strict);
    if (!strict && list.status == RerankStatus::kAccepted) card.explanation = list.explanation;
    draft.cards.push_back(std::move(card));
  }
  return draft;
}

ResponseDraft fallback_draft(const DraftInput& input) {
  ResponseDraft draft;
  const auto& list = input.recommendation->list;
  for (std::size_t i = 0; i < expected_cards(input); ++i) {
    const auto& entry = list.entries[i];
    if (const auto* server = input.corpus->find(entry.id)) draft.cards.push_back(base_card(entry, *server));
  }
  return draft;
}

CheckResult reliability_check(const ResponseDraft& draft, const DraftInput& input) {
  for (std::size_t i = 0; i < draft.cards.size(); ++i) {
    const auto& card = draft.cards[i];
    if (card.id.empty() || card.name.empty()) return fail("format", fmt::format("card {} lacks an id or name", i + 1));
    if (card.rank != i + 1) return fail("format", fmt::format("card {} has rank {}", i + 1, card.rank));
    if (!std::isfinite(card.scores.semantic) || !std::isfinite(card.scores.structural) ||
        !std::isfinite(card.scores.fused)) {
      return fail("format", fmt::format("card {} has a non-finite score", card.id));
    }
    for (const auto& note : card.matched) {
      if (note.term.empty() || note.field.empty() || note.value.empty()) {
        return fail("format", fmt::format("card {} has an incomplete capability note", card.id));
      }
    }
  }

  const auto& pool = input.recommendation->pool;
  if (draft.cards.size() != expected_cards(input)) {
    return fail("correctness", fmt::format("{} cards for K={}", draft.cards.size(), expected_cards(input)));
  }
  std::unordered_set<std::string_view> ids;
  for (const auto& card : draft.cards) {
    if (pool.find(card.id) == nullptr) return fail("correctness", fmt::format("{} is not in the candidate pool", card.id));
    if (!ids.insert(card.id).second) return fail("correctness", fmt::format("{} appears twice", card.id));
  }

  for (const auto& card : draft.cards) {
    const auto* server = input.corpus->find(card.id);
    if (server == nullptr) return fail("truthfulness", fmt::format("{} is not in the corpus", card.id));
    if (auto result = check_truth(card, *server, *pool.find(card.id), input.recommendation->list); !result.ok) {
      return result;
    }
  }
  return {};
}

std::string_view to_string(Reliability reliability) {
  switch (reliability) {
    case Reliability::kPass: return "pass";
    case Reliability::kRegenerated: return "regenerated";
    case Reliability::kFallback: return "fallback";
  }
  return "fallback";
}

CheckedDraft assemble_evidence(const DraftInput& input, const DraftGenerator& generator) {
  CheckedDraft out;
  for (bool strict : {false, true}) {
    try {
      out.draft = generator.generate(input, strict);
    } catch (const std::exception& e) {
      out.failures.push_back(fail("format", fmt::format("generator failed: {}", e.what())));
      continue;
    }
    auto result = reliability_check(out.draft, input);
    if (result.ok) {
      out.reliability = strict ? Reliability::kRegenerated : Reliability::kPass;
      return out;
    }
    spdlog::warn("evidence draft failed the {} check: {}", result.stage, result.detail);
    out.failures.push_back(std::move(result));
  }
  out.draft = fallback_draft(input);
  out.reliability = Reliability::kFallback;
  return out;
}

}  // namespace mcprec
