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

#include "mcprec/rerank.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "mcprec/lexical.hpp"
#include "mcprec/text.hpp"

namespace mcprec {
namespace {

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string_view or_dash(const std::string& value) { return value.empty() ? std::string_view("-") : value; }

std::string card_text(const CandidateCard& card) {
  return fmt::format("{} {} {} {} {} {}", card.name, card.description, join(card.tools, " "), card.category,
                     card.subcategory, card.language);
}

RerankResult fallback(std::span<const std::string> pre_order, std::size_t k, std::string reason) {
  RerankResult result;
  result.status = RerankStatus::kFallback;
  result.reason = std::move(reason);
  const std::size_t n = std::min(k, pre_order.size());
  result.ids.assign(pre_order.begin(), pre_order.begin() + static_cast<std::ptrdiff_t>(n));
  return result;
}

std::string strip_fence(std::string_view raw) {
  std::string text = trim(raw);
  if (text.rfind("```", 0) != 0) return text;
  const auto newline = text.find('\n');
  if (newline == std::string::npos) return text;
  text.erase(0, newline + 1);
  const auto close = text.rfind("```");
  if (close != std::string::npos) text.erase(close);
  return trim(text);
}

}  // namespace

std::string CandidateCard::metadata() const {
  return fmt::format("category={}/{}; language={}; system={}; license={}; official={}", or_dash(category),
                     or_dash(subcategory), or_dash(language), or_dash(system), or_dash(license),
                     official ? "yes" : "no");
}

CandidateCard make_card(const McpRecord& server) {
  CandidateCard card;
  card.id = server.id;
  card.name = server.name;
  card.description = server.description;
  card.tools = server.tools;
  card.category = server.category;
  card.subcategory = server.subcategory;
  card.language = server.language;
  card.system = std::string(to_string(server.system));
  card.license = server.license;
  card.official = server.official;
  return card;
}

void RerankRequest::validate() const {
  if (k == 0 || k > cards.size()) {
    throw std::invalid_argument(fmt::format("rerank needs 1 <= k <= {} (got {})", cards.size(), k));
  }
  if (pre_order.size() != cards.size()) throw std::invalid_argument("pre_order must cover the whole pool");
  std::unordered_set<std::string_view> ids;
  for (const auto& card : cards) {
    if (!ids.insert(card.id).second) throw std::invalid_argument("duplicate card id " + card.id);
  }
  std::unordered_set<std::string_view> seen;
  for (const auto& id : pre_order) {
    if (!ids.count(id) || !seen.insert(id).second) {
      throw std::invalid_argument("pre_order is not a permutation of the pool");
    }
  }
}

std::string_view to_string(RerankStatus status) {
  return status == RerankStatus::kAccepted ? "accepted" : "fallback";
}

std::string build_prompt(const RerankRequest& request) {
  std::string out;
  out += "## Role\n";
  out += "You re-rank a fixed pool of MCP server candidates for one software development task. "
         "Order the candidates by how well they suit the task and pick identifiers only from the pool.\n\n";
  out += "## Task Data\n";
  out += fmt::format("ID: {}\nName: {}\nDescription: {}\nAttributes: {}\n\n", request.task_id,
                     or_dash(request.task_name), request.task_text, or_dash(request.constraints));
  out += "## Ranking Criteria\n";
  out += "Favor candidates that:\n"
         "- cover the capabilities the task asks for;\n"
         "- respect the stated language, platform and category constraints;\n"
         "- slot into the workflow the task describes;\n"
         "- work well alongside the other selected candidates;\n"
         "- are specific rather than generic or redundant.\n\n";
  out += fmt::format("## Candidate Cards ({})\n", request.cards.size());
  for (const auto& card : request.cards) {
    out += fmt::format("ID: {}\nName: {}\nDescription: {}\nTools: {}\nMetadata: {}\n\n", card.id, card.name,
                       or_dash(card.description), card.tools.empty() ? "-" : join(card.tools, ", "),
                       card.metadata());
  }
  out += "## Rules\n";
  out += fmt::format("- Return exactly {} MCP server identifiers in ranked order.\n", request.k);
  out += "- Use only identifiers that appear in the candidate cards above.\n";
  out += "- Copy every identifier verbatim.\n";
  out += "- List each identifier at most once.\n";
  out += fmt::format("- At most {} of the returned identifiers may come from outside the current top {}: {}.\n",
                     kMaxSubstitutions, request.k,
                     join(std::vector<std::string>(request.pre_order.begin(),
                                                   request.pre_order.begin() +
                                                       static_cast<std::ptrdiff_t>(std::min(request.k,
                                                                                            request.pre_order.size()))),
                          ", "));
  out += "- Reply with the JSON object below and nothing else.\n\n";
  out += "## Output schema\n";
  out += fmt::format("{{\"Task\": \"{}\", \"MCP_servers\": [\"<id 1>\", ..., \"<id {}>\"], "
                     "\"Explanation\": \"<one short paragraph>\"}}\n",
                     request.task_id, request.k);
  return out;
}

RerankResult validate(std::string_view raw, std::span<const std::string> pool,
                      std::span<const std::string> pre_order, std::size_t k) {
  const auto parsed = nlohmann::json::parse(strip_fence(raw), nullptr, false);
  if (parsed.is_discarded() || !parsed.is_object()) return fallback(pre_order, k, "format");
  auto servers = parsed.find("MCP_servers");
  if (servers == parsed.end() || !servers->is_array()) return fallback(pre_order, k, "format");
  std::vector<std::string> ids;
  for (const auto& item : *servers) {
    if (!item.is_string()) return fallback(pre_order, k, "format");
    ids.push_back(item.get<std::string>());
  }
  std::string explanation;
  if (auto it = parsed.find("Explanation"); it != parsed.end()) {
    if (!it->is_string()) return fallback(pre_order, k, "format");
    explanation = it->get<std::string>();
  } else {
    spdlog::warn("re-ranker reply has no explanation");
  }

  if (ids.size() != k) return fallback(pre_order, k, "length");

  const std::unordered_set<std::string_view> members(pool.begin(), pool.end());
  std::unordered_map<std::string, std::string_view> folded;
  for (const auto& id : pool) folded.emplace(ascii_lower(trim(id)), id);
  for (const auto& id : ids) {
    if (members.count(id)) continue;
    return fallback(pre_order, k, folded.count(ascii_lower(trim(id))) ? "fidelity" : "membership");
  }

  std::unordered_set<std::string_view> seen;
  for (const auto& id : ids) {
    if (!seen.insert(id).second) return fallback(pre_order, k, "duplicate");
  }

  const std::size_t top = std::min(k, pre_order.size());
  const std::unordered_set<std::string_view> top_k(pre_order.begin(),
                                                   pre_order.begin() + static_cast<std::ptrdiff_t>(top));
  const auto substituted =
      std::count_if(ids.begin(), ids.end(), [&](const std::string& id) { return !top_k.count(id); });
  if (static_cast<std::size_t>(substituted) > kMaxSubstitutions) return fallback(pre_order, k, "substitution");

  RerankResult result;
  result.ids = std::move(ids);
  result.explanation = std::move(explanation);
  return result;
}

std::vector<std::string> builtin_heuristic_rerank(const RerankRequest& request) {
  TokenizerConfig tokenizer;
  const auto task_tokens = tokenize(request.task_text, tokenizer);
  const std::set<std::string> wanted(task_tokens.begin(), task_tokens.end());
  std::unordered_map<std::string_view, std::size_t> overlap;
  for (const auto& card : request.cards) {
    const auto tokens = tokenize(card_text(card), tokenizer);
    const std::set<std::string> have(tokens.begin(), tokens.end());
    overlap[card.id] = static_cast<std::size_t>(
        std::count_if(wanted.begin(), wanted.end(), [&](const std::string& t) { return have.count(t) > 0; }));
  }

  std::vector<std::size_t> order(request.pre_order.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return overlap[request.pre_order[a]] > overlap[request.pre_order[b]];
  });

  const std::size_t k = std::min(request.k, request.pre_order.size());
  std::vector<std::string> picked;
  std::size_t outside = 0;
  for (std::size_t position : order) {
    if (picked.size() == k) break;
    const bool in_top = position < k;
    if (!in_top) {
      if (outside == kMaxSubstitutions) continue;
      ++outside;
    }
    picked.push_back(request.pre_order[position]);
  }
  return picked;
}

BackendReply BuiltinHeuristicBackend::complete(const RerankRequest& request, const std::string&,
                                               const CallOptions&) const {
  nlohmann::ordered_json reply;
  reply["Task"] = request.task_id;
  reply["MCP_servers"] = builtin_heuristic_rerank(request);
  reply["Explanation"] = "Ordered by the number of task terms each candidate card mentions.";
  return {true, reply.dump(), {}};
}

RerankResult rerank(const RerankRequest& request, const RerankBackend* backend, const CallOptions& options) {
  request.validate();
  std::vector<std::string> pool;
  pool.reserve(request.cards.size());
  for (const auto& card : request.cards) pool.push_back(card.id);

  if (backend == nullptr) {
    RerankResult result;
    result.ids.assign(request.pre_order.begin(), request.pre_order.begin() + static_cast<std::ptrdiff_t>(request.k));
    return result;
  }
  BackendReply reply;
  try {
    reply = backend->complete(request, build_prompt(request), options);
  } catch (const std::exception& e) {
    reply = {false, {}, e.what()};
  }
  if (!reply.ok) {
    spdlog::warn("re-ranker backend {} failed: {}", backend->name(), reply.error);
    return fallback(request.pre_order, request.k, "backend");
  }
  auto result = validate(reply.text, pool, request.pre_order, request.k);
  if (result.status == RerankStatus::kFallback) {
    spdlog::warn("re-ranker output rejected ({}); using the fused order", result.reason);
  }
  return result;
}

}  // namespace mcprec
