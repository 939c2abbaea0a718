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

#include <chrono>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mcprec/corpus.hpp"

namespace mcprec {

struct CandidateCard {
  std::string id;
  std::string name;
  std::string description;
  std::vector<std::string> tools;
  std::string category;
  std::string subcategory;
  std::string language;
  std::string system;
  std::string license;
  bool official = false;

  // One-line metadata summary, e.g. "category=a/b; language=python; ...".
  std::string metadata() const;
};

CandidateCard make_card(const McpRecord& server);

struct RerankRequest {
  std::string task_id;
  std::string task_name;
  std::string task_text;
  std::string constraints;             // summary of the task's structured attributes
  std::vector<CandidateCard> cards;    // candidate pool order
  std::vector<std::string> pre_order;  // the same ids, fused-score order
  std::size_t k = 10;

  // Throws std::invalid_argument unless pre_order is a permutation of the
  // card ids and 1 <= k <= |cards|.
  void validate() const;
};

enum class RerankStatus { kAccepted, kFallback };
std::string_view to_string(RerankStatus status);

struct RerankResult {
  std::vector<std::string> ids;
  std::string explanation;
  RerankStatus status = RerankStatus::kAccepted;
  // Why the output was rejected: format, length, membership, fidelity,
  // duplicate, substitution, or backend. Empty when accepted.
  std::string reason;
};

inline constexpr std::size_t kMaxSubstitutions = 2;

std::string build_prompt(const RerankRequest& request);

// Parses a raw re-ranker reply ({"Task", "MCP_servers", "Explanation"},
// optionally inside a ```json fence) and enforces length, membership,
// identifier fidelity, uniqueness and the substitution budget against the
// top-k of `pre_order`. Any violation yields a fallback to the pre_order
// prefix; never throws.
RerankResult validate(std::string_view raw, std::span<const std::string> pool,
                      std::span<const std::string> pre_order, std::size_t k);

struct CallOptions {
  std::chrono::milliseconds timeout{30000};
  double temperature = 0.0;  // deterministic decoding
};

struct BackendReply {
  bool ok = false;
  std::string text;
  std::string error;
};

// Text-in/text-out re-ranking backend. Implementations must tolerate
// concurrent calls.
class RerankBackend {
 public:
  virtual ~RerankBackend() = default;
  virtual std::string_view name() const = 0;
  virtual BackendReply complete(const RerankRequest& request, const std::string& prompt,
                                const CallOptions& options) const = 0;
};

// Orders the pool by the number of distinct task tokens found on each card,
// ties by pre-order, and takes the top k while drawing at most
// kMaxSubstitutions items from outside the pre-order top k.
std::vector<std::string> builtin_heuristic_rerank(const RerankRequest& request);

// Offline backend replying with the heuristic ranking as a JSON object.
class BuiltinHeuristicBackend final : public RerankBackend {
 public:
  std::string_view name() const override { return "builtin"; }
  BackendReply complete(const RerankRequest& request, const std::string& prompt,
                        const CallOptions& options) const override;
};

// One backend call (none when `backend` is null, which returns the pre-order
// prefix as accepted), then validation. Transport failures and exceptions
// from the backend become a fallback.
RerankResult rerank(const RerankRequest& request, const RerankBackend* backend, const CallOptions& options = {});

}  // namespace mcprec
