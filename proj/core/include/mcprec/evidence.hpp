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
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mcprec/corpus.hpp"
#include "mcprec/recommender.hpp"

namespace mcprec {

// A task term found in one of the server's text fields.
struct CapabilityNote {
  std::string term;
  std::string field;  // "tools", "name" or "description"
  std::string value;  // the tool name or the field text it was found in
  friend bool operator==(const CapabilityNote&, const CapabilityNote&) = default;
};

struct EvidenceCard {
  std::string id;
  std::string name;
  std::size_t rank = 0;
  Provenance provenance = Provenance::kAnchor;
  CandidateScores scores;
  std::string category;
  std::string subcategory;
  std::string language;
  std::string system;
  std::string license;
  bool official = false;
  std::string repo_url;
  std::vector<CapabilityNote> matched;
  std::string explanation;  // re-ranker text when its list was accepted
  std::string guidance;

  nlohmann::ordered_json to_json() const;
};

struct ResponseDraft {
  std::vector<EvidenceCard> cards;
};

// Everything a draft may draw from.
struct DraftInput {
  const ServerCorpus* corpus = nullptr;
  const Recommendation* recommendation = nullptr;
  std::string task_text;
  std::size_t k = 5;  // cards expected, capped by the ranked list
};

class DraftGenerator {
 public:
  virtual ~DraftGenerator() = default;
  // `strict` is set on the single regeneration after a failed check.
  virtual ResponseDraft generate(const DraftInput& input, bool strict) const = 0;
};

// Fills every card from corpus fields and engine scores. Strict mode keeps
// only tool-name matches.
class TemplateDraftGenerator final : public DraftGenerator {
 public:
  ResponseDraft generate(const DraftInput& input, bool strict) const override;
};

std::string render_guidance(const McpRecord& server);
std::vector<CapabilityNote> match_capabilities(std::string_view task_text, const McpRecord& server,
                                               bool tools_only = false, std::size_t limit = 5);

// Metadata, scores and guidance only; no notes, no explanation.
ResponseDraft fallback_draft(const DraftInput& input);

struct CheckResult {
  bool ok = true;
  std::string stage;  // "format", "correctness" or "truthfulness" on failure
  std::string detail;
};

// Format, then correctness (ids in the pool, unique, exactly
// min(k, |ranked list|) cards), then truthfulness (every field equals the
// corpus record or the engine's score for that id).
CheckResult reliability_check(const ResponseDraft& draft, const DraftInput& input);

enum class Reliability { kPass, kRegenerated, kFallback };
std::string_view to_string(Reliability reliability);

struct CheckedDraft {
  ResponseDraft draft;
  Reliability reliability = Reliability::kPass;
  std::vector<CheckResult> failures;
};

// Generate, check, regenerate once in strict mode, then fall back.
CheckedDraft assemble_evidence(const DraftInput& input, const DraftGenerator& generator);

}  // namespace mcprec
