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

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mcprec/corpus.hpp"
#include "mcprec/lexical.hpp"
#include "mcprec/structural.hpp"
#include "mcprec/taxonomy.hpp"

namespace mcprec {

struct TaskConstraints {
  std::optional<std::string> language;  // folded, e.g. "python"
  std::optional<System> system;
  std::optional<std::string> theme;
  std::optional<std::string> category;
  std::optional<std::string> subcategory;

  bool empty() const;
  // Values from `newer` replace ours field by field.
  void merge(const TaskConstraints& newer);
  nlohmann::ordered_json to_json() const;
  static TaskConstraints from_json(const nlohmann::json& value);
  friend bool operator==(const TaskConstraints&, const TaskConstraints&) = default;
};

struct StructuredTaskSpec {
  std::string intent;
  TaskConstraints constraints;
  std::vector<std::string> clarifications;  // non-empty: not recommendable yet

  bool complete() const { return clarifications.empty(); }
  TaskAttributes attributes() const;
  // Intent plus constraint values, laid out like a task record's text.
  std::string query_text() const;
  nlohmann::ordered_json to_json() const;
  static StructuredTaskSpec from_json(const nlohmann::json& value);
};

// Explicit constraint edits sent next to the free text. `clear` drops all
// accumulated constraints before the other fields apply.
struct ConstraintOverrides {
  TaskConstraints set;
  bool clear = false;

  // Throws std::invalid_argument on wrong types or an unknown system.
  static ConstraintOverrides from_json(const nlohmann::json& value);
};

void apply(StructuredTaskSpec& spec, const ConstraintOverrides& overrides);

// What the parser may match constraint phrases against. All optional.
struct ParserContext {
  const Vocabulary* vocabulary = nullptr;  // intent must hit it to be usable
  const Taxonomy* taxonomy = nullptr;      // category / subcategory names
  std::vector<std::string> themes;         // folded theme names
};

class RequestParser {
 public:
  virtual ~RequestParser() = default;
  // `previous` is the session's current spec, or null on the first turn.
  virtual StructuredTaskSpec parse(std::string_view text, const StructuredTaskSpec* previous) const = 0;
};

// Keyword and phrase rules. A follow-up with no content words of its own
// ("actually make it Go") keeps the previous intent and refines constraints.
class RuleBasedParser final : public RequestParser {
 public:
  explicit RuleBasedParser(ParserContext context = {});
  StructuredTaskSpec parse(std::string_view text, const StructuredTaskSpec* previous) const override;

  // Constraint extraction alone.
  TaskConstraints extract(std::string_view text) const;

 private:
  ParserContext context_;
};

// Language keyword -> folded language name, or nullopt. Case matters only
// for "Go", which must be capitalized unless written "golang".
std::optional<std::string> match_language(std::string_view word);
std::optional<System> match_system(std::string_view word);

}  // namespace mcprec
