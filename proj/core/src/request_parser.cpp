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

#include "mcprec/request_parser.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <set>
#include <stdexcept>
#include <utility>

#include <fmt/format.h>

#include "mcprec/text.hpp"

namespace mcprec {
namespace {

constexpr std::array<std::pair<std::string_view, std::string_view>, 30> kLanguages{{
    {"python", "python"},         {"py", "python"},         {"javascript", "javascript"},
    {"js", "javascript"},         {"node", "javascript"},   {"nodejs", "javascript"},
    {"node.js", "javascript"},    {"typescript", "typescript"}, {"ts", "typescript"},
    {"java", "java"},             {"golang", "go"},         {"rust", "rust"},
    {"c++", "c++"},               {"cpp", "c++"},           {"c#", "c#"},
    {"csharp", "c#"},             {"ruby", "ruby"},         {"php", "php"},
    {"kotlin", "kotlin"},         {"swift", "swift"},       {"scala", "scala"},
    {"dart", "dart"},             {"elixir", "elixir"},     {"haskell", "haskell"},
    {"lua", "lua"},               {"perl", "perl"},         {"shell", "shell"},
    {"bash", "shell"},            {"powershell", "powershell"}, {"zig", "zig"},
}};

constexpr std::array<std::pair<std::string_view, System>, 15> kSystems{{
    {"linux", System::kLinux},    {"ubuntu", System::kLinux},   {"debian", System::kLinux},
    {"fedora", System::kLinux},   {"centos", System::kLinux},   {"windows", System::kWindows},
    {"win32", System::kWindows},  {"win64", System::kWindows},  {"ios", System::kIos},
    {"macos", System::kIos},      {"osx", System::kIos},        {"mac", System::kIos},
    {"iphone", System::kIos},     {"ipad", System::kIos},       {"apple", System::kIos},
}};

const std::set<std::string, std::less<>>& filler_words() {
  static const std::set<std::string, std::less<>> words{
      "a",      "actually", "also",   "an",      "and",     "any",     "be",     "but",    "can",
      "change", "could",    "do",     "for",     "i",       "in",      "instead", "is",    "it",
      "its",    "language", "let",    "lets",    "like",    "make",    "me",     "mcp",    "my",
      "need",   "now",      "of",     "on",      "only",    "or",      "os",     "platform", "please",
      "plus",   "prefer",   "rather", "run",     "running", "runs",    "server", "servers", "should",
      "so",     "switch",   "system", "that",    "the",     "then",    "this",   "to",     "tool",
      "tools",  "use",      "using",  "want",    "we",      "with",    "would",  "written", "go"};
  return words;
}

bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '#' || c == '.' ||
         static_cast<unsigned char>(c) >= 0x80;
}

// Whitespace/punctuation split that keeps "c++", "c#" and "node.js" whole.
std::vector<std::string> words(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  const auto flush = [&] {
    while (!current.empty() && current.back() == '.') current.pop_back();
    while (!current.empty() && current.front() == '.') current.erase(current.begin());
    if (!current.empty()) out.push_back(std::move(current));
    current.clear();
  };
  for (char c : text) {
    if (is_word_char(c)) {
      current += c;
    } else {
      flush();
    }
  }
  flush();
  return out;
}

// Lower-case, every run of non-alphanumerics collapsed to one space, padded.
std::string phrase_key(std::string_view text) {
  std::string out = " ";
  for (char c : fold_categorical(text)) {
    const bool keep = std::isalnum(static_cast<unsigned char>(c)) || static_cast<unsigned char>(c) >= 0x80;
    if (keep) {
      out += c;
    } else if (out.back() != ' ') {
      out += ' ';
    }
  }
  if (out.back() != ' ') out += ' ';
  return out;
}

// Longest phrase occurring in `haystack` on word boundaries.
std::optional<std::string> longest_phrase(const std::string& haystack, const std::vector<std::string>& phrases) {
  std::optional<std::string> best;
  std::size_t best_length = 0;
  for (const auto& phrase : phrases) {
    const auto key = phrase_key(phrase);
    if (key.size() < 5) continue;  // " ab " and shorter are too noisy
    if (key.size() > best_length && haystack.find(key) != std::string::npos) {
      best = phrase;
      best_length = key.size();
    }
  }
  return best;
}

std::optional<std::string> optional_string(const nlohmann::json& value, const char* key) {
  auto it = value.find(key);
  if (it == value.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw std::invalid_argument(fmt::format("{} must be a string", key));
  auto folded = fold_categorical(it->get<std::string>());
  if (folded.empty()) return std::nullopt;
  return folded;
}

std::optional<System> optional_system(const nlohmann::json& value) {
  auto text = optional_string(value, "system");
  if (!text) return std::nullopt;
  const System system = parse_system(*text);
  if (system == System::kAny) {
    throw std::invalid_argument(fmt::format("unknown system '{}' (expected linux, windows or ios)", *text));
  }
  return system;
}

}  // namespace

std::optional<std::string> match_language(std::string_view word) {
  if (word == "Go" || word == "GO") return "go";
  const auto lower = ascii_lower(word);
  for (const auto& [key, language] : kLanguages) {
    if (lower == key) return std::string(language);
  }
  return std::nullopt;
}

std::optional<System> match_system(std::string_view word) {
  const auto lower = ascii_lower(word);
  for (const auto& [key, system] : kSystems) {
    if (lower == key) return system;
  }
  return std::nullopt;
}

bool TaskConstraints::empty() const { return !language && !system && !theme && !category && !subcategory; }

void TaskConstraints::merge(const TaskConstraints& newer) {
  if (newer.language) language = newer.language;
  if (newer.system) system = newer.system;
  if (newer.theme) theme = newer.theme;
  if (newer.category) category = newer.category;
  if (newer.subcategory) subcategory = newer.subcategory;
}

nlohmann::ordered_json TaskConstraints::to_json() const {
  nlohmann::ordered_json out = nlohmann::ordered_json::object();
  const auto put = [&](const char* key, const std::optional<std::string>& value) {
    out[key] = value ? nlohmann::ordered_json(*value) : nlohmann::ordered_json(nullptr);
  };
  put("language", language);
  out["system"] = system ? nlohmann::ordered_json(std::string(mcprec::to_string(*system)))
                         : nlohmann::ordered_json(nullptr);
  put("theme", theme);
  put("category", category);
  put("subcategory", subcategory);
  return out;
}

TaskConstraints TaskConstraints::from_json(const nlohmann::json& value) {
  if (!value.is_object()) throw std::invalid_argument("constraints must be an object");
  TaskConstraints out;
  out.language = optional_string(value, "language");
  out.system = optional_system(value);
  out.theme = optional_string(value, "theme");
  out.category = optional_string(value, "category");
  out.subcategory = optional_string(value, "subcategory");
  return out;
}

TaskAttributes StructuredTaskSpec::attributes() const {
  TaskAttributes a;
  a.language = constraints.language.value_or("");
  a.category = constraints.category.value_or("");
  a.subcategory = constraints.subcategory.value_or("");
  a.theme = constraints.theme.value_or("");
  a.system = constraints.system;
  return a;
}

std::string StructuredTaskSpec::query_text() const {
  const std::vector<std::string> parts{intent, constraints.language.value_or(""), constraints.category.value_or(""),
                                       constraints.theme.value_or("")};
  return join_nonempty(parts);
}

nlohmann::ordered_json StructuredTaskSpec::to_json() const {
  nlohmann::ordered_json out;
  out["intent"] = intent;
  out["constraints"] = constraints.to_json();
  out["complete"] = complete();
  out["clarifications"] = clarifications;
  return out;
}

StructuredTaskSpec StructuredTaskSpec::from_json(const nlohmann::json& value) {
  StructuredTaskSpec spec;
  spec.intent = value.at("intent").get<std::string>();
  spec.constraints = TaskConstraints::from_json(value.at("constraints"));
  if (auto it = value.find("clarifications"); it != value.end()) {
    spec.clarifications = it->get<std::vector<std::string>>();
  }
  return spec;
}

ConstraintOverrides ConstraintOverrides::from_json(const nlohmann::json& value) {
  if (!value.is_object()) throw std::invalid_argument("overrides must be an object");
  ConstraintOverrides out;
  out.set = TaskConstraints::from_json(value);
  if (auto it = value.find("clear"); it != value.end() && !it->is_null()) {
    if (!it->is_boolean()) throw std::invalid_argument("clear must be a boolean");
    out.clear = it->get<bool>();
  }
  return out;
}

void apply(StructuredTaskSpec& spec, const ConstraintOverrides& overrides) {
  if (overrides.clear) spec.constraints = {};
  spec.constraints.merge(overrides.set);
}

RuleBasedParser::RuleBasedParser(ParserContext context) : context_(std::move(context)) {}

TaskConstraints RuleBasedParser::extract(std::string_view text) const {
  TaskConstraints out;
  for (const auto& word : words(text)) {
    if (auto language = match_language(word)) out.language = std::move(language);
    if (auto system = match_system(word)) out.system = system;
  }
  const auto haystack = phrase_key(text);
  if (context_.taxonomy != nullptr) {
    const auto& taxonomy = *context_.taxonomy;
    std::vector<std::string> subcategory_names;
    for (NodeId node : taxonomy.subcategories()) subcategory_names.push_back(taxonomy.name(node));
    if (auto sub = longest_phrase(haystack, subcategory_names)) {
      for (NodeId node : taxonomy.subcategories()) {
        if (taxonomy.name(node) != *sub) continue;
        out.subcategory = sub;
        out.category = taxonomy.name(*taxonomy.parent(node));
        break;
      }
    }
    if (!out.category) {
      std::vector<std::string> category_names;
      for (NodeId node : taxonomy.children(taxonomy.root())) category_names.push_back(taxonomy.name(node));
      out.category = longest_phrase(haystack, category_names);
    }
  }
  out.theme = longest_phrase(haystack, context_.themes);
  return out;
}

StructuredTaskSpec RuleBasedParser::parse(std::string_view text, const StructuredTaskSpec* previous) const {
  StructuredTaskSpec spec;
  const auto extracted = extract(text);
  const auto normalized = normalize_text(text);

  std::set<std::string> constraint_tokens;
  for (const auto& value : {extracted.theme, extracted.category, extracted.subcategory}) {
    if (!value) continue;
    for (auto& token : tokenize(*value)) constraint_tokens.insert(std::move(token));
  }
  bool has_content = false;
  for (const auto& word : words(normalized)) {
    if (match_language(word) || match_system(word)) continue;
    for (const auto& token : tokenize(word)) {
      if (!filler_words().count(token) && !constraint_tokens.count(token)) has_content = true;
    }
  }

  if (previous != nullptr) {
    spec.constraints = previous->constraints;
    const auto first = words(normalized);
    const bool additive = !first.empty() && (ascii_lower(first.front()) == "also" || ascii_lower(first.front()) == "plus");
    if (!has_content) {
      spec.intent = previous->intent;
    } else if (additive && !previous->intent.empty()) {
      spec.intent = previous->intent + " " + normalized;
    } else {
      spec.intent = normalized;
    }
  } else {
    spec.intent = normalized;
  }
  spec.constraints.merge(extracted);

  bool usable = !trim(spec.intent).empty();
  if (usable && context_.vocabulary != nullptr) usable = !vectorize(spec.intent, *context_.vocabulary).is_zero();
  if (usable && previous == nullptr && !has_content) usable = false;
  if (!usable) {
    spec.clarifications.push_back(
        "What should the MCP server help you do? Describe the development task in a sentence.");
  }
  return spec;
}

}  // namespace mcprec
