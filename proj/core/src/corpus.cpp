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

#include "mcprec/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "mcprec/error.hpp"
#include "mcprec/random.hpp"
#include "mcprec/taxonomy.hpp"
#include "mcprec/text.hpp"

namespace mcprec {
namespace {

using nlohmann::json;

std::string string_field(const json& line, const char* key) {
  auto it = line.find(key);
  if (it == line.end() || it->is_null()) return {};
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer() || it->is_number_unsigned()) return it->dump();
  if (it->is_number() || it->is_boolean()) return it->dump();
  throw DataError(fmt::format("field '{}' must be a string", key));
}

bool bool_field(const json& line, const char* key) {
  auto it = line.find(key);
  if (it == line.end() || it->is_null()) return false;
  if (it->is_boolean()) return it->get<bool>();
  if (it->is_number()) return it->get<double>() != 0.0;
  if (it->is_string()) {
    const std::string value = fold_categorical(it->get<std::string>());
    return value == "true" || value == "yes" || value == "1" || value == "official";
  }
  throw DataError(fmt::format("field '{}' must be a boolean", key));
}

std::vector<std::string> list_field(const json& line, const char* key) {
  std::vector<std::string> out;
  auto it = line.find(key);
  if (it == line.end() || it->is_null()) return out;
  auto push = [&out](std::string_view raw) {
    std::string value = normalize_text(raw);
    if (!value.empty()) out.push_back(std::move(value));
  };
  if (it->is_string()) {
    std::stringstream stream(it->get<std::string>());
    std::string item;
    while (std::getline(stream, item, ',')) push(item);
    return out;
  }
  if (!it->is_array()) throw DataError(fmt::format("field '{}' must be a list", key));
  for (const auto& item : *it) {
    if (!item.is_string()) throw DataError(fmt::format("entries of '{}' must be strings", key));
    push(item.get<std::string>());
  }
  return out;
}

template <class Parse>
auto read_lines(const std::filesystem::path& path, Parse parse) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<decltype(parse(json{}))> out;
  std::string text;
  std::size_t line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    if (trim(text).empty()) continue;
    try {
      json line = json::parse(text);
      if (!line.is_object()) throw DataError("expected a JSON object");
      out.push_back(parse(line));
    } catch (const json::exception& e) {
      throw DataError(fmt::format("{}:{}: parse error: {}", path.string(), line_no, e.what()));
    } catch (const DataError& e) {
      throw DataError(fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    }
  }
  return out;
}

std::string list_offenders(const std::vector<std::string>& offenders) {
  constexpr std::size_t kShown = 20;
  std::string out;
  for (std::size_t i = 0; i < offenders.size() && i < kShown; ++i) {
    if (i) out += ", ";
    out += offenders[i];
  }
  if (offenders.size() > kShown) out += fmt::format(" (+{} more)", offenders.size() - kShown);
  return out;
}

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& line : lines) out << line << '\n';
}

}  // namespace

std::string_view to_string(System system) {
  switch (system) {
    case System::kWindows: return "windows";
    case System::kIos: return "ios";
    case System::kLinux: return "linux";
    case System::kAny: return "any";
  }
  return "any";
}

System parse_system(std::string_view value) {
  const std::string folded = fold_categorical(value);
  if (folded == "windows") return System::kWindows;
  if (folded == "ios") return System::kIos;
  if (folded == "linux") return System::kLinux;
  return System::kAny;
}

template <class Record>
RecordTable<Record>::RecordTable(std::vector<Record> records) : records_(std::move(records)) {
  by_id_.reserve(records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) {
    if (records_[i].id.empty()) throw DataError(fmt::format("record #{} has an empty id", i + 1));
    if (!by_id_.emplace(records_[i].id, i).second) {
      throw DataError("duplicate id '" + records_[i].id + "'");
    }
  }
}

template <class Record>
const Record* RecordTable<Record>::find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  return it == by_id_.end() ? nullptr : &records_[it->second];
}

template <class Record>
std::optional<std::size_t> RecordTable<Record>::position(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

template class RecordTable<McpRecord>;
template class RecordTable<TaskRecord>;

McpRecord server_from_json(const json& line) {
  McpRecord r;
  r.id = normalize_text(string_field(line, "id"));
  r.name = normalize_text(string_field(line, "name"));
  r.description = normalize_text(string_field(line, "description"));
  r.tools = list_field(line, "tools");
  r.category = fold_categorical(string_field(line, "category"));
  r.subcategory = fold_categorical(string_field(line, "subcategory"));
  r.language = fold_categorical(string_field(line, "language"));
  r.system = parse_system(string_field(line, "system"));
  r.license = normalize_text(string_field(line, "license"));
  r.official = bool_field(line, "official");
  r.repo_url = normalize_text(string_field(line, "repo_url"));
  if (r.id.empty()) throw DataError("server record without id");
  return r;
}

TaskRecord task_from_json(const json& line) {
  TaskRecord r;
  r.id = normalize_text(string_field(line, "id"));
  r.name = normalize_text(string_field(line, "name"));
  r.description = normalize_text(string_field(line, "description"));
  r.language = fold_categorical(string_field(line, "language"));
  r.category = fold_categorical(string_field(line, "category"));
  r.subcategory = fold_categorical(string_field(line, "subcategory"));
  r.theme = fold_categorical(string_field(line, "theme"));
  if (r.id.empty()) throw DataError("task record without id");
  if (r.description.empty()) throw DataError("task '" + r.id + "' has an empty description");
  return r;
}

nlohmann::ordered_json to_json(const McpRecord& s) {
  return {{"id", s.id},
          {"name", s.name},
          {"description", s.description},
          {"tools", s.tools},
          {"category", s.category},
          {"subcategory", s.subcategory},
          {"language", s.language},
          {"system", std::string(to_string(s.system))},
          {"license", s.license},
          {"official", s.official},
          {"repo_url", s.repo_url}};
}

nlohmann::ordered_json to_json(const TaskRecord& t) {
  return {{"id", t.id},
          {"name", t.name},
          {"description", t.description},
          {"language", t.language},
          {"category", t.category},
          {"subcategory", t.subcategory},
          {"theme", t.theme}};
}

std::vector<McpRecord> read_servers(const std::filesystem::path& path) {
  return read_lines(path, [](const json& line) { return server_from_json(line); });
}

std::vector<TaskRecord> read_tasks(const std::filesystem::path& path) {
  return read_lines(path, [](const json& line) { return task_from_json(line); });
}

InteractionSet read_interactions(const std::filesystem::path& path) {
  using Entry = std::pair<std::string, std::vector<std::string>>;
  auto entries = read_lines(path, [](const json& line) -> Entry {
    std::string task_id = normalize_text(string_field(line, "task_id"));
    if (task_id.empty()) throw DataError("interaction record without task_id");
    std::vector<std::string> ids;
    auto it = line.find("mcp_ids");
    if (it == line.end() || !it->is_array()) throw DataError("interaction record needs an mcp_ids list");
    for (const auto& id : *it) {
      if (id.is_string()) {
        ids.push_back(normalize_text(id.get<std::string>()));
      } else if (id.is_number_integer() || id.is_number_unsigned()) {
        ids.push_back(id.dump());
      } else {
        throw DataError("mcp_ids entries must be strings or integers");
      }
    }
    return {std::move(task_id), std::move(ids)};
  });
  InteractionSet out;
  for (auto& [task_id, ids] : entries) {
    if (!out.emplace(task_id, std::move(ids)).second) {
      throw DataError(path.string() + ": duplicate interaction record for task '" + task_id + "'");
    }
  }
  return out;
}

std::string canonical_repo_url(std::string_view url) {
  std::string key = ascii_lower(trim(url));
  while (!key.empty() && key.back() == '/') key.pop_back();
  if (key.size() >= 4 && key.compare(key.size() - 4, 4, ".git") == 0) key.resize(key.size() - 4);
  return key;
}

Dataset make_dataset(std::vector<McpRecord> servers, std::vector<TaskRecord> tasks,
                     InteractionSet interactions, const Taxonomy* taxonomy) {
  Dataset dataset;
  try {
    dataset.servers = ServerCorpus(std::move(servers));
  } catch (const DataError& e) {
    throw DataError(std::string("server corpus: ") + e.what());
  }
  try {
    dataset.tasks = TaskCorpus(std::move(tasks));
  } catch (const DataError& e) {
    throw DataError(std::string("task corpus: ") + e.what());
  }

  std::map<std::string, std::string> seen_urls;
  std::vector<std::string> duplicate_urls;
  for (const auto& server : dataset.servers) {
    if (server.repo_url.empty()) continue;
    auto [it, inserted] = seen_urls.emplace(canonical_repo_url(server.repo_url), server.id);
    if (!inserted) {
      duplicate_urls.push_back(fmt::format("{} (servers {} and {})", it->first, it->second, server.id));
    }
  }
  if (!duplicate_urls.empty()) {
    throw DataError("duplicate repo_url: " + list_offenders(duplicate_urls));
  }

  std::vector<std::string> dangling;
  std::vector<std::string> malformed;
  for (const auto& [task_id, ids] : interactions) {
    if (!dataset.tasks.find(task_id)) dangling.push_back("task " + task_id);
    if (ids.empty()) malformed.push_back("task " + task_id + " has no positives");
    std::set<std::string_view> unique;
    for (const auto& id : ids) {
      if (!dataset.servers.find(id)) dangling.push_back("server " + id + " (task " + task_id + ")");
      if (!unique.insert(id).second) malformed.push_back("task " + task_id + " lists " + id + " twice");
    }
  }
  if (!dangling.empty()) throw DataError("interactions reference unknown ids: " + list_offenders(dangling));
  if (!malformed.empty()) throw DataError("invalid interaction lists: " + list_offenders(malformed));
  dataset.interactions = std::move(interactions);

  if (taxonomy != nullptr) {
    std::vector<std::string> unresolved;
    for (const auto& s : dataset.servers) {
      if (!taxonomy->find(s.category, s.subcategory)) {
        unresolved.push_back(fmt::format("server {} ({}/{})", s.id, s.category, s.subcategory));
      }
    }
    for (const auto& t : dataset.tasks) {
      if (!taxonomy->find(t.category, t.subcategory)) {
        unresolved.push_back(fmt::format("task {} ({}/{})", t.id, t.category, t.subcategory));
      }
    }
    if (!unresolved.empty()) {
      throw DataError("categories not found in taxonomy: " + list_offenders(unresolved));
    }
  }
  return dataset;
}

Dataset load_corpus(const std::filesystem::path& mcp_path, const std::filesystem::path& task_path,
                    const std::filesystem::path& interactions_path, const Taxonomy* taxonomy) {
  auto servers = read_servers(mcp_path);
  auto tasks = read_tasks(task_path);
  auto interactions = read_interactions(interactions_path);
  return make_dataset(std::move(servers), std::move(tasks), std::move(interactions), taxonomy);
}

void save_corpus(const Dataset& dataset, const std::filesystem::path& mcp_path,
                 const std::filesystem::path& task_path,
                 const std::filesystem::path& interactions_path) {
  std::vector<std::string> lines;
  for (const auto& s : dataset.servers) lines.push_back(to_json(s).dump());
  write_lines(mcp_path, lines);
  lines.clear();
  for (const auto& t : dataset.tasks) lines.push_back(to_json(t).dump());
  write_lines(task_path, lines);
  lines.clear();
  for (const auto& [task_id, ids] : dataset.interactions) {
    nlohmann::ordered_json line = {{"task_id", task_id}, {"mcp_ids", ids}};
    lines.push_back(line.dump());
  }
  write_lines(interactions_path, lines);
}

std::string concat_text(const TaskRecord& task) {
  const std::string parts[] = {task.name, task.description, task.language, task.category,
                               task.theme};
  return join_nonempty(parts);
}

std::string concat_text(const McpRecord& server) {
  const std::string tools = join_nonempty(server.tools);
  const std::string parts[] = {server.name,
                               server.description,
                               server.language,
                               server.system == System::kAny ? std::string() : std::string(to_string(server.system)),
                               tools,
                               server.category,
                               server.subcategory};
  return join_nonempty(parts);
}

DatasetSplit split_dataset(std::vector<std::string> task_ids, std::uint64_t seed) {
  constexpr std::size_t kMinTasks = 5;
  if (task_ids.size() < kMinTasks) {
    throw ConfigError(fmt::format("split needs at least {} labeled tasks, got {}", kMinTasks,
                                  task_ids.size()));
  }
  std::sort(task_ids.begin(), task_ids.end());
  if (std::adjacent_find(task_ids.begin(), task_ids.end()) != task_ids.end()) {
    throw ConfigError("split: duplicate task ids");
  }
  Rng rng(seed);
  rng.shuffle(task_ids);

  const auto n = static_cast<double>(task_ids.size());
  const auto n_train = static_cast<std::size_t>(std::llround(0.6 * n));
  const auto n_valid = static_cast<std::size_t>(std::llround(0.2 * n));

  DatasetSplit split;
  split.seed = seed;
  auto first = task_ids.begin();
  split.train.assign(first, first + static_cast<std::ptrdiff_t>(n_train));
  split.valid.assign(first + static_cast<std::ptrdiff_t>(n_train),
                     first + static_cast<std::ptrdiff_t>(n_train + n_valid));
  split.test.assign(first + static_cast<std::ptrdiff_t>(n_train + n_valid), task_ids.end());
  return split;
}

std::vector<std::string> labeled_task_ids(const Dataset& dataset) {
  std::vector<std::string> ids;
  ids.reserve(dataset.interactions.size());
  for (const auto& [task_id, positives] : dataset.interactions) {
    if (!positives.empty()) ids.push_back(task_id);
  }
  return ids;
}

nlohmann::json to_json(const DatasetSplit& split) {
  return {{"seed", split.seed}, {"train", split.train}, {"valid", split.valid}, {"test", split.test}};
}

DatasetSplit split_from_json(const nlohmann::json& value) {
  try {
    DatasetSplit split;
    split.seed = value.at("seed").get<std::uint64_t>();
    split.train = value.at("train").get<std::vector<std::string>>();
    split.valid = value.at("valid").get<std::vector<std::string>>();
    split.test = value.at("test").get<std::vector<std::string>>();
    return split;
  } catch (const json::exception& e) {
    throw DataError(std::string("split: ") + e.what());
  }
}

void save_split(const DatasetSplit& split, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << to_json(split).dump(2) << '\n';
}

DatasetSplit load_split(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return split_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace mcprec
