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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

namespace mcprec {

class Taxonomy;

enum class System { kWindows, kIos, kLinux, kAny };

std::string_view to_string(System system);
// Case-insensitive; unknown or empty values map to System::kAny.
System parse_system(std::string_view value);

// One tool server. Text fields feed the lexical channel; category,
// subcategory, language and system feed structural scoring.
struct McpRecord {
  std::string id;
  std::string name;
  std::string description;
  std::vector<std::string> tools;
  std::string category;
  std::string subcategory;
  std::string language;
  System system = System::kAny;
  std::string license;
  bool official = false;
  std::string repo_url;
};

struct TaskRecord {
  std::string id;
  std::string name;
  std::string description;
  std::string language;
  std::string category;
  std::string subcategory;
  std::string theme;
};

// task id -> relevant server ids. Ordered by task id so iteration is stable.
using InteractionSet = std::map<std::string, std::vector<std::string>>;

// Records in file order with an id index. Immutable once loaded.
template <class Record>
class RecordTable {
 public:
  RecordTable() = default;
  explicit RecordTable(std::vector<Record> records);

  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const Record& operator[](std::size_t i) const { return records_[i]; }
  const Record* find(std::string_view id) const;
  std::optional<std::size_t> position(std::string_view id) const;
  auto begin() const { return records_.begin(); }
  auto end() const { return records_.end(); }
  std::span<const Record> records() const { return records_; }

 private:
  std::vector<Record> records_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

using ServerCorpus = RecordTable<McpRecord>;
using TaskCorpus = RecordTable<TaskRecord>;

struct Dataset {
  ServerCorpus servers;
  TaskCorpus tasks;
  InteractionSet interactions;
};

// Record <-> JSON line. Parsing normalizes: trims and NFC-normalizes every
// string, case-folds categorical fields. Ids may be given as strings or
// integers.
McpRecord server_from_json(const nlohmann::json& line);
TaskRecord task_from_json(const nlohmann::json& line);
nlohmann::ordered_json to_json(const McpRecord& server);
nlohmann::ordered_json to_json(const TaskRecord& task);

std::vector<McpRecord> read_servers(const std::filesystem::path& path);
std::vector<TaskRecord> read_tasks(const std::filesystem::path& path);
InteractionSet read_interactions(const std::filesystem::path& path);

// Builds tables and checks ids, repo_url uniqueness, and referential
// integrity of the interactions. When a taxonomy is given every record's
// (category, subcategory) must resolve in it. Throws DataError.
Dataset make_dataset(std::vector<McpRecord> servers, std::vector<TaskRecord> tasks,
                     InteractionSet interactions, const Taxonomy* taxonomy = nullptr);

Dataset load_corpus(const std::filesystem::path& mcp_path, const std::filesystem::path& task_path,
                    const std::filesystem::path& interactions_path,
                    const Taxonomy* taxonomy = nullptr);

void save_corpus(const Dataset& dataset, const std::filesystem::path& mcp_path,
                 const std::filesystem::path& task_path,
                 const std::filesystem::path& interactions_path);

// Dedup key for repository URLs: lower-cased, without trailing '/' or '.git'.
std::string canonical_repo_url(std::string_view url);

// Unified text fields, joined by single spaces with empty fields skipped.
// Task: name, description, language, category, theme.
// Server: name, description, language, system (omitted when "any"), tools,
// category, subcategory.
std::string concat_text(const TaskRecord& task);
std::string concat_text(const McpRecord& server);

struct DatasetSplit {
  std::vector<std::string> train;
  std::vector<std::string> valid;
  std::vector<std::string> test;
  std::uint64_t seed = 0;
};

// Seeded uniform shuffle of the sorted ids, then a 60/20/20 slice.
// Throws ConfigError for fewer than five tasks or duplicate ids.
DatasetSplit split_dataset(std::vector<std::string> task_ids, std::uint64_t seed);

std::vector<std::string> labeled_task_ids(const Dataset& dataset);

nlohmann::json to_json(const DatasetSplit& split);
DatasetSplit split_from_json(const nlohmann::json& value);
void save_split(const DatasetSplit& split, const std::filesystem::path& path);
DatasetSplit load_split(const std::filesystem::path& path);

}  // namespace mcprec
