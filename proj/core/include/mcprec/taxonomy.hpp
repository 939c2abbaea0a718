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
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace mcprec {

using NodeId = std::uint32_t;

// Rooted two-level category tree: root -> categories -> subcategories.
// Names are case-folded on insertion; lookups fold their arguments too.
class Taxonomy {
 public:
  Taxonomy();

  // {"category": ["subcategory", ...], ...}
  static Taxonomy from_json(const nlohmann::json& tree);
  static Taxonomy load(const std::filesystem::path& path);

  // Adds a category (if new) and a subcategory under it. Throws DataError on
  // a duplicate subcategory within the same category.
  NodeId add(std::string_view category, std::string_view subcategory);

  NodeId root() const { return 0; }
  std::optional<NodeId> find(std::string_view category, std::string_view subcategory) const;
  std::optional<NodeId> find_category(std::string_view category) const;

  std::size_t node_count() const { return nodes_.size(); }
  const std::string& name(NodeId node) const { return nodes_.at(node).name; }
  std::optional<NodeId> parent(NodeId node) const;
  int depth(NodeId node) const { return nodes_.at(node).depth; }
  const std::vector<NodeId>& children(NodeId node) const { return nodes_.at(node).children; }
  NodeId lowest_common_ancestor(NodeId a, NodeId b) const;

  // All depth-2 nodes in insertion order.
  std::vector<NodeId> subcategories() const;
  nlohmann::json to_json() const;

 private:
  struct Node {
    std::string name;
    std::optional<NodeId> parent;
    int depth = 0;
    std::vector<NodeId> children;
  };

  std::vector<Node> nodes_;
  std::map<std::string, NodeId, std::less<>> categories_;
  std::map<std::pair<std::string, std::string>, NodeId> subcategories_;
};

// Tree distance depth(a) + depth(b) - 2 depth(lca(a, b)) between two
// subcategory nodes; always one of {0, 2, 4}. Throws std::out_of_range for
// unknown nodes and std::invalid_argument for nodes that are not leaves.
int taxonomy_distance(NodeId server_node, NodeId task_node, const Taxonomy& taxonomy);

}  // namespace mcprec
