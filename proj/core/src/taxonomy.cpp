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

#include "mcprec/taxonomy.hpp"

#include <fstream>
#include <stdexcept>

#include "mcprec/error.hpp"
#include "mcprec/text.hpp"

namespace mcprec {

Taxonomy::Taxonomy() { nodes_.push_back(Node{"<root>", std::nullopt, 0, {}}); }

Taxonomy Taxonomy::from_json(const nlohmann::json& tree) {
  if (!tree.is_object()) throw DataError("taxonomy: expected an object {category: [subcategories]}");
  Taxonomy taxonomy;
  for (const auto& [category, subcategories] : tree.items()) {
    if (!subcategories.is_array()) {
      throw DataError("taxonomy: subcategories of '" + category + "' must be an array");
    }
    if (subcategories.empty()) {
      throw DataError("taxonomy: category '" + category + "' has no subcategories");
    }
    for (const auto& sub : subcategories) {
      if (!sub.is_string()) throw DataError("taxonomy: subcategory names must be strings");
      taxonomy.add(category, sub.get<std::string>());
    }
  }
  return taxonomy;
}

Taxonomy Taxonomy::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open taxonomy file: " + path.string());
  nlohmann::json tree;
  try {
    in >> tree;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return from_json(tree);
}

NodeId Taxonomy::add(std::string_view category, std::string_view subcategory) {
  std::string cat = fold_categorical(category);
  std::string sub = fold_categorical(subcategory);
  if (cat.empty() || sub.empty()) throw DataError("taxonomy: empty category or subcategory name");

  NodeId cat_node;
  if (auto it = categories_.find(cat); it != categories_.end()) {
    cat_node = it->second;
  } else {
    cat_node = static_cast<NodeId>(nodes_.size());
    nodes_.push_back(Node{cat, root(), 1, {}});
    nodes_[root()].children.push_back(cat_node);
    categories_.emplace(cat, cat_node);
  }

  auto key = std::make_pair(cat, sub);
  if (subcategories_.count(key) != 0) {
    throw DataError("taxonomy: duplicate subcategory '" + sub + "' in category '" + cat + "'");
  }
  const auto sub_node = static_cast<NodeId>(nodes_.size());
  nodes_.push_back(Node{sub, cat_node, 2, {}});
  nodes_[cat_node].children.push_back(sub_node);
  subcategories_.emplace(std::move(key), sub_node);
  return sub_node;
}

std::optional<NodeId> Taxonomy::find(std::string_view category, std::string_view subcategory) const {
  auto it = subcategories_.find({fold_categorical(category), fold_categorical(subcategory)});
  if (it == subcategories_.end()) return std::nullopt;
  return it->second;
}

std::optional<NodeId> Taxonomy::find_category(std::string_view category) const {
  auto it = categories_.find(fold_categorical(category));
  if (it == categories_.end()) return std::nullopt;
  return it->second;
}

std::optional<NodeId> Taxonomy::parent(NodeId node) const { return nodes_.at(node).parent; }

NodeId Taxonomy::lowest_common_ancestor(NodeId a, NodeId b) const {
  while (depth(a) > depth(b)) a = *parent(a);
  while (depth(b) > depth(a)) b = *parent(b);
  while (a != b) {
    a = *parent(a);
    b = *parent(b);
  }
  return a;
}

std::vector<NodeId> Taxonomy::subcategories() const {
  std::vector<NodeId> out;
  for (NodeId id = 0; id < nodes_.size(); ++id) {
    if (nodes_[id].depth == 2) out.push_back(id);
  }
  return out;
}

nlohmann::json Taxonomy::to_json() const {
  nlohmann::json tree = nlohmann::json::object();
  for (NodeId cat : children(root())) {
    auto& list = tree[name(cat)] = nlohmann::json::array();
    for (NodeId sub : children(cat)) list.push_back(name(sub));
  }
  return tree;
}

int taxonomy_distance(NodeId server_node, NodeId task_node, const Taxonomy& taxonomy) {
  if (server_node >= taxonomy.node_count() || task_node >= taxonomy.node_count()) {
    throw std::out_of_range("taxonomy_distance: unknown node");
  }
  if (taxonomy.depth(server_node) != 2 || taxonomy.depth(task_node) != 2) {
    throw std::invalid_argument("taxonomy_distance: both nodes must be subcategories");
  }
  const NodeId lca = taxonomy.lowest_common_ancestor(server_node, task_node);
  return taxonomy.depth(server_node) + taxonomy.depth(task_node) - 2 * taxonomy.depth(lca);
}

}  // namespace mcprec
