// Copyright (c) 2026, The HTCInfoMax Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "htcim/autodiff.hpp"

namespace htcim {

inline constexpr std::string_view kRootToken = "Root";

/// Rooted label hierarchy (tree, or DAG with multi-parent nodes).
///
/// Ids are dense 0..size()-1, assigned in order of first appearance in the
/// source text. The root is part of the graph but is never a prediction
/// target; targets are the remaining ids in ascending order.
class Taxonomy {
 public:
  /// Parses lines of `parent<TAB>child1<TAB>child2...`. Blank lines are
  /// skipped; a parent may span several lines. Duplicate edges are dropped
  /// with a warning. Throws StructureError on cycles, orphans or a missing root.
  static Taxonomy parse(std::string_view text);
  static Taxonomy load(const std::string& path);

  /// Inverse of parse(): reproduces ids and child order.
  std::string serialize() const;

  std::size_t size() const { return names_.size(); }
  std::size_t root() const { return root_; }
  std::size_t depth() const { return depth_; }
  const std::string& name(std::size_t id) const { return names_.at(id); }
  const std::vector<std::string>& names() const { return names_; }
  /// Throws DataError for unknown names.
  std::size_t id(std::string_view name) const;
  bool contains(std::string_view name) const;
  const std::vector<std::size_t>& children(std::size_t id) const { return children_.at(id); }
  const std::vector<std::size_t>& parents(std::size_t id) const { return parents_.at(id); }
  /// Edge count on the longest root-to-node path.
  std::size_t level(std::size_t id) const { return level_.at(id); }
  std::size_t duplicate_edges() const { return duplicate_edges_; }

  /// Number of prediction targets (every node but the root).
  std::size_t target_count() const { return targets_.size(); }
  /// Taxonomy id of target column `column`.
  std::size_t target_label(std::size_t column) const { return targets_.at(column); }
  const std::vector<std::size_t>& target_labels() const { return targets_; }
  /// Target column of a non-root id; throws DataError for the root.
  std::size_t target_column(std::size_t id) const;

  bool operator==(const Taxonomy& other) const;

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::vector<std::size_t>> children_;
  std::vector<std::vector<std::size_t>> parents_;
  // Deduplicated source lines, kept so serialize() reproduces the id order.
  std::vector<std::pair<std::size_t, std::vector<std::size_t>>> lines_;
  std::vector<std::size_t> level_;
  std::vector<std::size_t> targets_;
  std::vector<std::size_t> column_;  // id -> target column, root maps to size()
  std::size_t root_ = 0;
  std::size_t depth_ = 0;
  std::size_t duplicate_edges_ = 0;
};

struct TaxonomyStats {
  std::size_t node_count = 0;   // including the root
  std::size_t label_count = 0;  // excluding the root (Table-1 style "L")
  std::size_t depth = 0;
  std::size_t leaf_count = 0;
  /// children-count -> number of internal nodes with that many children.
  std::map<std::size_t, std::size_t> branching;
};

TaxonomyStats stats(const Taxonomy& tax);

/// D^{-1/2} (A + Aᵀ + I) D^{-1/2} over all nodes, A the parent->child 0/1
/// adjacency and D the row sums of A + Aᵀ + I.
ad::Tensor normalized_adjacency(const Taxonomy& tax);

}  // namespace htcim
