// Copyright (c) 2026, The HTCInfoMax Authors
// SPDX-License-Identifier: Apache-2.0
#include "htcim/taxonomy.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "htcim/errors.hpp"

namespace htcim {

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (start <= line.size()) {
    const auto tab = line.find('\t', start);
    const auto end = tab == std::string_view::npos ? line.size() : tab;
    auto field = line.substr(start, end - start);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\r')) field.remove_suffix(1);
    while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
    if (!field.empty()) fields.push_back(field);
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return fields;
}

}  // namespace

Taxonomy Taxonomy::parse(std::string_view text) {
  Taxonomy tax;
  auto intern = [&tax](std::string_view name) {
    auto [it, inserted] = tax.index_.emplace(std::string(name), tax.names_.size());
    if (inserted) {
      tax.names_.emplace_back(name);
      tax.children_.emplace_back();
      tax.parents_.emplace_back();
    }
    return it->second;
  };

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto line = text.substr(pos, (nl == std::string_view::npos ? text.size() : nl) - pos);
    ++line_no;
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    const auto fields = split_tabs(line);
    if (fields.empty()) continue;
    const std::size_t parent = intern(fields[0]);
    auto& line_kids = tax.lines_.emplace_back(parent, std::vector<std::size_t>{}).second;
    for (std::size_t f = 1; f < fields.size(); ++f) {
      const std::size_t child = intern(fields[f]);
      auto& kids = tax.children_[parent];
      if (std::find(kids.begin(), kids.end(), child) != kids.end()) {
        ++tax.duplicate_edges_;
        spdlog::warn("taxonomy line {}: duplicate edge {} -> {} ignored", line_no, fields[0],
                     fields[f]);
        continue;
      }
      if (child == parent) {
        throw StructureError("taxonomy line " + std::to_string(line_no) +
                             ": cycle detected: " + std::string(fields[0]) + " -> " +
                             std::string(fields[0]));
      }
      kids.push_back(child);
      line_kids.push_back(child);
      tax.parents_[child].push_back(parent);
    }
  }

  const auto root_it = tax.index_.find(std::string(kRootToken));
  if (root_it == tax.index_.end()) {
    throw StructureError("taxonomy has no '" + std::string(kRootToken) + "' node");
  }
  tax.root_ = root_it->second;

  // Cycle detection by three-colour DFS over child edges.
  const std::size_t n = tax.names_.size();
  std::vector<int> colour(n, 0);
  std::vector<std::size_t> path;
  for (std::size_t start = 0; start < n; ++start) {
    if (colour[start]) continue;
    std::vector<std::pair<std::size_t, std::size_t>> stack{{start, 0}};
    colour[start] = 1;
    path.assign(1, start);
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      if (next < tax.children_[node].size()) {
        const std::size_t child = tax.children_[node][next++];
        if (colour[child] == 1) {
          std::string msg = "cycle detected: ";
          auto first = std::find(path.begin(), path.end(), child);
          for (auto it = first; it != path.end(); ++it) msg += tax.names_[*it] + " -> ";
          msg += tax.names_[child];
          throw StructureError(msg);
        }
        if (colour[child] == 0) {
          colour[child] = 1;
          path.push_back(child);
          stack.emplace_back(child, 0);
        }
      } else {
        colour[node] = 2;
        path.pop_back();
        stack.pop_back();
      }
    }
  }

  if (!tax.parents_[tax.root_].empty()) {
    throw StructureError("root node '" + std::string(kRootToken) + "' must not have a parent");
  }
  for (std::size_t id = 0; id < n; ++id) {
    if (id != tax.root_ && tax.parents_[id].empty()) {
      throw StructureError("orphan node '" + tax.names_[id] + "' has no parent");
    }
  }

  // Longest-path levels via Kahn's order from the root.
  tax.level_.assign(n, 0);
  std::vector<std::size_t> pending(n);
  for (std::size_t id = 0; id < n; ++id) pending[id] = tax.parents_[id].size();
  std::vector<std::size_t> ready{tax.root_};
  while (!ready.empty()) {
    const std::size_t node = ready.back();
    ready.pop_back();
    for (std::size_t child : tax.children_[node]) {
      tax.level_[child] = std::max(tax.level_[child], tax.level_[node] + 1);
      if (--pending[child] == 0) ready.push_back(child);
    }
  }
  tax.depth_ = *std::max_element(tax.level_.begin(), tax.level_.end());

  tax.column_.assign(n, n);
  for (std::size_t id = 0; id < n; ++id) {
    if (id == tax.root_) continue;
    tax.column_[id] = tax.targets_.size();
    tax.targets_.push_back(id);
  }
  return tax;
}

Taxonomy Taxonomy::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open taxonomy file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::string Taxonomy::serialize() const {
  std::string out;
  for (const auto& [parent, kids] : lines_) {
    out += names_[parent];
    for (std::size_t c : kids) out += "\t" + names_[c];
    out += "\n";
  }
  return out;
}

std::size_t Taxonomy::id(std::string_view name) const {
  const auto it = index_.find(std::string(name));
  if (it == index_.end()) throw DataError("unknown label '" + std::string(name) + "'");
  return it->second;
}

bool Taxonomy::contains(std::string_view name) const {
  return index_.count(std::string(name)) > 0;
}

std::size_t Taxonomy::target_column(std::size_t id) const {
  if (id >= column_.size() || id == root_) {
    throw DataError("label id " + std::to_string(id) + " is not a prediction target");
  }
  return column_[id];
}

bool Taxonomy::operator==(const Taxonomy& other) const {
  return names_ == other.names_ && children_ == other.children_ &&
         parents_ == other.parents_ && root_ == other.root_;
}

TaxonomyStats stats(const Taxonomy& tax) {
  TaxonomyStats s;
  s.node_count = tax.size();
  s.label_count = tax.target_count();
  s.depth = tax.depth();
  for (std::size_t id = 0; id < tax.size(); ++id) {
    const std::size_t k = tax.children(id).size();
    if (k == 0) {
      ++s.leaf_count;
    } else {
      ++s.branching[k];
    }
  }
  return s;
}

ad::Tensor normalized_adjacency(const Taxonomy& tax) {
  const std::size_t n = tax.size();
  std::vector<double> m(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    m[i * n + i] = 1.0;
    for (std::size_t c : tax.children(i)) {
      m[i * n + c] = 1.0;
      m[c * n + i] = 1.0;
    }
  }
  std::vector<double> inv_sqrt(n);
  for (std::size_t i = 0; i < n; ++i) {
    double deg = 0.0;
    for (std::size_t j = 0; j < n; ++j) deg += m[i * n + j];
    inv_sqrt[i] = 1.0 / std::sqrt(deg);
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m[i * n + j] *= inv_sqrt[i] * inv_sqrt[j];
  return ad::Tensor({n, n}, std::move(m));
}

}  // namespace htcim
