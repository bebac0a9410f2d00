// Copyright (c) 2026, The HTCInfoMax Authors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <fstream>
#include <sstream>

#include "htcim/errors.hpp"
#include "htcim/taxonomy.hpp"
#include "test_util.hpp"

namespace htcim {
namespace {

using testing::Gen;

// Random rooted DAG: node i > 0 picks a parent among 0..i-1, sometimes a
// second one. Edges always point from lower to higher index, so no cycles.
// Lines are emitted in a shuffled parent order, split across several lines.
std::string random_taxonomy(Gen& g, std::size_t nodes) {
  std::vector<std::vector<std::size_t>> kids(nodes);
  for (std::size_t i = 1; i < nodes; ++i) {
    const std::size_t p = g.size(0, i - 1);
    kids[p].push_back(i);
    if (i > 2 && g.coin(0.2)) {
      const std::size_t q = g.size(0, i - 1);
      if (q != p) kids[q].push_back(i);
    }
  }
  auto name = [](std::size_t i) { return i == 0 ? std::string("Root") : "n" + std::to_string(i); };
  std::ostringstream out;
  for (std::size_t p = 0; p < nodes; ++p) {
    if (kids[p].empty() && p != 0) continue;
    out << name(p);
    for (std::size_t c : kids[p]) {
      out << '\t' << name(c);
      if (g.coin(0.2)) out << '\n' << name(p);
    }
    out << '\n';
    if (g.coin(0.3)) out << '\n';
  }
  return out.str();
}

// Complete tree: Root plus `branching` children of each node down to `depth`.
std::string complete_tree(std::vector<std::size_t> per_level) {
  std::ostringstream out;
  std::vector<std::string> frontier{"Root"};
  for (std::size_t lvl = 0; lvl < per_level.size(); ++lvl) {
    std::vector<std::string> next;
    for (const auto& p : frontier) {
      out << p;
      for (std::size_t c = 0; c < per_level[lvl]; ++c) {
        next.push_back(p + "_" + std::to_string(c));
        out << '\t' << next.back();
      }
      out << '\n';
    }
    frontier = std::move(next);
  }
  return out.str();
}

TEST(Taxonomy, HandCountableExample) {
  const auto tax = Taxonomy::parse("Root\tA\tB\nA\tC\n");
  EXPECT_EQ(tax.size(), 4u);
  EXPECT_EQ(tax.depth(), 2u);
  EXPECT_EQ(tax.root(), 0u);
  EXPECT_EQ(tax.name(3), "C");
  EXPECT_EQ(tax.target_count(), 3u);
  EXPECT_EQ(tax.target_labels(), (std::vector<std::size_t>{1, 2, 3}));
  EXPECT_EQ(tax.level(tax.id("C")), 2u);
  EXPECT_THROW(tax.target_column(tax.root()), DataError);
  EXPECT_THROW(tax.id("Z"), DataError);
}

TEST(Taxonomy, IdsFollowFirstAppearance) {
  const auto tax = Taxonomy::parse("B\tD\nRoot\tB\tA\nA\tC\n");
  EXPECT_EQ(tax.names(), (std::vector<std::string>{"B", "D", "Root", "A", "C"}));
  EXPECT_EQ(tax.root(), 2u);
  EXPECT_EQ(tax.target_labels(), (std::vector<std::size_t>{0, 1, 3, 4}));
  EXPECT_EQ(tax.target_column(3), 2u);
}

TEST(Taxonomy, CycleIsNamed) {
  try {
    Taxonomy::parse("Root\tA\nA\tB\nB\tC\nC\tA\n");
    FAIL() << "expected StructureError";
  } catch (const StructureError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("cycle"), std::string::npos);
    EXPECT_NE(msg.find("A -> B -> C -> A"), std::string::npos) << msg;
  }
  EXPECT_THROW(Taxonomy::parse("Root\tA\nA\tA\n"), StructureError);
}

TEST(Taxonomy, OrphanAndMissingRoot) {
  EXPECT_THROW(Taxonomy::parse("Root\tA\nX\tY\n"), StructureError);
  EXPECT_THROW(Taxonomy::parse("A\tB\n"), StructureError);
  EXPECT_THROW(Taxonomy::parse("Root\tA\nA\tRoot\n"), StructureError);
}

TEST(Taxonomy, DuplicateEdgesAreDropped) {
  const auto tax = Taxonomy::parse("Root\tA\tA\nRoot\tA\tB\n");
  EXPECT_EQ(tax.duplicate_edges(), 2u);
  EXPECT_EQ(tax.children(tax.root()).size(), 2u);
  EXPECT_EQ(tax.parents(tax.id("A")).size(), 1u);
}

TEST(Taxonomy, MultiParentDepthUsesLongestPath) {
  const auto tax = Taxonomy::parse("Root\tA\tB\nA\tC\nC\tD\nB\tD\n");
  EXPECT_EQ(tax.parents(tax.id("D")).size(), 2u);
  EXPECT_EQ(tax.level(tax.id("D")), 3u);
  EXPECT_EQ(tax.depth(), 3u);
}

TEST(Taxonomy, RootOnly) {
  const auto tax = Taxonomy::parse("Root\n");
  EXPECT_EQ(tax.size(), 1u);
  EXPECT_EQ(tax.target_count(), 0u);
  EXPECT_EQ(tax.depth(), 0u);
}

TEST(Taxonomy, LoadFromFile) {
  testing::TempDir dir("tax");
  {
    std::ofstream f(dir.file("t.txt"));
    f << "Root\tA\n";
  }
  EXPECT_EQ(Taxonomy::load(dir.file("t.txt")).size(), 2u);
  EXPECT_THROW(Taxonomy::load(dir.file("missing.txt")), IoError);
}

TEST(Taxonomy, RoundTripProperty) {
  Gen g(21);
  for (int trial = 0; trial < 60; ++trial) {
    const auto text = random_taxonomy(g, g.size(1, 40));
    const auto tax = Taxonomy::parse(text);
    const auto again = Taxonomy::parse(tax.serialize());
    EXPECT_EQ(tax, again);
    EXPECT_EQ(again.serialize(), tax.serialize());
  }
}

TEST(Taxonomy, LevelsAreConsistentProperty) {
  Gen g(22);
  for (int trial = 0; trial < 60; ++trial) {
    const auto tax = Taxonomy::parse(random_taxonomy(g, g.size(2, 40)));
    std::size_t deepest = 0;
    for (std::size_t id = 0; id < tax.size(); ++id) {
      deepest = std::max(deepest, tax.level(id));
      if (id == tax.root()) {
        EXPECT_EQ(tax.level(id), 0u);
        continue;
      }
      ASSERT_FALSE(tax.parents(id).empty());
      std::size_t best = 0;
      for (std::size_t p : tax.parents(id)) best = std::max(best, tax.level(p) + 1);
      EXPECT_EQ(tax.level(id), best);
    }
    EXPECT_EQ(tax.depth(), deepest);
  }
}

TEST(Stats, ChainAndStar) {
  const auto chain = Taxonomy::parse("Root\ta\na\tb\nb\tc\nc\td\n");
  EXPECT_EQ(stats(chain).depth, 4u);
  EXPECT_EQ(stats(chain).label_count, 4u);

  std::string star = "Root";
  for (int i = 0; i < 10; ++i) star += "\tleaf" + std::to_string(i);
  const auto s = stats(Taxonomy::parse(star));
  EXPECT_EQ(s.depth, 1u);
  EXPECT_EQ(s.leaf_count, 10u);
  EXPECT_EQ(s.branching, (std::map<std::size_t, std::size_t>{{10, 1}}));
}

TEST(Stats, LargeBenchmarkShapedHierarchies) {
  // 4 top-level topics, 55 second-level, 43 third-level and 1 fourth-level
  // node: 103 labels over depth 4.
  std::ostringstream deep;
  deep << "Root\tT0\tT1\tT2\tT3\n";
  for (int i = 0; i < 55; ++i) deep << "T" << (i % 4) << "\tS" << i << "\n";
  for (int i = 0; i < 43; ++i) deep << "S" << i << "\tU" << i << "\n";
  deep << "U0\tV0\n";
  const auto a = stats(Taxonomy::parse(deep.str()));
  EXPECT_EQ(a.label_count, 103u);
  EXPECT_EQ(a.depth, 4u);

  // 7 domains with 134 areas underneath: 141 labels over depth 2.
  std::ostringstream wide;
  wide << "Root";
  for (int i = 0; i < 7; ++i) wide << "\tD" << i;
  wide << "\n";
  for (int i = 0; i < 134; ++i) wide << "D" << (i % 7) << "\tA" << i << "\n";
  const auto b = stats(Taxonomy::parse(wide.str()));
  EXPECT_EQ(b.label_count, 141u);
  EXPECT_EQ(b.depth, 2u);
}

TEST(Stats, CompleteTreeNodeCount) {
  const auto tax = Taxonomy::parse(complete_tree({3, 3, 3}));
  const auto s = stats(tax);
  EXPECT_EQ(s.node_count, 40u);
  EXPECT_EQ(s.label_count, 39u);
  EXPECT_EQ(s.leaf_count, 27u);
  EXPECT_EQ(s.branching, (std::map<std::size_t, std::size_t>{{3, 13}}));
}

TEST(Adjacency, SingleNodeAndChain) {
  const auto one = normalized_adjacency(Taxonomy::parse("Root\n"));
  ASSERT_EQ(one.numel(), 1u);
  EXPECT_DOUBLE_EQ(one[0], 1.0);
  const auto two = normalized_adjacency(Taxonomy::parse("Root\tA\n"));
  for (double v : two.values()) EXPECT_NEAR(v, 0.5, 1e-15);
}

TEST(Adjacency, ThreeChainMatchesHandEvaluation) {
  const auto a = normalized_adjacency(Taxonomy::parse("Root\tA\nA\tB\n"));
  const double deg[3] = {2, 3, 2};
  const double raw[9] = {1, 1, 0, 1, 1, 1, 0, 1, 1};
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      EXPECT_NEAR(a[i * 3 + j], raw[i * 3 + j] / std::sqrt(deg[i] * deg[j]), 1e-15);
    }
  }
}

// Largest |eigenvalue| of a symmetric matrix by power iteration on A².
double spectral_radius(const ad::Tensor& a, std::size_t n) {
  std::vector<double> v(n), w(n);
  Gen g(5);
  for (auto& x : v) x = g.real(0.1, 1.0);
  double lambda_sq = 0.0;
  for (int it = 0; it < 500; ++it) {
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += a[i * n + j] * v[j];
        w[i] = acc;
      }
      std::swap(v, w);
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    lambda_sq = norm;
    for (auto& x : v) x /= norm;
  }
  return std::sqrt(lambda_sq);
}

TEST(Adjacency, SymmetricWithBoundedSpectrumProperty) {
  Gen g(23);
  for (int trial = 0; trial < 30; ++trial) {
    const auto tax = Taxonomy::parse(random_taxonomy(g, g.size(1, 30)));
    const auto a = normalized_adjacency(tax);
    const std::size_t n = tax.size();
    ASSERT_EQ(a.shape(), (ad::Shape{n, n}));
    for (std::size_t i = 0; i < n; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        EXPECT_EQ(a[i * n + j], a[j * n + i]);
        EXPECT_TRUE(std::isfinite(a[i * n + j]));
        row += a[i * n + j];
      }
      EXPECT_LE(row, static_cast<double>(n));
    }
    EXPECT_LE(spectral_radius(a, n), 1.0 + 1e-9);
  }
}

}  // namespace
}  // namespace htcim
