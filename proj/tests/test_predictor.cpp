// Copyright (c) 2026, The HTCInfoMax Authors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "htcim/errors.hpp"
#include "htcim/predictor.hpp"
#include "test_util.hpp"

namespace htcim {
namespace {

using ad::Shape;
using ad::Tensor;
using testing::Gen;

using Matrix = std::vector<std::uint8_t>;

std::vector<double> as_targets(const Matrix& m) { return {m.begin(), m.end()}; }

Matrix random_matrix(Gen& g, std::size_t n, double density) {
  Matrix m(n);
  for (auto& v : m) v = g.coin(density) ? 1 : 0;
  return m;
}

// Column permutation of a row-major rows×cols matrix.
template <typename T>
std::vector<T> permute_cols(const std::vector<T>& m, std::size_t cols, const std::vector<std::size_t>& perm) {
  std::vector<T> out(m.size());
  for (std::size_t r = 0; r < m.size() / cols; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = m[r * cols + perm[c]];
  return out;
}

template <typename T>
std::vector<T> permute_rows(const std::vector<T>& m, std::size_t cols, const std::vector<std::size_t>& perm) {
  std::vector<T> out(m.size());
  for (std::size_t r = 0; r < perm.size(); ++r)
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = m[perm[r] * cols + c];
  return out;
}

LabelAwareFeatures random_laf(Gen& g, std::size_t b, std::size_t n, std::size_t d) {
  LabelAwareFeatures laf;
  laf.batch = b;
  laf.labels = n;
  laf.seq = 1;
  laf.matrix = g.tensor({b, n, d});
  return laf;
}

TEST(Classify, ZeroHeadGivesHalfAndPositiveTies) {
  ParamRegistry reg;
  Rng rng(1);
  const ModelDims dims;
  ClassifierHead head(reg, dims, 4, rng);
  EXPECT_EQ(reg.get("head.fc.weight").shape(), (Shape{4 * 300, 4}));
  Gen g(2);
  const auto p = classify(random_laf(g, 3, 4, 300), head);
  EXPECT_EQ(p.rows, 3u);
  EXPECT_EQ(p.cols, 4u);
  for (double v : p.probs) EXPECT_EQ(v, 0.5);
  for (auto d : p.decisions) EXPECT_EQ(d, 1);
}

TEST(Classify, RandomHeadShapeAndRange) {
  ParamRegistry reg;
  Rng rng(3);
  const auto dims = testing::tiny_dims();
  ClassifierHead head(reg, dims, 5, rng, false);
  Gen g(4);
  const auto laf = random_laf(g, 2, 5, dims.text);
  EXPECT_EQ(head.logits(laf).shape(), (Shape{2, 5}));
  const auto p = classify(laf, head, 0.3);
  for (std::size_t i = 0; i < p.probs.size(); ++i) {
    EXPECT_GT(p.probs[i], 0.0);
    EXPECT_LT(p.probs[i], 1.0);
    EXPECT_EQ(p.decisions[i], p.probs[i] >= 0.3 ? 1 : 0);
  }
}

TEST(Predictions, RaisingOneLogitRaisesExactlyOneProb) {
  Gen g(5);
  auto logits = g.tensor({3, 4}, -3, 3);
  const auto before = predictions_from_logits(logits);
  for (std::size_t i = 0; i < 12; ++i) {
    auto bumped = logits.detach();
    bumped.mutable_values()[i] += 0.5;
    const auto after = predictions_from_logits(bumped);
    for (std::size_t k = 0; k < 12; ++k) {
      if (k == i) EXPECT_GT(after.probs[k], before.probs[k]);
      else EXPECT_EQ(after.probs[k], before.probs[k]);
    }
  }
}

TEST(Predictions, ThresholdValidation) {
  const Tensor z({1, 2}, {0.0, 1.0});
  EXPECT_THROW(predictions_from_logits(z, 1.5), ConfigError);
  EXPECT_THROW(predictions_from_logits(z, -0.1), ConfigError);
  const auto p = predictions_from_logits(z, 1.0);
  EXPECT_FALSE(p.decided(0, 1));
}

TEST(Bce, ExactAndUniformCases) {
  const std::vector<double> t{1, 0, 1, 0};
  EXPECT_NEAR(bce_from_probs(t, t), 0.0, 1e-11);
  const std::vector<double> half(4, 0.5);
  EXPECT_NEAR(bce_from_probs(half, t), std::log(2.0), 1e-15);
  EXPECT_NEAR(classification_loss(Tensor({2, 2}, 0.0), t).item(), std::log(2.0), 1e-15);
}

TEST(Bce, RandomCaseMatchesScalarLoop) {
  Gen g(6);
  const auto z = g.tensor({2, 3}, -5, 5);
  const std::vector<double> t{0, 1, 1, 0, 0, 1};
  double oracle = 0.0;
  std::vector<double> p(6);
  for (std::size_t i = 0; i < 6; ++i) {
    p[i] = 1.0 / (1.0 + std::exp(-z[i]));
    oracle += -(t[i] * std::log(p[i]) + (1 - t[i]) * std::log(1 - p[i]));
  }
  EXPECT_NEAR(classification_loss(z, t).item(), oracle / 6, 1e-12);
  EXPECT_NEAR(bce_from_probs(p, t), oracle / 6, 1e-12);
}

TEST(Bce, StrictlyPositiveUnlessExactProperty) {
  Gen g(7);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = g.size(1, 20);
    const auto z = g.tensor({n}, -10, 10);
    std::vector<double> t(n);
    for (auto& v : t) v = g.coin() ? 1.0 : 0.0;
    EXPECT_GT(classification_loss(z, t).item(), 0.0);
  }
}

TEST(F1, PerfectPredictions) {
  const Matrix d{1, 0, 1, 1, 1, 0};
  EXPECT_EQ(micro_f1(d, as_targets(d), 3), 1.0);
  EXPECT_EQ(macro_f1(d, as_targets(d), 3), 1.0);
}

TEST(F1, HandEnumeratedTwoLabelCase) {
  // Label A: TP=1, FP=1, FN=0. Label B: TP=0, FP=0, FN=1.
  const Matrix decisions{1, 0, 1, 0};
  const Matrix targets{1, 1, 0, 0};
  EXPECT_NEAR(micro_f1(decisions, as_targets(targets), 2), 0.5, 1e-15);
  EXPECT_NEAR(macro_f1(decisions, as_targets(targets), 2), (2.0 / 3.0) / 2.0, 1e-15);
}

TEST(F1, AllNegativePredictions) {
  const Matrix decisions(6, 0);
  const Matrix targets{1, 0, 0, 0, 1, 1};
  EXPECT_EQ(micro_f1(decisions, as_targets(targets), 3), 0.0);
  EXPECT_EQ(macro_f1(decisions, as_targets(targets), 3), 0.0);
}

TEST(F1, EmptyLabelCountsAsZeroInMacro) {
  // Label 1 never appears and is never predicted.
  const Matrix decisions{1, 0, 1, 0};
  EXPECT_EQ(micro_f1(decisions, as_targets(decisions), 2), 1.0);
  EXPECT_EQ(macro_f1(decisions, as_targets(decisions), 2), 0.5);
}

TEST(F1, BoundsAndPerfectionProperty) {
  Gen g(8);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t rows = g.size(1, 6), cols = g.size(1, 6);
    const auto d = random_matrix(g, rows * cols, 0.5);
    const auto t = random_matrix(g, rows * cols, 0.5);
    const double mi = micro_f1(d, as_targets(t), cols), ma = macro_f1(d, as_targets(t), cols);
    EXPECT_GE(mi, 0.0);
    EXPECT_LE(mi, 1.0);
    EXPECT_GE(ma, 0.0);
    EXPECT_LE(ma, 1.0);
    if (d != t) {
      EXPECT_LT(mi, 1.0);
      EXPECT_LT(ma, 1.0);
    }
    // Every label present on both sides: macro is 1 exactly when equal.
    auto full = d;
    for (std::size_t c = 0; c < cols; ++c) full[c] = 1;
    EXPECT_EQ(macro_f1(full, as_targets(full), cols), 1.0);
  }
}

TEST(F1, PermutationInvarianceProperty) {
  Gen g(9);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t rows = g.size(1, 8), cols = g.size(1, 8);
    const auto d = random_matrix(g, rows * cols, 0.4);
    const auto t = as_targets(random_matrix(g, rows * cols, 0.4));
    const double mi = micro_f1(d, t, cols), ma = macro_f1(d, t, cols);
    const auto pc = shuffled_indices(cols, trial);
    EXPECT_DOUBLE_EQ(micro_f1(permute_cols(d, cols, pc), permute_cols(t, cols, pc), cols), mi);
    EXPECT_NEAR(macro_f1(permute_cols(d, cols, pc), permute_cols(t, cols, pc), cols), ma, 1e-15);
    const auto pr = shuffled_indices(rows, trial + 1000);
    EXPECT_DOUBLE_EQ(micro_f1(permute_rows(d, cols, pr), permute_rows(t, cols, pr), cols), mi);
  }
}

TEST(Confusion, MergeEqualsPooledAdd) {
  Gen g(10);
  ConfusionCounts pooled(5), a(5), b(5);
  const auto d1 = random_matrix(g, 15, 0.5), d2 = random_matrix(g, 10, 0.5);
  const auto t1 = as_targets(random_matrix(g, 15, 0.5)), t2 = as_targets(random_matrix(g, 10, 0.5));
  a.add(d1, t1);
  b.add(d2, t2);
  pooled.add(d1, t1);
  pooled.add(d2, t2);
  a.merge(b);
  for (std::size_t j = 0; j < 5; ++j) {
    EXPECT_EQ(a.tp(j), pooled.tp(j));
    EXPECT_EQ(a.fp(j), pooled.fp(j));
    EXPECT_EQ(a.fn(j), pooled.fn(j));
  }
  EXPECT_EQ(a.micro_f1(), pooled.micro_f1());
  EXPECT_EQ(a.macro_f1(), pooled.macro_f1());
}

TEST(Confusion, ShapeMismatchRejected) {
  ConfusionCounts c(3);
  const Matrix d{1, 0};
  EXPECT_THROW(c.add(d, std::vector<double>{1, 0}), DimensionError);
  ConfusionCounts other(4);
  EXPECT_THROW(c.merge(other), DimensionError);
}

}  // namespace
}  // namespace htcim
