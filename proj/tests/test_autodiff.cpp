// Copyright (c) 2026, The HTCInfoMax Authors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <numeric>

#include "htcim/autodiff.hpp"
#include "htcim/errors.hpp"
#include "htcim/kernels.hpp"
#include "test_util.hpp"

namespace htcim {
namespace {

using ad::Shape;
using ad::Tensor;
using testing::Gen;
using testing::expect_grad_ok;
using testing::grad_check;

std::vector<double> to_vec(const Tensor& t) { return {t.values().begin(), t.values().end()}; }

// Weighted sum with fixed random weights, so every output entry matters.
Tensor probe(const Tensor& y, std::uint64_t seed = 99) {
  Gen g(seed);
  return ad::sum(ad::mul(y, g.tensor(y.shape())));
}

TEST(Tensor, ShapeAndValueContract) {
  Tensor t({2, 3}, 1.5);
  EXPECT_EQ(t.numel(), 6u);
  EXPECT_EQ(t.rank(), 2u);
  EXPECT_EQ(t.dim(1), 3u);
  EXPECT_EQ(t[4], 1.5);
  EXPECT_FALSE(t.has_grad());
  EXPECT_THROW(Tensor({2, 2}, std::vector<double>{1, 2, 3}), DimensionError);
}

TEST(Tensor, CopiesShareStorage) {
  Tensor a({2}, 0.0);
  Tensor b = a;
  b.mutable_values()[0] = 3.0;
  EXPECT_EQ(a[0], 3.0);
  EXPECT_TRUE(a.same_node(b));
  const auto d = a.detach();
  EXPECT_FALSE(d.same_node(a));
  EXPECT_EQ(d[0], 3.0);
}

TEST(Matmul, IdentityAndSelector) {
  const Tensor eye({2, 2}, {1, 0, 0, 1});
  const Tensor x({2, 2}, {1, 2, 3, 4});
  EXPECT_EQ(to_vec(ad::matmul(eye, x)), to_vec(x));
  const auto sel = ad::matmul(Tensor({1, 2}, {1, 0}), Tensor({2, 1}, {5, 7}));
  EXPECT_EQ(sel.shape(), (Shape{1, 1}));
  EXPECT_EQ(sel[0], 5.0);
}

TEST(Matmul, GradientOfSumIsOnesTimesBTransposed) {
  Gen g(1);
  auto a = g.param({3, 4});
  const auto b = g.tensor({4, 2});
  ad::backward(ad::sum(ad::matmul(a, b)));
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t k = 0; k < 4; ++k) {
      EXPECT_NEAR(a.grad()[i * 4 + k], b[k * 2] + b[k * 2 + 1], 1e-14);
    }
  }
  const auto r = grad_check([&] { return ad::sum(ad::matmul(a, b)); }, {{"a", a}});
  expect_grad_ok(r);
}

TEST(Matmul, ShapeMismatchNamesBothShapes) {
  try {
    ad::matmul(Tensor({2, 3}), Tensor({4, 2}));
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[2x3]"), std::string::npos) << msg;
    EXPECT_NE(msg.find("[4x2]"), std::string::npos) << msg;
  }
}

TEST(Conv1d, CenterDeltaIsIdentity) {
  const Tensor x({4, 1}, 1.0);
  const Tensor k({3, 1, 1}, {0, 1, 0});
  EXPECT_EQ(to_vec(ad::conv1d(x, k)), (std::vector<double>{1, 1, 1, 1}));
}

TEST(Conv1d, SingleTokenUsesOnlyCenterTap) {
  const Tensor x({1, 1}, {2.0});
  const Tensor k({3, 1, 1}, {5, 3, 7});
  EXPECT_EQ(ad::conv1d(x, k)[0], 6.0);
}

TEST(Conv1d, MatchesTripleLoopOracle) {
  Gen g(2);
  const auto x = g.tensor({5, 2});
  const auto k = g.tensor({3, 2, 2});
  const auto y = ad::conv1d(x, k);
  for (std::size_t s = 0; s < 5; ++s) {
    for (std::size_t o = 0; o < 2; ++o) {
      double acc = 0.0;
      for (std::size_t t = 0; t < 3; ++t) {
        const long pos = static_cast<long>(s + t) - 1;
        if (pos < 0 || pos >= 5) continue;
        for (std::size_t c = 0; c < 2; ++c) acc += x[pos * 2 + c] * k[(t * 2 + c) * 2 + o];
      }
      EXPECT_NEAR(y[s * 2 + o], acc, 1e-14);
    }
  }
}

TEST(Conv1d, EmptySequenceIsDomainError) {
  EXPECT_THROW(ad::conv1d(Tensor(Shape{0, 2}), Tensor(Shape{3, 2, 1})), DomainError);
}

TEST(Conv1d, BatchedSequencesArePaddedIndependently) {
  Gen g(3);
  const auto x = g.tensor({2, 4, 3});
  const auto k = g.tensor({3, 3, 2});
  const auto y = ad::conv1d(x, k);
  for (std::size_t b = 0; b < 2; ++b) {
    const auto yb = ad::conv1d(ad::reshape(ad::slice(x, 0, b, 1), {4, 3}), k);
    for (std::size_t i = 0; i < 8; ++i) EXPECT_NEAR(y[b * 8 + i], yb[i], 1e-14);
  }
}

TEST(Activation, AnalyticPoints) {
  auto z = Tensor({1}, {0.0});
  z.set_requires_grad();
  const auto s = ad::sigmoid(z);
  EXPECT_EQ(s[0], 0.5);
  ad::backward(ad::sum(s));
  EXPECT_EQ(z.grad()[0], 0.25);
  const auto r = ad::relu(Tensor({2}, {-3, 3}));
  EXPECT_EQ(to_vec(r), (std::vector<double>{0, 3}));
  const auto sm = ad::softmax(Tensor({3}, {0, 0, 0}), 0);
  for (double v : sm.values()) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
}

TEST(Activation, LogRejectsNonpositive) {
  EXPECT_THROW(ad::log(Tensor({2}, {1.0, 0.0})), DomainError);
  EXPECT_THROW(ad::log(Tensor({1}, {-1.0})), DomainError);
  EXPECT_NEAR(ad::log(Tensor({1}, {std::exp(2.0)}))[0], 2.0, 1e-15);
}

TEST(Activation, SigmoidStableAtExtremes) {
  const auto s = ad::sigmoid(Tensor({2}, {-800, 800}));
  EXPECT_EQ(s[0], 0.0);
  EXPECT_EQ(s[1], 1.0);
  for (double v : s.values()) EXPECT_TRUE(std::isfinite(v));
}

TEST(Softmax, SlicesSumToOneProperty) {
  Gen g(4);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t a = g.size(1, 4), b = g.size(1, 6), c = g.size(1, 5);
    const std::size_t axis = g.size(0, 2);
    const auto x = g.tensor({a, b, c}, -30, 30);
    const auto y = ad::softmax(x, axis);
    const Shape shape{a, b, c};
    const std::size_t extent = shape[axis];
    std::size_t inner = 1;
    for (std::size_t d = axis + 1; d < 3; ++d) inner *= shape[d];
    const std::size_t outer = x.numel() / (extent * inner);
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t i = 0; i < inner; ++i) {
        double total = 0.0;
        for (std::size_t e = 0; e < extent; ++e) {
          const double v = y[(o * extent + e) * inner + i];
          EXPECT_GE(v, 0.0);
          total += v;
        }
        EXPECT_NEAR(total, 1.0, 1e-9);
      }
    }
  }
}

TEST(Softmax, MaskedEntriesAreExactlyZero) {
  const Tensor x({2, 3}, {1, 2, 3, 4, 5, 6});
  const std::vector<double> mask{1, 0, 1, 0, 0, 0};
  const auto y = ad::softmax(x, 1, &mask);
  EXPECT_EQ(y[1], 0.0);
  EXPECT_NEAR(y[0] + y[2], 1.0, 1e-15);
  for (std::size_t i = 3; i < 6; ++i) EXPECT_EQ(y[i], 0.0);
}

TEST(Reduce, ExamplesAndAxisOracle) {
  EXPECT_EQ(ad::mean(Tensor({3}, {1, 2, 3})).item(), 2.0);
  EXPECT_EQ(ad::sum(Tensor({4}, 0.0)).item(), 0.0);
  Gen g(5);
  const auto x = g.tensor({2, 3});
  const auto m = ad::reduce(x, ad::Reduce::kMean, 0);
  ASSERT_EQ(m.shape(), (Shape{3}));
  for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(m[c], (x[c] + x[3 + c]) / 2.0, 1e-15);
  const auto mx = ad::reduce(x, ad::Reduce::kMax, 1);
  for (std::size_t r = 0; r < 2; ++r) {
    EXPECT_EQ(mx[r], std::max({x[r * 3], x[r * 3 + 1], x[r * 3 + 2]}));
  }
  EXPECT_THROW(ad::reduce(x, ad::Reduce::kSum, 2), DimensionError);
}

TEST(Reduce, MeanGradientIsUniform) {
  auto x = Tensor({4}, {1, 2, 3, 4});
  x.set_requires_grad();
  ad::backward(ad::mean(x));
  for (double g : x.grad()) EXPECT_EQ(g, 0.25);
}

TEST(Concat, WidthsAddAndSplitRoundTrips) {
  Gen g(6);
  const auto a = g.tensor({512}), b = g.tensor({300});
  const auto c = ad::concat({a, b}, 0);
  EXPECT_EQ(c.shape(), (Shape{812}));
  EXPECT_EQ(to_vec(ad::slice(c, 0, 0, 512)), to_vec(a));
  EXPECT_EQ(to_vec(ad::slice(c, 0, 512, 300)), to_vec(b));
  EXPECT_EQ(to_vec(ad::concat({a}, 0)), to_vec(a));
  EXPECT_THROW(ad::concat({Tensor({2, 3}), Tensor({3, 3})}, 1), DimensionError);
}

TEST(Embedding, GatherAndScatterAdd) {
  Gen g(7);
  auto table = g.param({6, 3});
  const std::vector<std::size_t> first{0};
  const auto row = ad::embedding_lookup(table, first);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(row[k], table[k]);

  const std::vector<std::size_t> ids{2, 2, 5};
  ad::backward(ad::sum(ad::embedding_lookup(table, ids)));
  for (std::size_t r = 0; r < 6; ++r) {
    const double expected = r == 2 ? 2.0 : (r == 5 ? 1.0 : 0.0);
    for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(table.grad()[r * 3 + k], expected);
  }
  const std::vector<std::size_t> bad{6};
  EXPECT_THROW(ad::embedding_lookup(table, bad), IndexError);
}

TEST(Backward, SumAndSigmoidExamples) {
  auto w = Tensor({3}, {0.3, -1, 2});
  w.set_requires_grad();
  ad::backward(ad::sum(w));
  for (double g : w.grad()) EXPECT_EQ(g, 1.0);

  auto v = Tensor({1, 3}, 0.0);
  v.set_requires_grad();
  const Tensor x({3, 1}, {1.0, -2.0, 0.5});
  ad::backward(ad::sum(ad::sigmoid(ad::matmul(v, x))));
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(v.grad()[i], 0.25 * x[i]);
}

TEST(Backward, NonScalarLossIsContractError) {
  auto w = Tensor({2}, 1.0);
  w.set_requires_grad();
  EXPECT_THROW(ad::backward(ad::scale(w, 2.0)), ContractError);
}

TEST(Backward, GradientsAccumulateAcrossPasses) {
  auto w = Tensor({2}, {1.0, 2.0});
  w.set_requires_grad();
  ad::backward(ad::sum(w));
  ad::backward(ad::sum(w));
  EXPECT_EQ(w.grad()[0], 2.0);
  w.zero_grad();
  EXPECT_EQ(w.grad()[1], 0.0);
  w.clear_grad();
  EXPECT_FALSE(w.has_grad());
}

TEST(Backward, SharedSubgraphVisitedOnce) {
  // y = (w*w) used twice: d/dw sum(y + y) = 4w.
  auto w = Tensor({2}, {1.5, -2.0});
  w.set_requires_grad();
  const auto y = ad::mul(w, w);
  ad::backward(ad::sum(ad::add(y, y)));
  EXPECT_EQ(w.grad()[0], 6.0);
  EXPECT_EQ(w.grad()[1], -8.0);
}

TEST(Backward, ReplayIsBitIdentical) {
  Gen g(8);
  auto a = g.param({4, 5});
  const auto b = g.tensor({5, 3});
  auto run = [&] {
    a.clear_grad();
    const auto loss = ad::mean(ad::tanh(ad::matmul(a, b)));
    ad::backward(loss);
    return std::pair{loss.item(), to_vec(Tensor({20}, std::vector<double>(a.grad().begin(), a.grad().end())))};
  };
  EXPECT_EQ(run(), run());
}

TEST(NoGrad, GuardSuppressesRecording) {
  auto w = Tensor({2}, 1.0);
  w.set_requires_grad();
  {
    ad::NoGradGuard guard;
    EXPECT_FALSE(ad::grad_enabled());
    const auto y = ad::sum(ad::scale(w, 3.0));
    EXPECT_FALSE(y.requires_grad());
  }
  EXPECT_TRUE(ad::grad_enabled());
}

TEST(GradReverse, NegatesIncomingGradient) {
  auto w = Tensor({2}, {1.0, 2.0});
  w.set_requires_grad();
  const auto y = ad::grad_reverse(w, 0.5);
  EXPECT_EQ(to_vec(y), to_vec(w));
  ad::backward(ad::sum(y));
  EXPECT_EQ(w.grad()[0], -0.5);
}

// Every primitive op against central differences on random inputs.
TEST(GradientCheck, EveryPrimitiveOp) {
  Gen g(9);
  auto a = g.param({3, 4});
  auto b = g.param({4, 2});
  auto sq = g.param({3, 4});
  auto pos = g.param({3, 4}, 0.5, 2.0);
  auto bias = g.param({4});
  auto bat = g.param({2, 3, 4});
  auto bat2 = g.param({2, 3, 5});
  auto x = g.param({2, 5, 3});
  auto k = g.param({3, 3, 2});
  auto table = g.param({5, 3});
  const std::vector<double> weights{0.5, -1.0, 2.0};
  const std::vector<std::size_t> ids{1, 4, 1, 0};
  const std::vector<double> targets{1, 0, 1, 1, 0, 0, 1, 0, 0, 1, 1, 0};
  const std::vector<double> mask{1, 1, 0, 1, 0, 1, 1, 1, 1, 0, 1, 1};

  const std::vector<std::pair<std::string, std::function<Tensor()>>> cases{
      {"matmul", [&] { return probe(ad::matmul(a, b)); }},
      {"batched_matmul", [&] { return probe(ad::batched_matmul(bat, bat2, true, false)); }},
      {"batched_matmul_tb", [&] { return probe(ad::batched_matmul(bat2, bat2, false, true)); }},
      {"transpose", [&] { return probe(ad::transpose(a)); }},
      {"conv1d", [&] { return probe(ad::conv1d(x, k)); }},
      {"sigmoid", [&] { return probe(ad::sigmoid(a)); }},
      {"tanh", [&] { return probe(ad::tanh(a)); }},
      {"log", [&] { return probe(ad::log(pos)); }},
      {"softmax", [&] { return probe(ad::softmax(a, 1)); }},
      {"softmax_masked", [&] { return probe(ad::softmax(a, 0, &mask)); }},
      {"add_sub_mul", [&] { return probe(ad::mul(ad::add(a, sq), ad::sub(a, sq))); }},
      {"scale_offset", [&] { return probe(ad::add_scalar(ad::scale(a, -1.7), 0.3)); }},
      {"row_bias", [&] { return probe(ad::add_row_bias(a, bias)); }},
      {"scale_rows", [&] { return probe(ad::scale_rows(a, weights)); }},
      {"reduce_axis", [&] { return probe(ad::reduce(bat, ad::Reduce::kMean, 1)); }},
      {"reduce_max", [&] { return probe(ad::reduce(a, ad::Reduce::kMax, 1)); }},
      {"concat", [&] { return probe(ad::concat({a, sq}, 1)); }},
      {"slice_reshape", [&] { return probe(ad::reshape(ad::slice(bat, 1, 1, 2), {4, 4})); }},
      {"embedding", [&] { return probe(ad::embedding_lookup(table, ids)); }},
      {"bce", [&] { return ad::bce_with_logits(a, targets); }},
      {"relu", [&] { return probe(ad::relu(a)); }},
  };
  for (const auto& [name, f] : cases) {
    SCOPED_TRACE(name);
    const auto r = grad_check(f, {{"a", a}, {"b", b}, {"sq", sq}, {"pos", pos}, {"bias", bias},
                                  {"bat", bat}, {"bat2", bat2}, {"x", x}, {"k", k}, {"table", table}});
    EXPECT_TRUE(r.passed) << name << " max rel " << r.max_rel_error;
  }
}

TEST(Bce, LogitSpaceMatchesProbabilityForm) {
  Gen g(10);
  const auto z = g.tensor({2, 3}, -4, 4);
  const std::vector<double> t{1, 0, 0, 1, 1, 0};
  double oracle = 0.0;
  for (std::size_t i = 0; i < 6; ++i) {
    const double p = 1.0 / (1.0 + std::exp(-z[i]));
    oracle -= t[i] * std::log(p) + (1 - t[i]) * std::log(1 - p);
  }
  EXPECT_NEAR(ad::bce_with_logits(z, t).item(), oracle / 6.0, 1e-12);
  EXPECT_TRUE(std::isfinite(ad::bce_with_logits(Tensor({2}, {-1000, 1000}), std::vector<double>{1, 0}).item()));
}

TEST(KinkMonitor, SignatureChangesAcrossKink) {
  auto w = Tensor({1}, {1e-7});
  ad::KinkMonitor mon;
  ad::relu(w);
  const auto s1 = mon.signature();
  mon.reset();
  w.mutable_values()[0] = -1e-7;
  ad::relu(w);
  EXPECT_NE(s1, mon.signature());
}

}  // namespace
}  // namespace htcim
