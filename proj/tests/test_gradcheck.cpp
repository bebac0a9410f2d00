// Copyright (c) 2026, The HTCInfoMax Authors
// SPDX-License-Identifier: Apache-2.0
#include "htcim/errors.hpp"
#include "htcim/infomax.hpp"
#include "htcim/params.hpp"
#include "test_util.hpp"

namespace htcim {
namespace {

using ad::Tensor;

TEST(GradCheck, SquareIsExactToRoundoff) {
  auto x = Tensor({1}, {3.0});
  x.set_requires_grad();
  double captured = 0.0;
  const auto f = [&] { return ad::sum(ad::mul(x, x)); };
  const auto r = finite_difference_check(f, {{"x", x}});
  ASSERT_TRUE(r.passed);
  EXPECT_LT(r.max_rel_error, 1e-8);
  const double numeric = central_difference([&] { return f().item(); }, x, 0, 1e-5);
  captured = numeric;
  EXPECT_NEAR(captured, 6.0, 1e-8);
  EXPECT_EQ(x[0], 3.0);
}

TEST(GradCheck, DeadReluHasZeroGradient) {
  auto x = Tensor({3}, {-1.0, -2.0, -0.5});
  x.set_requires_grad();
  const auto f = [&] { return ad::sum(ad::relu(x)); };
  const auto r = finite_difference_check(f, {{"x", x}});
  EXPECT_TRUE(r.passed);
  ad::backward(f());
  for (double g : x.grad()) EXPECT_EQ(g, 0.0);
}

TEST(GradCheck, NonDeterministicLossIsContractError) {
  auto x = Tensor({1}, {1.0});
  x.set_requires_grad();
  int calls = 0;
  const auto f = [&] { return ad::add_scalar(ad::sum(x), static_cast<double>(++calls)); };
  EXPECT_THROW(finite_difference_check(f, {{"x", x}}), ContractError);
}

TEST(GradCheck, DetectsWrongGradient) {
  // grad_reverse deliberately disagrees with the forward function.
  auto x = Tensor({2}, {1.0, 2.0});
  x.set_requires_grad();
  const auto r = finite_difference_check([&] { return ad::sum(ad::grad_reverse(x)); }, {{"x", x}});
  EXPECT_FALSE(r.passed);
}

TEST(GradCheck, RelativeErrorUsesFloor) {
  EXPECT_DOUBLE_EQ(relative_error(1.0, 1.0, 1e-6), 0.0);
  EXPECT_DOUBLE_EQ(relative_error(2.0, 1.0, 1e-6), 0.5);
  EXPECT_DOUBLE_EQ(relative_error(0.0, 1e-9, 1e-6), 1e-3);
}

TEST(GradCheck, SampledEntriesAreSeeded) {
  testing::Gen g(3);
  auto x = g.param({50});
  const auto f = [&] { return ad::sum(ad::tanh(x)); };
  GradCheckOptions opt;
  opt.max_entries_per_param = 7;
  const auto r = finite_difference_check(f, {{"x", x}}, opt);
  ASSERT_EQ(r.params.size(), 1u);
  EXPECT_EQ(r.params[0].checked, 7u);
  EXPECT_TRUE(r.passed);
}

TEST(GradCheck, PriorDiscriminatorAtDefaultWidths) {
  ParamRegistry reg;
  Rng rng(5);
  ModelDims dims;
  PriorDiscriminator disc(reg, dims, rng);
  testing::Gen g(6);
  const auto x = g.tensor({1, 300});
  GradCheckOptions opt;
  opt.max_entries_per_param = 40;
  opt.seed = 11;
  const auto r = finite_difference_check([&] { return ad::sum(disc.probability(x)); }, reg.named(), opt);
  testing::expect_grad_ok(r);
  EXPECT_EQ(r.params.size(), 6u);
}

}  // namespace
}  // namespace htcim
