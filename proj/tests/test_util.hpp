// Copyright (c) 2026, The HTCInfoMax Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "htcim/autodiff.hpp"
#include "htcim/dims.hpp"
#include "htcim/gradcheck.hpp"
#include "htcim/params.hpp"
#include "htcim/random.hpp"

namespace htcim::testing {

/// Hand-rolled generator for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  std::size_t size(std::size_t lo, std::size_t hi) { return lo + rng_.below(hi - lo + 1); }
  double real(double lo = -1.0, double hi = 1.0) { return rng_.uniform(lo, hi); }
  bool coin(double p = 0.5) { return rng_.uniform() < p; }

  std::vector<double> reals(std::size_t n, double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = real(lo, hi);
    return v;
  }
  ad::Tensor tensor(ad::Shape shape, double lo = -1.0, double hi = 1.0) {
    const auto n = ad::shape_numel(shape);
    return ad::Tensor(std::move(shape), reals(n, lo, hi));
  }
  ad::Tensor param(ad::Shape shape, double lo = -1.0, double hi = 1.0) {
    auto t = tensor(std::move(shape), lo, hi);
    t.set_requires_grad(true);
    return t;
  }
  Rng& rng() { return rng_; }

 private:
  Rng rng_;
};

/// Small widths that keep exhaustive finite-difference checks fast.
inline ModelDims tiny_dims(std::size_t width = 6) {
  ModelDims d;
  d.embed = 5;
  d.text = width;
  d.kernel_sizes = {2, 3, 4};
  if (width % 3 != 0) d.kernel_sizes = {3};
  d.label = width;
  d.mi_conv = 7;
  d.mi_hidden = 5;
  d.prior_hidden1 = 6;
  d.prior_hidden2 = 4;
  return d;
}

inline void expect_grad_ok(const GradCheckReport& r) {
  EXPECT_TRUE(r.passed) << "max rel error " << r.max_rel_error;
  for (const auto& p : r.params) {
    EXPECT_TRUE(p.passed) << p.name << " rel error " << p.max_rel_error;
    EXPECT_GT(p.checked, 0u) << p.name << " had no checkable entries";
  }
}

inline GradCheckReport grad_check(const std::function<ad::Tensor()>& f, const NamedTensors& params) {
  return finite_difference_check(f, params);
}

/// Adds U(-amount, amount) to every parameter. Keeps zero-initialised biases
/// off ReLU kinks, so finite differences can probe them.
inline void jitter(ParamRegistry& reg, std::uint64_t seed, double amount = 0.05) {
  Rng rng(seed);
  for (const auto& e : reg.entries()) {
    auto t = e.tensor;
    for (auto& v : t.mutable_values()) v += rng.uniform(-amount, amount);
  }
}

/// Fresh directory under the system temp path, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("htcim_" + tag + "_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
             "_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace htcim::testing
