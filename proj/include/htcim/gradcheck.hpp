// Copyright (c) 2026, The HTCInfoMax Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "htcim/autodiff.hpp"

namespace htcim {

using NamedTensors = std::vector<std::pair<std::string, ad::Tensor>>;

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  // Denominator floor of the relative error, so entries whose true gradient
  // is ~0 are compared absolutely.
  double abs_floor = 1e-6;
  // 0 checks every entry; otherwise a seeded sample of this many per tensor.
  std::size_t max_entries_per_param = 0;
  std::uint64_t seed = 0;
};

struct ParamGradCheck {
  std::string name;
  std::size_t checked = 0;
  // Entries whose ±step evaluations flipped some ReLU input sign.
  std::size_t skipped_kinks = 0;
  double max_rel_error = 0.0;
  bool passed = true;
};

struct GradCheckReport {
  std::vector<ParamGradCheck> params;
  double max_rel_error = 0.0;
  std::size_t evaluations = 0;
  bool passed = true;
};

/// |analytic - numeric| / max(|analytic|, |numeric|, floor).
double relative_error(double analytic, double numeric, double floor);

/// (f(x+h) - f(x-h)) / 2h for one entry of `param`, restoring it afterwards.
double central_difference(const std::function<double()>& f, ad::Tensor& param,
                          std::size_t index, double step);

/// Compares backward() against central differences for every listed tensor.
/// loss_fn must be deterministic: it is evaluated twice up front and a
/// mismatch raises ContractError.
GradCheckReport finite_difference_check(const std::function<ad::Tensor()>& loss_fn,
                                        const NamedTensors& params,
                                        const GradCheckOptions& options = {});

}  // namespace htcim
