// Copyright (c) 2026, The HTCInfoMax Authors
// SPDX-License-Identifier: Apache-2.0
#include "htcim/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "htcim/errors.hpp"
#include "htcim/random.hpp"

namespace htcim {

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

double central_difference(const std::function<double()>& f, ad::Tensor& param,
                          std::size_t index, double step) {
  auto values = param.mutable_values();
  const double saved = values[index];
  values[index] = saved + step;
  const double up = f();
  values[index] = saved - step;
  const double down = f();
  values[index] = saved;
  return (up - down) / (2.0 * step);
}

namespace {

std::vector<std::size_t> pick_entries(std::size_t numel, std::size_t limit, Rng& rng) {
  std::vector<std::size_t> all(numel);
  std::iota(all.begin(), all.end(), std::size_t{0});
  if (limit == 0 || numel <= limit) return all;
  for (std::size_t i = 0; i < limit; ++i) std::swap(all[i], all[i + rng.below(numel - i)]);
  all.resize(limit);
  std::sort(all.begin(), all.end());
  return all;
}

bool bit_equal(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }

}  // namespace

GradCheckReport finite_difference_check(const std::function<ad::Tensor()>& loss_fn,
                                        const NamedTensors& params,
                                        const GradCheckOptions& options) {
  if (!(options.step > 0.0)) throw ContractError("finite_difference_check: step must be > 0");
  GradCheckReport report;

  auto scalar_eval = [&]() {
    ad::NoGradGuard no_grad;
    ++report.evaluations;
    return loss_fn().item();
  };

  std::uint64_t base_signature = 0;
  {
    ad::KinkMonitor monitor;
    const double first = scalar_eval();
    base_signature = monitor.signature();
    monitor.reset();
    const double second = scalar_eval();
    if (!bit_equal(first, second) || monitor.signature() != base_signature) {
      throw ContractError("finite_difference_check: loss is not deterministic (" +
                          std::to_string(first) + " vs " + std::to_string(second) + ")");
    }
  }

  NamedTensors handles = params;
  for (auto& [name, t] : handles) t.zero_grad();
  ad::Tensor loss = loss_fn();
  ++report.evaluations;
  ad::backward(loss);

  Rng rng(options.seed);
  for (auto& [name, tensor] : handles) {
    ParamGradCheck check;
    check.name = name;
    std::vector<double> analytic(tensor.numel(), 0.0);
    if (tensor.has_grad()) std::copy(tensor.grad().begin(), tensor.grad().end(), analytic.begin());

    for (std::size_t idx : pick_entries(tensor.numel(), options.max_entries_per_param, rng)) {
      auto values = tensor.mutable_values();
      const double saved = values[idx];
      ad::KinkMonitor monitor;
      values[idx] = saved + options.step;
      const double up = scalar_eval();
      const bool kink_up = monitor.signature() != base_signature;
      monitor.reset();
      values[idx] = saved - options.step;
      const double down = scalar_eval();
      const bool kink_down = monitor.signature() != base_signature;
      values[idx] = saved;
      if (kink_up || kink_down) {
        ++check.skipped_kinks;
        continue;
      }
      const double numeric = (up - down) / (2.0 * options.step);
      const double err = relative_error(analytic[idx], numeric, options.abs_floor);
      check.max_rel_error = std::max(check.max_rel_error, err);
      ++check.checked;
    }
    check.passed = check.max_rel_error <= options.tolerance;
    report.max_rel_error = std::max(report.max_rel_error, check.max_rel_error);
    report.passed = report.passed && check.passed;
    report.params.push_back(std::move(check));
  }
  return report;
}

}  // namespace htcim
