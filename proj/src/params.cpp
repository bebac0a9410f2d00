// Copyright (c) 2026, The HTCInfoMax Authors
// SPDX-License-Identifier: Apache-2.0
#include "htcim/params.hpp"

#include <cmath>

#include "htcim/errors.hpp"

namespace htcim {

std::string_view to_string(ParamGroup group) {
  switch (group) {
    case ParamGroup::kText: return "text";
    case ParamGroup::kStructure: return "structure";
    case ParamGroup::kHead: return "head";
    case ParamGroup::kMutualInfo: return "mi";
    case ParamGroup::kPrior: return "prior";
    case ParamGroup::kWeight: return "weight";
  }
  return "unknown";
}

ad::Tensor ParamRegistry::add(std::string name, ParamGroup group, ad::Tensor tensor) {
  if (index_.count(name)) throw ContractError("duplicate parameter name '" + name + "'");
  tensor.set_requires_grad(true);
  index_.emplace(name, entries_.size());
  entries_.push_back({std::move(name), group, tensor});
  return tensor;
}

bool ParamRegistry::contains(std::string_view name) const {
  return index_.count(std::string(name)) > 0;
}

const ParamRegistry::Entry& ParamRegistry::entry(std::string_view name) const {
  const auto it = index_.find(std::string(name));
  if (it == index_.end()) throw IndexError("unknown parameter '" + std::string(name) + "'");
  return entries_[it->second];
}

const ad::Tensor& ParamRegistry::get(std::string_view name) const { return entry(name).tensor; }

std::size_t ParamRegistry::element_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.tensor.numel();
  return n;
}

NamedTensors ParamRegistry::named() const {
  NamedTensors out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.emplace_back(e.name, e.tensor);
  return out;
}

void ParamRegistry::clear_grads() {
  for (auto& e : entries_) e.tensor.clear_grad();
}

ad::Tensor uniform_tensor(ad::Shape shape, double lo, double hi, Rng& rng) {
  std::vector<double> v(ad::shape_numel(shape));
  for (auto& x : v) x = rng.uniform(lo, hi);
  return ad::Tensor(std::move(shape), std::move(v));
}

ad::Tensor fan_in_uniform(ad::Shape shape, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  return uniform_tensor(std::move(shape), -bound, bound, rng);
}

Linear::Linear(ParamRegistry& reg, const std::string& name, ParamGroup group, std::size_t in,
               std::size_t out, Rng& rng, bool zero_init)
    : in_(in), out_(out) {
  weight_ = reg.add(name + ".weight", group,
                    zero_init ? ad::Tensor({in, out}) : fan_in_uniform({in, out}, in, rng));
  bias_ = reg.add(name + ".bias", group, ad::Tensor({out}));
}

ad::Tensor Linear::operator()(const ad::Tensor& x) const {
  return ad::add_row_bias(ad::matmul(x, weight_), bias_);
}

Conv1d::Conv1d(ParamRegistry& reg, const std::string& name, ParamGroup group, std::size_t taps,
               std::size_t in, std::size_t out, Rng& rng, bool zero_init)
    : taps_(taps), in_(in), out_(out) {
  kernel_ = reg.add(name + ".kernel", group,
                    zero_init ? ad::Tensor({taps, in, out})
                              : fan_in_uniform({taps, in, out}, taps * in, rng));
  bias_ = reg.add(name + ".bias", group, ad::Tensor({out}));
}

ad::Tensor Conv1d::operator()(const ad::Tensor& x) const {
  return ad::add_row_bias(ad::conv1d(x, kernel_), bias_);
}

ad::Tensor masked_mean_pool(const ad::Tensor& x, std::span<const double> mask) {
  if (x.rank() != 3) throw DimensionError("masked_mean_pool: expected [B×S×D], got " + ad::to_string(x.shape()));
  const std::size_t b = x.dim(0), s = x.dim(1), d = x.dim(2);
  if (mask.size() != b * s) {
    throw DimensionError("masked_mean_pool: mask has " + std::to_string(mask.size()) +
                         " entries, expected " + std::to_string(b * s));
  }
  std::vector<double> pool(b * b * s, 0.0);
  for (std::size_t i = 0; i < b; ++i) {
    double count = 0.0;
    for (std::size_t t = 0; t < s; ++t) count += mask[i * s + t];
    if (count == 0.0) continue;
    for (std::size_t t = 0; t < s; ++t) pool[i * b * s + i * s + t] = mask[i * s + t] / count;
  }
  return ad::matmul(ad::Tensor({b, b * s}, std::move(pool)), ad::reshape(x, {b * s, d}));
}

}  // namespace htcim
