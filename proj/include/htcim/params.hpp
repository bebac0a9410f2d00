// Copyright (c) 2026, The HTCInfoMax Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "htcim/autodiff.hpp"
#include "htcim/gradcheck.hpp"
#include "htcim/random.hpp"

namespace htcim {

/// Parameter groups; the optimizer updates only the groups a run enables.
enum class ParamGroup { kText, kStructure, kHead, kMutualInfo, kPrior, kWeight };

std::string_view to_string(ParamGroup group);

/// Owns every trainable tensor under a unique name, in registration order.
class ParamRegistry {
 public:
  struct Entry {
    std::string name;
    ParamGroup group;
    ad::Tensor tensor;
  };

  /// Marks the tensor as requiring grad. Throws ContractError on a duplicate name.
  ad::Tensor add(std::string name, ParamGroup group, ad::Tensor tensor);

  bool contains(std::string_view name) const;
  /// Throws IndexError for unknown names.
  const ad::Tensor& get(std::string_view name) const;
  const Entry& entry(std::string_view name) const;
  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t element_count() const;

  NamedTensors named() const;
  void clear_grads();

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// U(lo, hi) entries drawn in row-major order.
ad::Tensor uniform_tensor(ad::Shape shape, double lo, double hi, Rng& rng);
/// U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
ad::Tensor fan_in_uniform(ad::Shape shape, std::size_t fan_in, Rng& rng);

/// y = x W + b over the last axis of a rank-2 input.
class Linear {
 public:
  Linear() = default;
  /// zero_init gives all-zero weights and bias.
  Linear(ParamRegistry& reg, const std::string& name, ParamGroup group, std::size_t in,
         std::size_t out, Rng& rng, bool zero_init = false);

  ad::Tensor operator()(const ad::Tensor& x) const;
  std::size_t in() const { return in_; }
  std::size_t out() const { return out_; }
  const ad::Tensor& weight() const { return weight_; }
  const ad::Tensor& bias() const { return bias_; }

 private:
  ad::Tensor weight_, bias_;
  std::size_t in_ = 0, out_ = 0;
};

/// Same-length 1-D convolution over [B×S×C] (or [S×C]) plus bias.
class Conv1d {
 public:
  Conv1d() = default;
  Conv1d(ParamRegistry& reg, const std::string& name, ParamGroup group, std::size_t taps,
         std::size_t in, std::size_t out, Rng& rng, bool zero_init = false);

  ad::Tensor operator()(const ad::Tensor& x) const;
  std::size_t taps() const { return taps_; }
  std::size_t in() const { return in_; }
  std::size_t out() const { return out_; }

 private:
  ad::Tensor kernel_, bias_;
  std::size_t taps_ = 0, in_ = 0, out_ = 0;
};

/// Description of one layer for architecture introspection.
struct LayerSpec {
  std::string name;
  std::string kind;  // "linear" or "conv1d"
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t taps = 0;  // conv only
  std::string activation;  // "relu", "sigmoid" or "none"

  bool operator==(const LayerSpec&) const = default;
};

/// Masked average over the sequence axis: x [B×S×D], mask B×S -> [B×D].
/// Rows with no real token average to zero.
ad::Tensor masked_mean_pool(const ad::Tensor& x, std::span<const double> mask);

}  // namespace htcim
