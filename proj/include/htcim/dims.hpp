// Copyright (c) 2026, The HTCInfoMax Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include <json.hpp>

namespace htcim {

/// Layer widths for the whole model.
struct ModelDims {
  std::size_t embed = 300;
  /// Text feature width; split evenly across the kernel sizes.
  std::size_t text = 300;
  std::vector<std::size_t> kernel_sizes{2, 3, 4};
  /// Label representation width. Attention needs text == label.
  std::size_t label = 300;
  std::size_t mi_conv = 512;
  std::size_t mi_hidden = 512;
  std::size_t prior_hidden1 = 1000;
  std::size_t prior_hidden2 = 200;

  /// Throws ConfigError for zero widths, uneven channel splits or text != label.
  void validate() const;
  nlohmann::json to_json() const;
  static ModelDims from_json(const nlohmann::json& j);
  bool operator==(const ModelDims&) const = default;
};

}  // namespace htcim
