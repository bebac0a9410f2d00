// Copyright (c) 2026, The HTCInfoMax Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "htcim/params.hpp"
#include "htcim/trainer.hpp"

namespace htcim {

/// Binary layout, little-endian:
///   "HTCIMCKP" u32 version
///   u64 meta_len, meta JSON bytes
///   u64 n_params, then per parameter: u32 name_len, name, u32 rank,
///     u64 dims[rank], f64 values[numel]
///   u64 adam_step, u64 n_moments, then per entry: u32 name_len, name,
///     u64 numel, f64 m[numel], f64 v[numel]
///   "HTCIMEND"
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointData {
  nlohmann::json meta;
  std::vector<std::pair<std::string, ad::Tensor>> params;
  AdamState adam;
};

void write_checkpoint(std::ostream& out, const ParamRegistry& params, const AdamState& adam,
                      const nlohmann::json& meta);
void save_checkpoint(const std::string& path, const ParamRegistry& params, const AdamState& adam,
                     const nlohmann::json& meta);

/// Throws CheckpointError on bad magic, version mismatch or truncation.
CheckpointData read_checkpoint(std::istream& in);
CheckpointData load_checkpoint(const std::string& path);

/// Copies stored values into the registry. The name sets must match and
/// every shape must agree; otherwise CheckpointError names the parameter.
void restore_params(ParamRegistry& params, const CheckpointData& data);

}  // namespace htcim
