// Copyright (c) 2026, The HTCInfoMax Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "htcim/autodiff.hpp"
#include "htcim/dataio.hpp"
#include "htcim/dims.hpp"
#include "htcim/params.hpp"
#include "htcim/taxonomy.hpp"

namespace htcim {

struct TextFeatures {
  ad::Tensor token_feats;  // [B×S×d_t], zero at padded positions
  ad::Tensor pooled;       // [B×d_t], masked mean of token_feats
  std::vector<double> mask;
  std::size_t batch = 0;
  std::size_t seq = 0;
};

/// Embedding, parallel same-length convolutions (one per kernel size,
/// concatenated), ReLU, then re-masking.
class TextEncoder {
 public:
  TextEncoder() = default;
  TextEncoder(ParamRegistry& reg, const ModelDims& dims, std::size_t vocab_size, Rng& rng);

  TextFeatures forward(const Batch& batch) const;
  /// Raw entry point: token_ids and mask are row-major B×S.
  TextFeatures forward(std::span<const std::size_t> token_ids, std::span<const double> mask,
                       std::size_t batch, std::size_t seq) const;

  const ad::Tensor& embedding() const { return embedding_; }
  std::size_t width() const { return width_; }

 private:
  ad::Tensor embedding_;
  std::vector<Conv1d> convs_;
  std::size_t vocab_ = 0;
  std::size_t width_ = 0;
};

struct LabelRepresentations {
  ad::Tensor matrix;  // [N×d_y], row j is target column j
};

/// One propagation step: act(Â H W + b).
ad::Tensor gcn_layer(const ad::Tensor& adjacency, const ad::Tensor& h, const ad::Tensor& weight,
                     const ad::Tensor& bias, bool apply_relu);

/// Two-layer graph convolution over the taxonomy (root included) with
/// learnable node inputs. Output drops the root row.
class StructureEncoder {
 public:
  StructureEncoder() = default;
  StructureEncoder(ParamRegistry& reg, const ModelDims& dims, const Taxonomy& tax, Rng& rng);

  LabelRepresentations forward() const;
  /// Inputs as given (the gradient check substitutes its own copies).
  LabelRepresentations forward(const ad::Tensor& node_inputs, const ad::Tensor& w0,
                               const ad::Tensor& b0, const ad::Tensor& w1,
                               const ad::Tensor& b1) const;

  const ad::Tensor& adjacency() const { return adjacency_; }
  const ad::Tensor& node_inputs() const { return nodes_; }

 private:
  ad::Tensor adjacency_;
  ad::Tensor nodes_, w0_, b0_, w1_, b1_;
  std::vector<std::size_t> targets_;
};

/// Label-aware text features: per label, an attention-weighted sum of the
/// token features.
struct LabelAwareFeatures {
  ad::Tensor matrix;     // [B×N×d]
  ad::Tensor attention;  // [B×S×N], column (b, ·, j) sums to 1 over valid tokens
  std::size_t batch = 0, seq = 0, labels = 0;

  /// Attention weight of label j on token s of document b.
  double weight(std::size_t b, std::size_t j, std::size_t s) const;
};

/// Softmax over tokens of token·label scores; padded tokens get weight 0.
LabelAwareFeatures multi_label_attention(const TextFeatures& text,
                                         const LabelRepresentations& labels);

}  // namespace htcim
