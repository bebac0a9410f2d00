// Copyright (c) 2026, The HTCInfoMax Authors
// SPDX-License-Identifier: Apache-2.0
#include "htcim/encoders.hpp"

#include <algorithm>

#include "htcim/errors.hpp"

namespace htcim {

void ModelDims::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("model dims: " + msg); };
  if (embed == 0 || text == 0 || label == 0 || mi_conv == 0 || mi_hidden == 0 ||
      prior_hidden1 == 0 || prior_hidden2 == 0)
    fail("all widths must be positive");
  if (kernel_sizes.empty()) fail("at least one kernel size is required");
  for (std::size_t k : kernel_sizes)
    if (k == 0) fail("kernel sizes must be positive");
  if (text % kernel_sizes.size() != 0)
    fail("text width " + std::to_string(text) + " is not divisible by " +
         std::to_string(kernel_sizes.size()) + " kernel sizes");
  if (text != label)
    fail("attention needs text width == label width (" + std::to_string(text) + " vs " +
         std::to_string(label) + ")");
}

nlohmann::json ModelDims::to_json() const {
  return {{"embed", embed},           {"text", text},
          {"kernel_sizes", kernel_sizes}, {"label", label},
          {"mi_conv", mi_conv},       {"mi_hidden", mi_hidden},
          {"prior_hidden1", prior_hidden1}, {"prior_hidden2", prior_hidden2}};
}

ModelDims ModelDims::from_json(const nlohmann::json& j) {
  ModelDims d;
  try {
    d.embed = j.value("embed", d.embed);
    d.text = j.value("text", d.text);
    d.kernel_sizes = j.value("kernel_sizes", d.kernel_sizes);
    d.label = j.value("label", d.label);
    d.mi_conv = j.value("mi_conv", d.mi_conv);
    d.mi_hidden = j.value("mi_hidden", d.mi_hidden);
    d.prior_hidden1 = j.value("prior_hidden1", d.prior_hidden1);
    d.prior_hidden2 = j.value("prior_hidden2", d.prior_hidden2);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model dims: ") + e.what());
  }
  return d;
}

// ---- text encoder ----------------------------------------------------------

TextEncoder::TextEncoder(ParamRegistry& reg, const ModelDims& dims, std::size_t vocab_size,
                         Rng& rng)
    : vocab_(vocab_size), width_(dims.text) {
  dims.validate();
  if (vocab_size < 2) throw ConfigError("text encoder: vocabulary must hold the reserved tokens");
  embedding_ = reg.add("text.embedding", ParamGroup::kText,
                       uniform_tensor({vocab_size, dims.embed}, -0.1, 0.1, rng));
  const std::size_t channels = dims.text / dims.kernel_sizes.size();
  for (std::size_t k : dims.kernel_sizes) {
    convs_.emplace_back(reg, "text.conv" + std::to_string(k), ParamGroup::kText, k, dims.embed,
                        channels, rng);
  }
}

TextFeatures TextEncoder::forward(const Batch& batch) const {
  return forward(batch.token_ids, batch.mask, batch.size, batch.seq_len);
}

TextFeatures TextEncoder::forward(std::span<const std::size_t> token_ids,
                                  std::span<const double> mask, std::size_t batch,
                                  std::size_t seq) const {
  if (token_ids.size() != batch * seq || mask.size() != batch * seq) {
    throw DimensionError("text encoder: token/mask size does not match " + std::to_string(batch) +
                         "x" + std::to_string(seq));
  }
  if (batch == 0 || seq == 0) throw DimensionError("text encoder: empty batch");
  // Zeroing padded embeddings makes each document independent of how far
  // its batch was padded: convolution sees zeros either way.
  auto emb = ad::scale_rows(ad::embedding_lookup(embedding_, token_ids), mask);
  emb = ad::reshape(emb, {batch, seq, embedding_.dim(1)});
  std::vector<ad::Tensor> maps;
  maps.reserve(convs_.size());
  for (const auto& conv : convs_) maps.push_back(conv(emb));
  auto feats = maps.size() == 1 ? maps.front() : ad::concat(maps, 2);
  feats = ad::scale_rows(ad::relu(feats), mask);

  TextFeatures out;
  out.pooled = masked_mean_pool(feats, mask);
  out.token_feats = std::move(feats);
  out.mask.assign(mask.begin(), mask.end());
  out.batch = batch;
  out.seq = seq;
  return out;
}

// ---- structure encoder -----------------------------------------------------

ad::Tensor gcn_layer(const ad::Tensor& adjacency, const ad::Tensor& h, const ad::Tensor& weight,
                     const ad::Tensor& bias, bool apply_relu) {
  auto z = ad::add_row_bias(ad::matmul(ad::matmul(adjacency, h), weight), bias);
  return apply_relu ? ad::relu(z) : z;
}

StructureEncoder::StructureEncoder(ParamRegistry& reg, const ModelDims& dims,
                                   const Taxonomy& tax, Rng& rng)
    : adjacency_(normalized_adjacency(tax)), targets_(tax.target_labels()) {
  const std::size_t n = tax.size(), d = dims.label;
  nodes_ = reg.add("structure.nodes", ParamGroup::kStructure,
                   uniform_tensor({n, d}, -0.1, 0.1, rng));
  w0_ = reg.add("structure.gcn0.weight", ParamGroup::kStructure, fan_in_uniform({d, d}, d, rng));
  b0_ = reg.add("structure.gcn0.bias", ParamGroup::kStructure, ad::Tensor({d}));
  w1_ = reg.add("structure.gcn1.weight", ParamGroup::kStructure, fan_in_uniform({d, d}, d, rng));
  b1_ = reg.add("structure.gcn1.bias", ParamGroup::kStructure, ad::Tensor({d}));
}

LabelRepresentations StructureEncoder::forward() const {
  return forward(nodes_, w0_, b0_, w1_, b1_);
}

LabelRepresentations StructureEncoder::forward(const ad::Tensor& node_inputs,
                                               const ad::Tensor& w0, const ad::Tensor& b0,
                                               const ad::Tensor& w1,
                                               const ad::Tensor& b1) const {
  const auto h1 = gcn_layer(adjacency_, node_inputs, w0, b0, true);
  const auto y = gcn_layer(adjacency_, h1, w1, b1, false);
  return {ad::embedding_lookup(y, targets_)};
}

// ---- attention -------------------------------------------------------------

double LabelAwareFeatures::weight(std::size_t b, std::size_t j, std::size_t s) const {
  if (b >= batch || j >= labels || s >= seq) throw IndexError("attention index out of range");
  return attention.values()[(b * seq + s) * labels + j];
}

LabelAwareFeatures multi_label_attention(const TextFeatures& text,
                                         const LabelRepresentations& labels) {
  const auto& tf = text.token_feats;
  const auto& y = labels.matrix;
  if (tf.rank() != 3 || y.rank() != 2) throw DimensionError("attention: expected [B×S×d] and [N×d]");
  if (tf.dim(2) != y.dim(1)) {
    throw DimensionError("attention: text width " + std::to_string(tf.dim(2)) +
                         " != label width " + std::to_string(y.dim(1)));
  }
  const std::size_t b = tf.dim(0), s = tf.dim(1), n = y.dim(0), d = tf.dim(2);
  if (text.mask.size() != b * s) throw DimensionError("attention: mask size mismatch");
  auto scores = ad::matmul(ad::reshape(tf, {b * s, d}), ad::transpose(y));
  scores = ad::reshape(scores, {b, s, n});
  std::vector<double> mask(b * s * n);
  for (std::size_t r = 0; r < b * s; ++r)
    std::fill_n(mask.begin() + static_cast<std::ptrdiff_t>(r * n), n, text.mask[r]);

  LabelAwareFeatures out;
  out.attention = ad::softmax(scores, 1, &mask);
  out.matrix = ad::batched_matmul(out.attention, tf, true, false);
  out.batch = b;
  out.seq = s;
  out.labels = n;
  return out;
}

}  // namespace htcim
