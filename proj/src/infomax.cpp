// Copyright (c) 2026, The HTCInfoMax Authors
// SPDX-License-Identifier: Apache-2.0
#include "htcim/infomax.hpp"

#include <cmath>
#include <utility>

#include "htcim/errors.hpp"

namespace htcim {

namespace {

constexpr std::size_t kMiConvTaps = 3;

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

}  // namespace

// ---- mutual information ----------------------------------------------------

MIDiscriminator::MIDiscriminator(ParamRegistry& reg, const ModelDims& dims, Rng& rng,
                                 bool zero_init) {
  const auto g = ParamGroup::kMutualInfo;
  conv1_ = Conv1d(reg, "mi.conv1", g, kMiConvTaps, dims.text, dims.text, rng, zero_init);
  conv2_ = Conv1d(reg, "mi.conv2", g, kMiConvTaps, dims.text, dims.mi_conv, rng, zero_init);
  fc1_ = Linear(reg, "mi.fc1", g, dims.mi_conv + dims.label, dims.mi_hidden, rng, zero_init);
  fc2_ = Linear(reg, "mi.fc2", g, dims.mi_hidden, dims.mi_hidden, rng, zero_init);
  fc3_ = Linear(reg, "mi.fc3", g, dims.mi_hidden, 1, rng, zero_init);
}

ad::Tensor MIDiscriminator::summarize(const ad::Tensor& token_feats,
                                      std::span<const double> mask) const {
  auto h = ad::scale_rows(ad::relu(conv1_(token_feats)), mask);
  return masked_mean_pool(conv2_(h), mask);
}

ad::Tensor MIDiscriminator::score_pairs(const ad::Tensor& summaries,
                                        const ad::Tensor& labels) const {
  if (summaries.rank() != 2 || labels.rank() != 2 || summaries.dim(0) != labels.dim(0)) {
    throw DimensionError("mi score: expected [P×" + std::to_string(conv2_.out()) + "] and [P×d_y], got " +
                         ad::to_string(summaries.shape()) + " and " + ad::to_string(labels.shape()));
  }
  auto h = ad::concat({summaries, labels}, 1);
  h = ad::relu(fc1_(h));
  h = ad::relu(fc2_(h));
  return fc3_(h);
}

ad::Tensor MIDiscriminator::score(const ad::Tensor& token_feats, const ad::Tensor& label) const {
  if (token_feats.rank() != 2 || label.rank() != 1) {
    throw DimensionError("mi score: expected [S×d_t] and [d_y]");
  }
  const std::size_t s = token_feats.dim(0);
  const std::vector<double> mask(s, 1.0);
  const auto summary = summarize(ad::reshape(token_feats, {1, s, token_feats.dim(1)}), mask);
  return ad::reshape(score_pairs(summary, ad::reshape(label, {1, label.dim(0)})), {});
}

std::vector<LayerSpec> MIDiscriminator::layers() const {
  return {{"mi.conv1", "conv1d", conv1_.in(), conv1_.out(), conv1_.taps(), "relu"},
          {"mi.conv2", "conv1d", conv2_.in(), conv2_.out(), conv2_.taps(), "none"},
          {"mi.fc1", "linear", fc1_.in(), fc1_.out(), 0, "relu"},
          {"mi.fc2", "linear", fc2_.in(), fc2_.out(), 0, "relu"},
          {"mi.fc3", "linear", fc3_.in(), fc3_.out(), 0, "none"}};
}

MIPairs mi_pairs(const std::vector<std::vector<std::size_t>>& target_columns) {
  const std::size_t b = target_columns.size();
  if (b < 2) throw ContractError("negative sampling requires batch >= 2");
  MIPairs p;
  for (std::size_t i = 0; i < b; ++i) {
    if (target_columns[i].empty()) throw ContractError("mi pairs: document without labels");
    for (std::size_t col : target_columns[i]) {
      p.text_rows.push_back(i);
      p.label_rows.push_back(col);
    }
  }
  const std::size_t positives = p.text_rows.size();
  for (std::size_t k = 0; k < positives; ++k) {
    p.text_rows.push_back((p.text_rows[k] + 1) % b);
    p.label_rows.push_back(p.label_rows[k]);
  }
  p.targets.assign(positives, 1.0);
  p.targets.resize(2 * positives, 0.0);
  return p;
}

ad::Tensor mi_loss(const ad::Tensor& summaries, const ad::Tensor& label_matrix,
                   const MIPairs& pairs, const MIDiscriminator& disc) {
  const auto text = ad::embedding_lookup(summaries, pairs.text_rows);
  const auto labels = ad::embedding_lookup(label_matrix, pairs.label_rows);
  // Equal positive and negative counts, so twice the pooled mean is the sum
  // of the two per-class means.
  return ad::scale(ad::bce_with_logits(disc.score_pairs(text, labels), pairs.targets), 2.0);
}

ad::Tensor mi_loss(const TextFeatures& text, const LabelRepresentations& labels,
                   const Batch& batch, const MIDiscriminator& disc) {
  const auto pairs = mi_pairs(batch.target_columns);
  return mi_loss(disc.summarize(text.token_feats, text.mask), labels.matrix, pairs, disc);
}

// ---- label prior -----------------------------------------------------------

ad::Tensor sample_prior(std::size_t count, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  return uniform_tensor({count, dim}, 0.0, 1.0, rng);
}

PriorDiscriminator::PriorDiscriminator(ParamRegistry& reg, const ModelDims& dims, Rng& rng,
                                       bool zero_init) {
  const auto g = ParamGroup::kPrior;
  fc1_ = Linear(reg, "prior.fc1", g, dims.label, dims.prior_hidden1, rng, zero_init);
  fc2_ = Linear(reg, "prior.fc2", g, dims.prior_hidden1, dims.prior_hidden2, rng, zero_init);
  fc3_ = Linear(reg, "prior.fc3", g, dims.prior_hidden2, 1, rng, zero_init);
}

ad::Tensor PriorDiscriminator::logits(const ad::Tensor& x) const {
  if (x.rank() != 2 || x.dim(1) != fc1_.in()) {
    throw DimensionError("prior discriminator: expected [M×" + std::to_string(fc1_.in()) +
                         "], got " + ad::to_string(x.shape()));
  }
  return fc3_(ad::relu(fc2_(ad::relu(fc1_(x)))));
}

std::vector<LayerSpec> PriorDiscriminator::layers() const {
  return {{"prior.fc1", "linear", fc1_.in(), fc1_.out(), 0, "relu"},
          {"prior.fc2", "linear", fc2_.in(), fc2_.out(), 0, "relu"},
          {"prior.fc3", "linear", fc3_.in(), fc3_.out(), 0, "sigmoid"}};
}

ad::Tensor prior_matching_loss(const LabelRepresentations& labels, const ad::Tensor& prior,
                               const PriorDiscriminator& disc, PriorRouting routing) {
  const auto& y = labels.matrix;
  if (prior.shape() != y.shape()) {
    throw DimensionError("prior matching: prior " + ad::to_string(prior.shape()) +
                         " does not match labels " + ad::to_string(y.shape()));
  }
  const auto fake = routing == PriorRouting::kReversal ? ad::grad_reverse(y) : y;
  const auto logits = ad::concat({disc.logits(prior), disc.logits(fake)}, 0);
  std::vector<double> targets(2 * y.dim(0), 0.0);
  std::fill_n(targets.begin(), y.dim(0), 1.0);
  return ad::scale(ad::bce_with_logits(logits, targets), 2.0);
}

std::vector<double> prior_matching_terms(const LabelRepresentations& labels,
                                         const ad::Tensor& prior, const PriorDiscriminator& disc) {
  ad::NoGradGuard guard;
  const auto real_logits = disc.logits(prior);
  const auto fake_logits = disc.logits(labels.matrix);
  const auto real = real_logits.values(), fake = fake_logits.values();
  std::vector<double> out(real.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = softplus(-real[i]) + softplus(fake[i]);
  return out;
}

// ---- loss weighting --------------------------------------------------------

LossWeightEstimator::LossWeightEstimator(ParamRegistry& reg, const ModelDims& dims, Rng& rng,
                                         bool zero_init) {
  const std::size_t fan_in = dims.text + dims.label;
  auto init = [&](std::size_t rows) {
    return zero_init ? ad::Tensor({rows, 1}) : fan_in_uniform({rows, 1}, fan_in, rng);
  };
  w_text_ = reg.add("weight.text", ParamGroup::kWeight, init(dims.text));
  w_label_ = reg.add("weight.label", ParamGroup::kWeight, init(dims.label));
  bias_ = reg.add("weight.bias", ParamGroup::kWeight, ad::Tensor({1}));
}

ad::Tensor LossWeightEstimator::forward(const ad::Tensor& pooled, const ad::Tensor& labels) const {
  if (pooled.rank() != 2 || labels.rank() != 2) throw DimensionError("loss weight: expected rank-2 inputs");
  const std::size_t b = pooled.dim(0), n = labels.dim(0);
  const ad::Tensor avg_b({1, b}, std::vector<double>(b, 1.0 / static_cast<double>(b)));
  const ad::Tensor avg_n({1, n}, std::vector<double>(n, 1.0 / static_cast<double>(n)));
  auto z = ad::add(ad::matmul(ad::matmul(avg_b, pooled), w_text_),
                   ad::matmul(ad::matmul(avg_n, labels), w_label_));
  return ad::reshape(ad::sigmoid(ad::add_row_bias(z, bias_)), {});
}

// ---- combined objective ----------------------------------------------------

namespace {

double checked(const ad::Tensor& t, const char* name) {
  const double v = t.item();
  if (!std::isfinite(v)) throw NumericError(std::string("non-finite ") + name + " (" + std::to_string(v) + ")");
  return v;
}

}  // namespace

TotalLoss total_loss(const LossTerms& terms) {
  TotalLoss out;
  auto& v = out.values;
  v.L_c = checked(terms.L_c, "L_c");
  const bool mi = terms.L_MI.defined(), pr = terms.L_pr.defined();
  if (mi) v.L_MI = checked(terms.L_MI, "L_MI");
  if (pr) v.L_pr = checked(terms.L_pr, "L_pr");
  if (mi && pr) {
    if (!terms.F.defined()) throw ContractError("total_loss: F is required when both terms are on");
    v.F = checked(terms.F, "F");
    const auto one_minus_f = ad::add_scalar(ad::scale(terms.F, -1.0), 1.0);
    out.L = ad::add(terms.L_c, ad::add(ad::mul(terms.F, terms.L_MI), ad::mul(one_minus_f, terms.L_pr)));
  } else if (mi) {
    v.F = 1.0;
    out.L = ad::add(terms.L_c, terms.L_MI);
  } else if (pr) {
    v.F = 0.0;
    out.L = ad::add(terms.L_c, terms.L_pr);
  } else {
    v.F = 0.5;
    out.L = terms.L_c;
  }
  v.L = checked(out.L, "L");
  return out;
}

double total_loss(double l_c, double l_mi, double l_pr, double f) {
  const std::pair<const char*, double> named[] = {{"L_c", l_c}, {"L_MI", l_mi}, {"L_pr", l_pr}, {"F", f}};
  for (const auto& [name, x] : named)
    if (!std::isfinite(x)) throw NumericError(std::string("non-finite ") + name + " (" + std::to_string(x) + ")");
  return l_c + f * l_mi + (1.0 - f) * l_pr;
}

}  // namespace htcim
