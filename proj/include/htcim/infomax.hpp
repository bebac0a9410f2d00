// Copyright (c) 2026, The HTCInfoMax Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "htcim/autodiff.hpp"
#include "htcim/dataio.hpp"
#include "htcim/dims.hpp"
#include "htcim/encoders.hpp"
#include "htcim/params.hpp"

namespace htcim {

/// Scores (text, label) pairs: a two-layer conv stack summarises the text,
/// the summary is joined with the label vector and fed to a 3-layer MLP.
/// Outputs are logits; sigmoid gives the "matched" probability.
class MIDiscriminator {
 public:
  MIDiscriminator() = default;
  MIDiscriminator(ParamRegistry& reg, const ModelDims& dims, Rng& rng, bool zero_init = false);

  /// token_feats [B×S×d_t] -> [B×mi_conv].
  ad::Tensor summarize(const ad::Tensor& token_feats, std::span<const double> mask) const;
  /// summaries [P×mi_conv], labels [P×d_y] -> [P×1] logits.
  ad::Tensor score_pairs(const ad::Tensor& summaries, const ad::Tensor& labels) const;
  /// Single pair: token_feats [S×d_t] (all valid), label [d_y] -> scalar logit.
  ad::Tensor score(const ad::Tensor& token_feats, const ad::Tensor& label) const;

  std::vector<LayerSpec> layers() const;

 private:
  Conv1d conv1_, conv2_;
  Linear fc1_, fc2_, fc3_;
};

/// Positive pair (b, j) for each ground-truth column j of document b and a
/// negative ((b+1) mod B, j) with the same label. Requires B >= 2.
struct MIPairs {
  std::vector<std::size_t> text_rows;
  std::vector<std::size_t> label_rows;
  std::vector<double> targets;  // 1 for the first half, 0 for the second
};

MIPairs mi_pairs(const std::vector<std::vector<std::size_t>>& target_columns);

/// Mean over positives of softplus(-T) plus mean over negatives of softplus(T).
/// Equals 2 ln 2 when every logit is zero.
ad::Tensor mi_loss(const TextFeatures& text, const LabelRepresentations& labels,
                   const Batch& batch, const MIDiscriminator& disc);
ad::Tensor mi_loss(const ad::Tensor& summaries, const ad::Tensor& label_matrix,
                   const MIPairs& pairs, const MIDiscriminator& disc);

/// N×dim draws from U[0, 1), a pure function of seed.
ad::Tensor sample_prior(std::size_t count, std::size_t dim, std::uint64_t seed);

/// d_y -> hidden1 (ReLU) -> hidden2 (ReLU) -> 1 (sigmoid).
class PriorDiscriminator {
 public:
  PriorDiscriminator() = default;
  PriorDiscriminator(ParamRegistry& reg, const ModelDims& dims, Rng& rng, bool zero_init = false);

  /// [M×d_y] -> [M×1] pre-sigmoid logits.
  ad::Tensor logits(const ad::Tensor& x) const;
  ad::Tensor probability(const ad::Tensor& x) const { return ad::sigmoid(logits(x)); }
  std::vector<LayerSpec> layers() const;

 private:
  Linear fc1_, fc2_, fc3_;
};

/// How gradients from the fake branch reach the structure encoder.
enum class PriorRouting {
  /// Encoder receives the negated gradient (adversarial).
  kReversal,
  /// Encoder receives the plain gradient of L_pr.
  kPlain,
};

/// Mean over labels of softplus(-D(prior_i)) + softplus(D(y_i)): the
/// discriminator separates prior draws (real) from label vectors (fake).
ad::Tensor prior_matching_loss(const LabelRepresentations& labels, const ad::Tensor& prior,
                               const PriorDiscriminator& disc,
                               PriorRouting routing = PriorRouting::kReversal);
/// Per-label terms of the above, values only.
std::vector<double> prior_matching_terms(const LabelRepresentations& labels,
                                         const ad::Tensor& prior, const PriorDiscriminator& disc);

/// F = sigmoid(mean_b(text) · w_t + mean_j(labels) · w_y + c) in (0, 1).
class LossWeightEstimator {
 public:
  LossWeightEstimator() = default;
  LossWeightEstimator(ParamRegistry& reg, const ModelDims& dims, Rng& rng, bool zero_init = false);

  /// pooled [B×d_t], label matrix [N×d_y] -> scalar.
  ad::Tensor forward(const ad::Tensor& pooled, const ad::Tensor& labels) const;

 private:
  ad::Tensor w_text_, w_label_, bias_;
};

/// Scalar value of each loss term after a forward pass.
struct LossBundle {
  double L_c = 0.0;
  double L_MI = 0.0;
  double L_pr = 0.0;
  double F = 0.0;
  double L = 0.0;
};

struct LossTerms {
  ad::Tensor L_c;
  ad::Tensor L_MI;  // undefined when the MI term is disabled
  ad::Tensor L_pr;  // undefined when the prior term is disabled
  ad::Tensor F;     // undefined unless both terms are enabled
};

struct TotalLoss {
  ad::Tensor L;
  LossBundle values;
};

/// Both terms on: L_c + F·L_MI + (1-F)·L_pr. With one term disabled the
/// other enters with weight 1 and F is reported as 1 (MI only) or 0 (prior
/// only); with both off L = L_c and F is reported as 0.5. Throws
/// NumericError naming any non-finite term.
TotalLoss total_loss(const LossTerms& terms);
double total_loss(double l_c, double l_mi, double l_pr, double f);

}  // namespace htcim
