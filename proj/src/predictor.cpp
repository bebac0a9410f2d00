// Copyright (c) 2026, The HTCInfoMax Authors
// SPDX-License-Identifier: Apache-2.0
#include "htcim/predictor.hpp"

#include <algorithm>
#include <cmath>

#include "htcim/errors.hpp"

namespace htcim {

ClassifierHead::ClassifierHead(ParamRegistry& reg, const ModelDims& dims, std::size_t label_count,
                               Rng& rng, bool zero_init)
    : labels_(label_count), width_(dims.text) {
  if (label_count == 0) throw ConfigError("classifier head: no labels");
  fc_ = Linear(reg, "head.fc", ParamGroup::kHead, label_count * dims.text, label_count, rng,
               zero_init);
}

ad::Tensor ClassifierHead::logits(const LabelAwareFeatures& features) const {
  const auto& m = features.matrix;
  if (m.rank() != 3 || m.dim(1) != labels_ || m.dim(2) != width_) {
    throw DimensionError("classifier head: expected [B×" + std::to_string(labels_) + "×" +
                         std::to_string(width_) + "], got " + ad::to_string(m.shape()));
  }
  return fc_(ad::reshape(m, {m.dim(0), labels_ * width_}));
}

Predictions predictions_from_logits(const ad::Tensor& logits, double threshold) {
  if (logits.rank() != 2) throw DimensionError("predictions: expected [B×N] logits");
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw ConfigError("threshold must lie in [0, 1]");
  Predictions p;
  p.rows = logits.dim(0);
  p.cols = logits.dim(1);
  p.probs.resize(logits.numel());
  p.decisions.resize(logits.numel());
  const auto& z = logits.values();
  for (std::size_t i = 0; i < z.size(); ++i) {
    p.probs[i] = z[i] >= 0 ? 1.0 / (1.0 + std::exp(-z[i])) : std::exp(z[i]) / (1.0 + std::exp(z[i]));
    p.decisions[i] = p.probs[i] >= threshold ? 1 : 0;
  }
  return p;
}

Predictions classify(const LabelAwareFeatures& features, const ClassifierHead& head,
                     double threshold) {
  ad::NoGradGuard guard;
  return predictions_from_logits(head.logits(features), threshold);
}

ad::Tensor classification_loss(const ad::Tensor& logits, std::span<const double> targets) {
  return ad::bce_with_logits(logits, targets);
}

double bce_from_probs(std::span<const double> probs, std::span<const double> targets) {
  if (probs.size() != targets.size() || probs.empty()) {
    throw DimensionError("bce: probability and target counts differ or are empty");
  }
  constexpr double kEps = 1e-12;
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = std::clamp(probs[i], kEps, 1.0 - kEps);
    total -= targets[i] * std::log(p) + (1.0 - targets[i]) * std::log(1.0 - p);
  }
  return total / static_cast<double>(probs.size());
}

ConfusionCounts::ConfusionCounts(std::size_t labels) : tp_(labels), fp_(labels), fn_(labels) {}

void ConfusionCounts::add(std::span<const std::uint8_t> decisions, std::span<const double> targets) {
  const std::size_t n = labels();
  if (n == 0 || decisions.size() != targets.size() || decisions.size() % n != 0) {
    throw DimensionError("confusion counts: decision/target sizes do not match " + std::to_string(n) +
                         " labels");
  }
  for (std::size_t i = 0; i < decisions.size(); ++i) {
    const std::size_t j = i % n;
    const bool pred = decisions[i] != 0, truth = targets[i] > 0.5;
    if (pred && truth) ++tp_[j];
    else if (pred) ++fp_[j];
    else if (truth) ++fn_[j];
  }
}

void ConfusionCounts::merge(const ConfusionCounts& other) {
  if (other.labels() != labels()) throw DimensionError("confusion counts: label count mismatch");
  for (std::size_t j = 0; j < labels(); ++j) {
    tp_[j] += other.tp_[j];
    fp_[j] += other.fp_[j];
    fn_[j] += other.fn_[j];
  }
}

namespace {

double f1(std::size_t tp, std::size_t fp, std::size_t fn) {
  const std::size_t denom = 2 * tp + fp + fn;
  return denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

}  // namespace

double ConfusionCounts::micro_f1() const {
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t j = 0; j < labels(); ++j) {
    tp += tp_[j];
    fp += fp_[j];
    fn += fn_[j];
  }
  return f1(tp, fp, fn);
}

double ConfusionCounts::macro_f1() const {
  if (labels() == 0) return 0.0;
  double total = 0.0;
  for (std::size_t j = 0; j < labels(); ++j) total += f1(tp_[j], fp_[j], fn_[j]);
  return total / static_cast<double>(labels());
}

double micro_f1(std::span<const std::uint8_t> decisions, std::span<const double> targets,
                std::size_t labels) {
  ConfusionCounts c(labels);
  c.add(decisions, targets);
  return c.micro_f1();
}

double macro_f1(std::span<const std::uint8_t> decisions, std::span<const double> targets,
                std::size_t labels) {
  ConfusionCounts c(labels);
  c.add(decisions, targets);
  return c.macro_f1();
}

}  // namespace htcim
