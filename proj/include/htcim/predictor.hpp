// Copyright (c) 2026, The HTCInfoMax Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "htcim/autodiff.hpp"
#include "htcim/dims.hpp"
#include "htcim/encoders.hpp"
#include "htcim/params.hpp"

namespace htcim {

/// Flattens the label-aware features of each document to N·d and maps them
/// to N logits with one linear layer. Starts at zero, so every probability
/// is 0.5 before training.
class ClassifierHead {
 public:
  ClassifierHead() = default;
  ClassifierHead(ParamRegistry& reg, const ModelDims& dims, std::size_t label_count, Rng& rng,
                 bool zero_init = true);

  /// [B×N×d] -> [B×N] logits.
  ad::Tensor logits(const LabelAwareFeatures& features) const;

 private:
  Linear fc_;
  std::size_t labels_ = 0;
  std::size_t width_ = 0;
};

struct Predictions {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> probs;          // rows×cols
  std::vector<std::uint8_t> decisions;  // 1 where prob >= threshold

  bool decided(std::size_t r, std::size_t c) const { return decisions.at(r * cols + c) != 0; }
};

/// Sigmoid then threshold at tau (an entry exactly at tau counts as positive).
Predictions predictions_from_logits(const ad::Tensor& logits, double threshold = 0.5);
Predictions classify(const LabelAwareFeatures& features, const ClassifierHead& head,
                     double threshold = 0.5);

/// Mean binary cross-entropy over all B×N entries, from logits.
ad::Tensor classification_loss(const ad::Tensor& logits, std::span<const double> targets);
/// Same quantity from probabilities (clamped away from 0 and 1).
double bce_from_probs(std::span<const double> probs, std::span<const double> targets);

/// Per-label true/false positive and false negative counts.
class ConfusionCounts {
 public:
  explicit ConfusionCounts(std::size_t labels = 0);

  void add(std::span<const std::uint8_t> decisions, std::span<const double> targets);
  void merge(const ConfusionCounts& other);

  std::size_t labels() const { return tp_.size(); }
  std::size_t tp(std::size_t j) const { return tp_.at(j); }
  std::size_t fp(std::size_t j) const { return fp_.at(j); }
  std::size_t fn(std::size_t j) const { return fn_.at(j); }

  /// 2TP / (2TP + FP + FN) over pooled counts; 0 when all counts are 0.
  double micro_f1() const;
  /// Unweighted mean of per-label F1; a label with no TP, FP or FN scores 0.
  double macro_f1() const;

 private:
  std::vector<std::size_t> tp_, fp_, fn_;
};

double micro_f1(std::span<const std::uint8_t> decisions, std::span<const double> targets,
                std::size_t labels);
double macro_f1(std::span<const std::uint8_t> decisions, std::span<const double> targets,
                std::size_t labels);

}  // namespace htcim
