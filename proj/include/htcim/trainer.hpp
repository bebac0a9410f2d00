// Copyright (c) 2026, The HTCInfoMax Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "htcim/dataio.hpp"
#include "htcim/dims.hpp"
#include "htcim/encoders.hpp"
#include "htcim/infomax.hpp"
#include "htcim/params.hpp"
#include "htcim/predictor.hpp"
#include "htcim/taxonomy.hpp"

namespace htcim {

struct TrainConfig {
  std::size_t epochs = 20;
  std::size_t batch_size = 32;
  std::size_t max_len = 64;
  double learning_rate = 1e-3;
  double clip_norm = 5.0;
  double threshold = 0.5;
  std::uint64_t seed = 0;
  bool disable_mi = false;
  bool disable_label_prior = false;
  std::size_t vocab_min_freq = 1;
  PriorRouting routing = PriorRouting::kReversal;
  ModelDims dims;

  bool use_mi() const { return !disable_mi; }
  bool use_prior() const { return !disable_label_prior; }
  /// Throws ConfigError on out-of-range values.
  void validate() const;
  nlohmann::json to_json() const;
  /// Missing keys keep the values already in `base`; unknown keys are rejected.
  static TrainConfig from_json(const nlohmann::json& j, TrainConfig base);
  static TrainConfig from_json(const nlohmann::json& j);
};

struct ForwardOptions {
  bool use_mi = true;
  bool use_prior = true;
  std::uint64_t prior_seed = 0;
  PriorRouting routing = PriorRouting::kReversal;
};

struct ForwardResult {
  LossTerms terms;
  TotalLoss total;
  ad::Tensor logits;
};

/// Text encoder, structure encoder, attention, classifier head and the two
/// discriminators plus the loss-weight estimator, sharing one registry.
class Model {
 public:
  Model(const ModelDims& dims, const Taxonomy& tax, std::size_t vocab_size, std::uint64_t seed);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  ForwardResult forward(const Batch& batch, const ForwardOptions& options) const;
  /// Classification logits only ([B×N]).
  ad::Tensor logits(const Batch& batch) const;
  Predictions predict(const Batch& batch, double threshold) const;

  ParamRegistry& params() { return params_; }
  const ParamRegistry& params() const { return params_; }
  const ModelDims& dims() const { return dims_; }
  const Taxonomy& taxonomy() const { return tax_; }
  std::size_t vocab_size() const { return vocab_size_; }

  const TextEncoder& text_encoder() const { return text_; }
  const StructureEncoder& structure_encoder() const { return structure_; }
  const ClassifierHead& head() const { return head_; }
  const MIDiscriminator& mi_discriminator() const { return mi_; }
  const PriorDiscriminator& prior_discriminator() const { return prior_; }
  const LossWeightEstimator& weight_estimator() const { return weight_; }

 private:
  ModelDims dims_;
  Taxonomy tax_;
  std::size_t vocab_size_;
  ParamRegistry params_;
  TextEncoder text_;
  StructureEncoder structure_;
  ClassifierHead head_;
  MIDiscriminator mi_;
  PriorDiscriminator prior_;
  LossWeightEstimator weight_;
};

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamMoments {
  std::vector<double> m, v;
};

struct AdamState {
  std::size_t step = 0;
  std::map<std::string, AdamMoments> moments;
  bool operator==(const AdamState& other) const;
};

/// Parameter groups that receive updates under the given term switches.
std::vector<ParamGroup> active_groups(bool use_mi, bool use_prior);

/// Scales all active gradients by min(1, max_norm / ||g||). Returns ||g||
/// before scaling.
double clip_grad_norm(ParamRegistry& params, const std::vector<ParamGroup>& groups,
                      double max_norm);

/// One bias-corrected Adam update of every parameter in `groups`, then
/// clears their gradients. Throws ContractError if an active parameter has
/// no gradient.
void adam_step(ParamRegistry& params, AdamState& state, const AdamConfig& config,
               const std::vector<ParamGroup>& groups);

struct EvalResult {
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  double loss_c = 0.0;
  std::size_t documents = 0;
  ConfusionCounts counts;
  nlohmann::json to_json() const;
};

/// Deterministic pass without gradient recording; nothing is dropped.
EvalResult evaluate(const Model& model, const std::vector<Document>& docs,
                    std::size_t batch_size, std::size_t max_len, double threshold);

struct EpochRecord {
  std::size_t epoch = 0;
  LossBundle mean;  // per-step averages
  std::size_t steps = 0;
  std::optional<double> micro_f1, macro_f1;  // on the validation split
  double wall_time_s = 0.0;
  nlohmann::json to_json(bool include_wall_time = true) const;
};

/// Optimisation state for one model: joint Adam updates of every active
/// group per step, with seeds derived from (seed, epoch) for shuffling and
/// (seed, step) for prior draws.
class TrainingSession {
 public:
  TrainingSession(Model& model, TrainConfig config);

  LossBundle train_step(const Batch& batch);
  EpochRecord train_epoch(const std::vector<Document>& train, const std::vector<Document>* val);
  /// Runs until `config.epochs` epochs are complete, writing one JSON line per
  /// epoch to `log` when given.
  std::vector<EpochRecord> fit(const std::vector<Document>& train,
                               const std::vector<Document>* val, std::ostream* log = nullptr);

  std::vector<Batch> epoch_batches(const std::vector<Document>& train) const;
  ForwardOptions forward_options() const;

  Model& model() { return model_; }
  const TrainConfig& config() const { return config_; }
  AdamState& optimizer() { return adam_; }
  const AdamState& optimizer() const { return adam_; }
  std::size_t epoch() const { return epoch_; }
  void set_epoch(std::size_t epoch) { epoch_ = epoch; }
  std::size_t global_step() const { return adam_.step; }
  const std::vector<LossBundle>& step_history() const { return history_; }

 private:
  Model& model_;
  TrainConfig config_;
  AdamState adam_;
  std::size_t epoch_ = 0;
  std::vector<LossBundle> history_;
};

/// Everything needed to resume training or run inference.
struct TrainedModel {
  TrainConfig config;
  Vocabulary vocab;
  std::unique_ptr<Model> model;
  AdamState adam;
  std::size_t epoch = 0;
};

void save_trained(const std::string& path, const TrainConfig& config, const Vocabulary& vocab,
                  const Model& model, const AdamState& adam, std::size_t epoch);
TrainedModel load_trained(const std::string& path);

}  // namespace htcim
