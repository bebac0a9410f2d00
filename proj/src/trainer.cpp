// Copyright (c) 2026, The HTCInfoMax Authors
// SPDX-License-Identifier: Apache-2.0
#include "htcim/trainer.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>

#include "htcim/checkpoint.hpp"
#include "htcim/errors.hpp"
#include "htcim/random.hpp"

namespace htcim {

namespace {

constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kShuffleStream = 2;
constexpr std::uint64_t kPriorStream = 3;

bool in_groups(ParamGroup g, const std::vector<ParamGroup>& groups) {
  return std::find(groups.begin(), groups.end(), g) != groups.end();
}

}  // namespace

// ---- config ----------------------------------------------------------------

void TrainConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("train config: " + msg); };
  if (epochs == 0) fail("epochs must be >= 1");
  if (batch_size == 0) fail("batch_size must be >= 1");
  if (use_mi() && batch_size < 2) fail("batch_size must be >= 2 when the MI term is enabled");
  if (max_len == 0) fail("max_len must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) fail("learning_rate must be positive");
  if (!(clip_norm > 0.0)) fail("clip_norm must be positive");
  if (!(threshold >= 0.0 && threshold <= 1.0)) fail("threshold must lie in [0, 1]");
  if (vocab_min_freq == 0) fail("vocab_min_freq must be >= 1");
  dims.validate();
}

nlohmann::json TrainConfig::to_json() const {
  return {{"epochs", epochs},
          {"batch_size", batch_size},
          {"max_len", max_len},
          {"learning_rate", learning_rate},
          {"clip_norm", clip_norm},
          {"threshold", threshold},
          {"seed", seed},
          {"disable_mi", disable_mi},
          {"disable_label_prior", disable_label_prior},
          {"vocab_min_freq", vocab_min_freq},
          {"routing", routing == PriorRouting::kReversal ? "reversal" : "plain"},
          {"dims", dims.to_json()}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j, TrainConfig base) {
  if (!j.is_object()) throw ConfigError("train config: expected a JSON object");
  static const std::vector<std::string> known{
      "epochs", "batch_size", "max_len", "learning_rate", "clip_norm", "threshold", "seed",
      "disable_mi", "disable_label_prior", "vocab_min_freq", "routing", "dims"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("train config: unknown key '" + key + "'");
    }
  }
  TrainConfig c = std::move(base);
  try {
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.max_len = j.value("max_len", c.max_len);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.clip_norm = j.value("clip_norm", c.clip_norm);
    c.threshold = j.value("threshold", c.threshold);
    c.seed = j.value("seed", c.seed);
    c.disable_mi = j.value("disable_mi", c.disable_mi);
    c.disable_label_prior = j.value("disable_label_prior", c.disable_label_prior);
    c.vocab_min_freq = j.value("vocab_min_freq", c.vocab_min_freq);
    if (j.contains("routing")) {
      const auto r = j.at("routing").get<std::string>();
      if (r == "reversal") c.routing = PriorRouting::kReversal;
      else if (r == "plain") c.routing = PriorRouting::kPlain;
      else throw ConfigError("train config: routing must be 'reversal' or 'plain'");
    }
    if (j.contains("dims")) c.dims = ModelDims::from_json(j.at("dims"));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  return c;
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) { return from_json(j, TrainConfig{}); }

// ---- model -----------------------------------------------------------------

Model::Model(const ModelDims& dims, const Taxonomy& tax, std::size_t vocab_size,
             std::uint64_t seed)
    : dims_(dims), tax_(tax), vocab_size_(vocab_size) {
  dims_.validate();
  if (tax_.target_count() == 0) throw ConfigError("model: taxonomy has no labels");
  Rng rng(derive_seed(seed, kInitStream));
  text_ = TextEncoder(params_, dims_, vocab_size_, rng);
  structure_ = StructureEncoder(params_, dims_, tax_, rng);
  head_ = ClassifierHead(params_, dims_, tax_.target_count(), rng);
  mi_ = MIDiscriminator(params_, dims_, rng);
  prior_ = PriorDiscriminator(params_, dims_, rng);
  weight_ = LossWeightEstimator(params_, dims_, rng);
}

ForwardResult Model::forward(const Batch& batch, const ForwardOptions& options) const {
  if (batch.label_count != tax_.target_count()) {
    throw DimensionError("model: batch has " + std::to_string(batch.label_count) +
                         " label columns, taxonomy has " + std::to_string(tax_.target_count()));
  }
  const auto text = text_.forward(batch);
  const auto labels = structure_.forward();
  const auto features = multi_label_attention(text, labels);

  ForwardResult out;
  out.logits = head_.logits(features);
  out.terms.L_c = classification_loss(out.logits, batch.targets);
  if (options.use_mi) out.terms.L_MI = mi_loss(text, labels, batch, mi_);
  if (options.use_prior) {
    const auto prior = sample_prior(labels.matrix.dim(0), labels.matrix.dim(1), options.prior_seed);
    out.terms.L_pr = prior_matching_loss(labels, prior, prior_, options.routing);
  }
  if (options.use_mi && options.use_prior) out.terms.F = weight_.forward(text.pooled, labels.matrix);
  out.total = total_loss(out.terms);
  return out;
}

ad::Tensor Model::logits(const Batch& batch) const {
  const auto text = text_.forward(batch);
  return head_.logits(multi_label_attention(text, structure_.forward()));
}

Predictions Model::predict(const Batch& batch, double threshold) const {
  ad::NoGradGuard guard;
  return predictions_from_logits(logits(batch), threshold);
}

// ---- optimisation ----------------------------------------------------------

bool AdamState::operator==(const AdamState& other) const {
  if (step != other.step || moments.size() != other.moments.size()) return false;
  for (const auto& [name, mv] : moments) {
    const auto it = other.moments.find(name);
    if (it == other.moments.end() || it->second.m != mv.m || it->second.v != mv.v) return false;
  }
  return true;
}

std::vector<ParamGroup> active_groups(bool use_mi, bool use_prior) {
  std::vector<ParamGroup> g{ParamGroup::kText, ParamGroup::kStructure, ParamGroup::kHead};
  if (use_mi) g.push_back(ParamGroup::kMutualInfo);
  if (use_prior) g.push_back(ParamGroup::kPrior);
  if (use_mi && use_prior) g.push_back(ParamGroup::kWeight);
  return g;
}

double clip_grad_norm(ParamRegistry& params, const std::vector<ParamGroup>& groups,
                      double max_norm) {
  double sq = 0.0;
  for (const auto& e : params.entries()) {
    if (!in_groups(e.group, groups) || !e.tensor.has_grad()) continue;
    for (double g : e.tensor.grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (!std::isfinite(norm)) throw NumericError("non-finite gradient norm");
  if (norm > max_norm) {
    const double factor = max_norm / norm;
    for (const auto& e : params.entries()) {
      if (!in_groups(e.group, groups) || !e.tensor.has_grad()) continue;
      auto t = e.tensor;
      for (double& g : t.mutable_grad()) g *= factor;
    }
  }
  return norm;
}

void adam_step(ParamRegistry& params, AdamState& state, const AdamConfig& config,
               const std::vector<ParamGroup>& groups) {
  for (const auto& e : params.entries()) {
    if (in_groups(e.group, groups) && !e.tensor.has_grad()) {
      throw ContractError("adam: active parameter '" + e.name + "' has no gradient");
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (const auto& e : params.entries()) {
    if (!in_groups(e.group, groups)) continue;
    auto p = e.tensor;
    auto& mv = state.moments[e.name];
    const std::size_t n = p.numel();
    if (mv.m.size() != n) {
      mv.m.assign(n, 0.0);
      mv.v.assign(n, 0.0);
    }
    const auto g = p.grad();
    auto w = p.mutable_values();
    for (std::size_t i = 0; i < n; ++i) {
      mv.m[i] = config.beta1 * mv.m[i] + (1.0 - config.beta1) * g[i];
      mv.v[i] = config.beta2 * mv.v[i] + (1.0 - config.beta2) * g[i] * g[i];
      const double mhat = mv.m[i] / c1, vhat = mv.v[i] / c2;
      w[i] -= config.learning_rate * mhat / (std::sqrt(vhat) + config.epsilon);
    }
    p.clear_grad();
  }
}

// ---- evaluation ------------------------------------------------------------

nlohmann::json EvalResult::to_json() const {
  return {{"micro_f1", micro_f1}, {"macro_f1", macro_f1}, {"loss_c", loss_c},
          {"documents", documents}};
}

EvalResult evaluate(const Model& model, const std::vector<Document>& docs,
                    std::size_t batch_size, std::size_t max_len, double threshold) {
  if (docs.empty()) throw DataError("evaluate: no documents");
  ad::NoGradGuard guard;
  BatchOptions opts;
  opts.batch_size = batch_size;
  opts.max_len = max_len;
  EvalResult r;
  r.counts = ConfusionCounts(model.taxonomy().target_count());
  double loss_sum = 0.0;
  for (const auto& b : make_batches(docs, opts, model.taxonomy())) {
    const auto logits = model.logits(b);
    loss_sum += classification_loss(logits, b.targets).item() * static_cast<double>(b.size);
    const auto p = predictions_from_logits(logits, threshold);
    r.counts.add(p.decisions, b.targets);
    r.documents += b.size;
  }
  r.micro_f1 = r.counts.micro_f1();
  r.macro_f1 = r.counts.macro_f1();
  r.loss_c = loss_sum / static_cast<double>(r.documents);
  return r;
}

// ---- training --------------------------------------------------------------

nlohmann::json EpochRecord::to_json(bool include_wall_time) const {
  nlohmann::json j{{"epoch", epoch},           {"steps", steps},
                   {"L", mean.L},             {"L_c", mean.L_c},
                   {"L_MI", mean.L_MI},       {"L_pr", mean.L_pr},
                   {"F", mean.F},
                   {"micro_f1", micro_f1 ? nlohmann::json(*micro_f1) : nlohmann::json()},
                   {"macro_f1", macro_f1 ? nlohmann::json(*macro_f1) : nlohmann::json()}};
  if (include_wall_time) j["wall_time_s"] = wall_time_s;
  return j;
}

TrainingSession::TrainingSession(Model& model, TrainConfig config)
    : model_(model), config_(std::move(config)) {
  config_.validate();
  if (!(config_.dims == model_.dims())) throw ConfigError("training session: config dims differ from the model");
}

ForwardOptions TrainingSession::forward_options() const {
  ForwardOptions o;
  o.use_mi = config_.use_mi();
  o.use_prior = config_.use_prior();
  o.prior_seed = derive_seed(derive_seed(config_.seed, kPriorStream), adam_.step);
  o.routing = config_.routing;
  return o;
}

LossBundle TrainingSession::train_step(const Batch& batch) {
  if (config_.use_mi() && batch.size < 2) {
    throw ContractError("train_step: negative sampling requires batch >= 2");
  }
  auto& params = model_.params();
  params.clear_grads();
  const auto result = model_.forward(batch, forward_options());
  ad::backward(result.total.L);
  const auto groups = active_groups(config_.use_mi(), config_.use_prior());
  clip_grad_norm(params, groups, config_.clip_norm);
  AdamConfig adam;
  adam.learning_rate = config_.learning_rate;
  adam_step(params, adam_, adam, groups);
  params.clear_grads();
  history_.push_back(result.total.values);
  return result.total.values;
}

std::vector<Batch> TrainingSession::epoch_batches(const std::vector<Document>& train) const {
  BatchOptions opts;
  opts.batch_size = config_.batch_size;
  opts.max_len = config_.max_len;
  opts.shuffle_seed = derive_seed(derive_seed(config_.seed, kShuffleStream), epoch_);
  opts.drop_last = config_.use_mi();
  return make_batches(train, opts, model_.taxonomy());
}

EpochRecord TrainingSession::train_epoch(const std::vector<Document>& train,
                                         const std::vector<Document>* val) {
  const auto start = std::chrono::steady_clock::now();
  const auto batches = epoch_batches(train);
  if (batches.empty()) throw DataError("train_epoch: no complete batch in the training split");
  EpochRecord rec;
  for (const auto& b : batches) {
    const auto v = train_step(b);
    rec.mean.L += v.L;
    rec.mean.L_c += v.L_c;
    rec.mean.L_MI += v.L_MI;
    rec.mean.L_pr += v.L_pr;
    rec.mean.F += v.F;
    ++rec.steps;
  }
  const double n = static_cast<double>(rec.steps);
  rec.mean.L /= n;
  rec.mean.L_c /= n;
  rec.mean.L_MI /= n;
  rec.mean.L_pr /= n;
  rec.mean.F /= n;
  ++epoch_;
  rec.epoch = epoch_;
  if (val && !val->empty()) {
    const auto e = evaluate(model_, *val, config_.batch_size, config_.max_len, config_.threshold);
    rec.micro_f1 = e.micro_f1;
    rec.macro_f1 = e.macro_f1;
  }
  rec.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  spdlog::info("epoch {} L={:.4f} L_c={:.4f} L_MI={:.4f} L_pr={:.4f} F={:.3f} micro={} ({:.1f}s)",
               rec.epoch, rec.mean.L, rec.mean.L_c, rec.mean.L_MI, rec.mean.L_pr, rec.mean.F,
               rec.micro_f1 ? std::to_string(*rec.micro_f1) : "-", rec.wall_time_s);
  return rec;
}

std::vector<EpochRecord> TrainingSession::fit(const std::vector<Document>& train,
                                              const std::vector<Document>* val,
                                              std::ostream* log) {
  std::vector<EpochRecord> out;
  while (epoch_ < config_.epochs) {
    out.push_back(train_epoch(train, val));
    if (log) *log << out.back().to_json().dump() << '\n' << std::flush;
  }
  return out;
}

// ---- persistence -----------------------------------------------------------

void save_trained(const std::string& path, const TrainConfig& config, const Vocabulary& vocab,
                  const Model& model, const AdamState& adam, std::size_t epoch) {
  nlohmann::json meta{{"format", "htcim-model"},
                      {"config", config.to_json()},
                      {"vocab", vocab.tokens()},
                      {"taxonomy", model.taxonomy().serialize()},
                      {"epoch", epoch}};
  save_checkpoint(path, model.params(), adam, meta);
}

TrainedModel load_trained(const std::string& path) {
  const auto data = load_checkpoint(path);
  TrainedModel t;
  try {
    if (data.meta.value("format", "") != "htcim-model") throw CheckpointError("not a model checkpoint");
    t.config = TrainConfig::from_json(data.meta.at("config"));
    t.vocab = Vocabulary::from_tokens(data.meta.at("vocab").get<std::vector<std::string>>());
    const auto tax = Taxonomy::parse(data.meta.at("taxonomy").get<std::string>());
    t.epoch = data.meta.at("epoch").get<std::size_t>();
    t.model = std::make_unique<Model>(t.config.dims, tax, t.vocab.size(), t.config.seed);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(path + ": malformed metadata: " + e.what());
  }
  restore_params(t.model->params(), data);
  t.adam = data.adam;
  return t;
}

}  // namespace htcim
