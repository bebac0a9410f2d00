// Copyright (c) 2026, The HTCInfoMax Authors
// SPDX-License-Identifier: Apache-2.0
#include "htcim/cli.hpp"

#include <openssl/evp.h>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <numeric>
#include <ostream>
#include <sstream>

#include "htcim/checkpoint.hpp"
#include "htcim/dataio.hpp"
#include "htcim/errors.hpp"
#include "htcim/taxonomy.hpp"
#include "htcim/trainer.hpp"

namespace htcim {

namespace fs = std::filesystem;

namespace {

// Bad flags or missing inputs: exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

nlohmann::json read_json_file(const std::string& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": malformed JSON: " + e.what());
  }
}

void require_file(const std::string& path, const std::string& what) {
  if (!fs::is_regular_file(path)) throw UsageError(what + " not found: " + path);
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      seeds.push_back(std::stoull(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("--seeds: '" + item + "' is not an unsigned integer");
    }
  }
  if (seeds.empty()) throw UsageError("--seeds: empty seed list");
  return seeds;
}

/// A manifest written by an earlier run is accepted wherever a config is.
nlohmann::json config_section(const nlohmann::json& j) {
  if (j.is_object() && j.contains("artifact_version") && j.contains("config")) return j.at("config");
  return j;
}

struct Manifest {
  nlohmann::json j;

  Manifest(const std::string& command, const std::vector<std::string>& args) {
    j = {{"command", command},
         {"artifact_version", std::string(kVersion)},
         {"argv", args},
         {"inputs", nlohmann::json::object()},
         {"outputs", nlohmann::json::object()}};
  }
  void input(const std::string& role, const std::string& path) {
    j["inputs"][role] = {{"path", path}, {"sha256", sha256_file(path)}};
  }
  void output(const std::string& role, const std::string& path) { j["outputs"][role] = path; }

  void emit(std::ostream& err, const std::string& out_dir) const {
    err << "manifest " << j.dump() << "\n";
    if (out_dir.empty()) return;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + out_dir + ": " + ec.message());
    std::ofstream f(fs::path(out_dir) / "run_manifest.json");
    if (!f) throw IoError("cannot write " + (fs::path(out_dir) / "run_manifest.json").string());
    f << j.dump(2) << "\n";
  }
};

// ---- data location ---------------------------------------------------------

struct DataPaths {
  std::string taxonomy, train, val, test;
};

/// --data may be a corpus directory (gendata layout) or a single JSONL file.
DataPaths resolve_data(const std::string& data, const std::string& taxonomy) {
  DataPaths p;
  if (data.empty()) throw UsageError("--data is required");
  if (fs::is_directory(data)) {
    const fs::path dir(data);
    p.train = (dir / "train.jsonl").string();
    if (fs::is_regular_file(dir / "val.jsonl")) p.val = (dir / "val.jsonl").string();
    if (fs::is_regular_file(dir / "test.jsonl")) p.test = (dir / "test.jsonl").string();
    p.taxonomy = taxonomy.empty() ? (dir / "taxonomy.txt").string() : taxonomy;
  } else {
    p.train = data;
    p.taxonomy = taxonomy;
    if (p.taxonomy.empty()) throw UsageError("--taxonomy is required when --data is a file");
  }
  require_file(p.train, "corpus file");
  require_file(p.taxonomy, "taxonomy file");
  return p;
}

/// Evaluation input: a directory means its test split (val if absent).
std::string resolve_eval_file(const std::string& data) {
  if (data.empty()) throw UsageError("--data is required");
  if (fs::is_directory(data)) {
    const fs::path dir(data);
    for (const char* name : {"test.jsonl", "val.jsonl"})
      if (fs::is_regular_file(dir / name)) return (dir / name).string();
    throw UsageError("no test.jsonl or val.jsonl in " + data);
  }
  require_file(data, "corpus file");
  return data;
}

// ---- gendata ---------------------------------------------------------------

struct GenFlags {
  std::string out, config;
  std::uint64_t seed = 7;
  SyntheticConfig synth;
  CLI::Option *seed_opt = nullptr, *depth = nullptr, *branching = nullptr, *vpl = nullptr,
              *dpl = nullptr, *len = nullptr, *imb = nullptr, *noise = nullptr;
};

int cmd_gendata(GenFlags& g, const std::vector<std::string>& args, std::ostream& out,
                std::ostream& err) {
  SyntheticConfig cfg;
  std::uint64_t seed = 7;
  Manifest manifest("gendata", args);
  if (!g.config.empty()) {
    require_file(g.config, "config file");
    manifest.input("config", g.config);
    const auto j = config_section(read_json_file(g.config));
    cfg = SyntheticConfig::from_json(j.value("synthetic", j));
    seed = j.value("seed", seed);
  }
  if (g.seed_opt->count()) seed = g.seed;
  if (g.depth->count()) cfg.depth = g.synth.depth;
  if (g.branching->count()) cfg.branching = g.synth.branching;
  if (g.vpl->count()) cfg.vocab_per_label = g.synth.vocab_per_label;
  if (g.dpl->count()) cfg.docs_per_label = g.synth.docs_per_label;
  if (g.len->count()) cfg.doc_len = g.synth.doc_len;
  if (g.imb->count()) cfg.imbalance_exponent = g.synth.imbalance_exponent;
  if (g.noise->count()) cfg.noise_rate = g.synth.noise_rate;
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }

  manifest.j["config"] = {{"synthetic", cfg.to_json()}, {"seed", seed}};
  manifest.j["seed"] = seed;
  for (const char* f : {"taxonomy.txt", "train.jsonl", "val.jsonl", "test.jsonl", "manifest.json"})
    manifest.output(f, (fs::path(g.out) / f).string());
  manifest.emit(err, g.out);

  const auto corpus = generate_synthetic(cfg, seed);
  write_synthetic(corpus, g.out);

  const auto tax = Taxonomy::parse(corpus.taxonomy_text);
  const auto s = stats(tax);
  double label_sum = 0.0;
  for (const auto* split : {&corpus.train, &corpus.val, &corpus.test})
    for (const auto& d : *split) label_sum += static_cast<double>(d.labels.size());
  const double avg_l = label_sum / static_cast<double>(corpus.total_docs());

  nlohmann::json result{{"L", s.label_count},
                        {"nodes", s.node_count},
                        {"Depth", s.depth},
                        {"Avg-L", avg_l},
                        {"train", corpus.train.size()},
                        {"val", corpus.val.size()},
                        {"test", corpus.test.size()}};
  err << std::left << std::setw(8) << "L" << std::setw(8) << "Depth" << std::setw(8) << "Avg-L"
      << std::setw(8) << "Train" << std::setw(8) << "Val" << "Test\n"
      << std::setw(8) << s.label_count << std::setw(8) << s.depth << std::setw(8)
      << std::fixed << std::setprecision(2) << avg_l << std::setw(8) << corpus.train.size()
      << std::setw(8) << corpus.val.size() << corpus.test.size() << "\n";
  out << result.dump() << "\n";
  return kExitOk;
}

// ---- train -----------------------------------------------------------------

struct TrainFlags {
  std::string data, taxonomy, config, seeds, checkpoint, out, resume;
  std::uint64_t seed = 0;
  std::size_t epochs = 0, batch_size = 0, max_len = 0, limit_train = 0;
  double lr = 0.0, threshold = 0.5;
  bool disable_mi = false, disable_prior = false;
  CLI::Option *seed_opt = nullptr, *seeds_opt = nullptr, *epochs_opt = nullptr,
              *batch_opt = nullptr, *lr_opt = nullptr, *threshold_opt = nullptr,
              *max_len_opt = nullptr;
};

TrainConfig resolve_train_config(const TrainFlags& f, Manifest& manifest) {
  TrainConfig cfg;
  if (!f.config.empty()) {
    require_file(f.config, "config file");
    manifest.input("config", f.config);
    cfg = TrainConfig::from_json(config_section(read_json_file(f.config)), cfg);
  }
  if (f.seed_opt->count()) cfg.seed = f.seed;
  if (f.epochs_opt->count()) cfg.epochs = f.epochs;
  if (f.batch_opt->count()) cfg.batch_size = f.batch_size;
  if (f.lr_opt->count()) cfg.learning_rate = f.lr;
  if (f.threshold_opt->count()) cfg.threshold = f.threshold;
  if (f.max_len_opt->count()) cfg.max_len = f.max_len;
  if (f.disable_mi) cfg.disable_mi = true;
  if (f.disable_prior) cfg.disable_label_prior = true;
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

struct Corpus {
  Taxonomy tax;
  Vocabulary vocab;
  std::vector<Document> train, val, test;
};

Corpus load_training_corpus(const DataPaths& paths, const TrainConfig& cfg,
                            std::size_t limit_train) {
  Corpus c;
  c.tax = Taxonomy::load(paths.taxonomy);
  auto raw_train = read_jsonl_file(paths.train);
  if (limit_train && raw_train.size() > limit_train) raw_train.resize(limit_train);
  c.vocab = build_vocab(raw_train, cfg.vocab_min_freq);
  try {
    c.train = to_documents(raw_train, c.vocab, c.tax);
  } catch (const DataError& e) {
    throw DataError(paths.train + ": " + e.what());
  }
  if (!paths.val.empty()) c.val = load_corpus(paths.val, c.vocab, c.tax);
  if (!paths.test.empty()) c.test = load_corpus(paths.test, c.vocab, c.tax);
  return c;
}

std::string with_seed_suffix(const std::string& path, std::uint64_t seed, bool sweep) {
  if (!sweep) return path;
  const fs::path p(path);
  return (p.parent_path() / (p.stem().string() + ".seed" + std::to_string(seed) + p.extension().string())).string();
}

int cmd_train(TrainFlags& f, const std::vector<std::string>& args, std::ostream& out,
              std::ostream& err) {
  if (f.seed_opt->count() && f.seeds_opt->count()) throw UsageError("--seed and --seeds are mutually exclusive");
  if (!f.resume.empty() && f.seeds_opt->count()) throw UsageError("--resume cannot be combined with --seeds");
  Manifest manifest("train", args);
  const auto paths = resolve_data(f.data, f.taxonomy);
  auto cfg = resolve_train_config(f, manifest);

  std::unique_ptr<TrainedModel> resumed;
  if (!f.resume.empty()) {
    require_file(f.resume, "checkpoint");
    manifest.input("resume", f.resume);
    resumed = std::make_unique<TrainedModel>(load_trained(f.resume));
    // The stored run defines the model; only the epoch budget may move.
    const auto epochs = cfg.epochs;
    cfg = resumed->config;
    if (f.epochs_opt->count()) cfg.epochs = epochs;
  }
  const auto seeds = f.seeds_opt->count() ? parse_seeds(f.seeds) : std::vector<std::uint64_t>{cfg.seed};
  const bool sweep = seeds.size() > 1;

  manifest.input("train", paths.train);
  if (!paths.val.empty()) manifest.input("val", paths.val);
  if (!paths.test.empty()) manifest.input("test", paths.test);
  manifest.input("taxonomy", paths.taxonomy);
  manifest.j["config"] = cfg.to_json();
  manifest.j["seed"] = seeds.size() == 1 ? nlohmann::json(seeds[0]) : nlohmann::json(seeds);
  manifest.j["limit_train"] = f.limit_train;
  for (auto s : seeds) {
    if (!f.out.empty())
      manifest.output("log.seed" + std::to_string(s),
                      with_seed_suffix((fs::path(f.out) / "train_log.jsonl").string(), s, sweep));
    if (!f.checkpoint.empty())
      manifest.output("checkpoint.seed" + std::to_string(s), with_seed_suffix(f.checkpoint, s, sweep));
  }
  manifest.emit(err, f.out);

  const auto corpus = load_training_corpus(paths, cfg, f.limit_train);
  if (resumed && !(resumed->vocab == corpus.vocab)) {
    throw CheckpointError("resume: the training corpus vocabulary differs from the checkpoint's");
  }

  nlohmann::json runs = nlohmann::json::array();
  for (auto seed : seeds) {
    auto run_cfg = cfg;
    run_cfg.seed = seed;
    std::unique_ptr<Model> owned;
    Model* model;
    if (resumed) {
      model = resumed->model.get();
    } else {
      owned = std::make_unique<Model>(run_cfg.dims, corpus.tax, corpus.vocab.size(), seed);
      model = owned.get();
    }
    TrainingSession session(*model, run_cfg);
    if (resumed) {
      session.optimizer() = resumed->adam;
      session.set_epoch(resumed->epoch);
    }
    std::ofstream log;
    if (!f.out.empty()) {
      const auto log_path = with_seed_suffix((fs::path(f.out) / "train_log.jsonl").string(), seed, sweep);
      log.open(log_path, resumed ? std::ios::app : std::ios::trunc);
      if (!log) throw IoError("cannot write " + log_path);
    }
    spdlog::info("training seed {} for {} epochs on {} documents", seed, run_cfg.epochs, corpus.train.size());
    const auto records = session.fit(corpus.train, corpus.val.empty() ? nullptr : &corpus.val,
                                     log.is_open() ? &log : nullptr);
    if (!f.checkpoint.empty()) {
      save_trained(with_seed_suffix(f.checkpoint, seed, sweep), run_cfg, corpus.vocab, *model,
                   session.optimizer(), session.epoch());
    }
    nlohmann::json run{{"seed", seed}, {"epochs", session.epoch()}};
    run["last_epoch"] = records.empty() ? nlohmann::json() : records.back().to_json(false);
    for (const auto& [name, docs] : {std::pair{"val", &corpus.val}, std::pair{"test", &corpus.test}}) {
      if (docs->empty()) continue;
      run[name] = evaluate(*model, *docs, run_cfg.batch_size, run_cfg.max_len, run_cfg.threshold).to_json();
    }
    runs.push_back(std::move(run));
  }

  nlohmann::json result{{"runs", runs}};
  const char* split = !corpus.test.empty() ? "test" : (!corpus.val.empty() ? "val" : nullptr);
  if (split) {
    double mi = 0.0, ma = 0.0;
    for (const auto& r : runs) {
      mi += r[split]["micro_f1"].get<double>();
      ma += r[split]["macro_f1"].get<double>();
    }
    const double n = static_cast<double>(runs.size());
    result["mean"] = {{"split", split}, {"micro_f1", mi / n}, {"macro_f1", ma / n}, {"runs", runs.size()}};
    err << std::left << std::setw(10) << "seed" << std::setw(12) << "Mi-F1" << "Ma-F1\n";
    for (const auto& r : runs) {
      err << std::setw(10) << r["seed"].get<std::uint64_t>() << std::setw(12) << std::fixed
          << std::setprecision(4) << r[split]["micro_f1"].get<double>()
          << r[split]["macro_f1"].get<double>() << "\n";
    }
    err << std::setw(10) << "mean" << std::setw(12) << mi / n << ma / n << "\n";
  }
  out << result.dump() << "\n";
  return kExitOk;
}

// ---- eval / predict --------------------------------------------------------

struct InferFlags {
  std::string data, checkpoint, out;
  double threshold = 0.5;
  std::size_t batch_size = 32;
  CLI::Option* threshold_opt = nullptr;
};

int cmd_eval(InferFlags& f, const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err) {
  if (f.checkpoint.empty()) throw UsageError("--checkpoint is required");
  require_file(f.checkpoint, "checkpoint");
  const auto path = resolve_eval_file(f.data);
  Manifest manifest("eval", args);
  manifest.input("checkpoint", f.checkpoint);
  manifest.input("data", path);
  const auto trained = load_trained(f.checkpoint);
  const double tau = f.threshold_opt->count() ? f.threshold : trained.config.threshold;
  manifest.j["config"] = trained.config.to_json();
  manifest.j["config"]["threshold"] = tau;
  manifest.j["seed"] = trained.config.seed;
  manifest.emit(err, f.out);

  const auto docs = load_corpus(path, trained.vocab, trained.model->taxonomy());
  const auto r = evaluate(*trained.model, docs, f.batch_size, trained.config.max_len, tau);
  out << nlohmann::json{{"micro_f1", r.micro_f1}, {"macro_f1", r.macro_f1}, {"L_c", r.loss_c},
                        {"documents", r.documents}}
             .dump()
      << "\n";
  return kExitOk;
}

int cmd_predict(InferFlags& f, const std::vector<std::string>& args, std::ostream& out,
                std::ostream& err) {
  if (f.checkpoint.empty()) throw UsageError("--checkpoint is required");
  require_file(f.checkpoint, "checkpoint");
  if (f.data.empty()) throw UsageError("--data is required");
  require_file(f.data, "input file");
  Manifest manifest("predict", args);
  manifest.input("checkpoint", f.checkpoint);
  manifest.input("data", f.data);
  const auto trained = load_trained(f.checkpoint);
  const double tau = f.threshold_opt->count() ? f.threshold : trained.config.threshold;
  manifest.j["config"] = trained.config.to_json();
  manifest.j["config"]["threshold"] = tau;
  manifest.j["seed"] = trained.config.seed;
  manifest.emit(err, "");

  const auto& tax = trained.model->taxonomy();
  const auto docs = load_corpus(f.data, trained.vocab, tax, false);
  std::ofstream file;
  if (!f.out.empty()) {
    file.open(f.out, std::ios::trunc);
    if (!file) throw IoError("cannot write " + f.out);
  }
  std::ostream& sink = f.out.empty() ? out : file;
  if (docs.empty()) return kExitOk;

  BatchOptions opts;
  opts.batch_size = f.batch_size;
  opts.max_len = trained.config.max_len;
  opts.require_labels = false;
  for (const auto& b : make_batches(docs, opts, tax)) {
    const auto p = trained.model->predict(b, tau);
    for (std::size_t r = 0; r < p.rows; ++r) {
      nlohmann::json labels = nlohmann::json::array();
      nlohmann::json probs = nlohmann::json::object();
      for (std::size_t c = 0; c < p.cols; ++c) {
        const auto& name = tax.name(tax.target_label(c));
        probs[name] = p.probs[r * p.cols + c];
        if (p.decided(r, c)) labels.push_back(name);
      }
      sink << nlohmann::json{{"labels", labels}, {"probs", probs}}.dump() << "\n";
    }
  }
  return kExitOk;
}

// ---- ablate ----------------------------------------------------------------

int cmd_ablate(TrainFlags& f, const std::vector<std::string>& args, std::ostream& out,
               std::ostream& err) {
  Manifest manifest("ablate", args);
  const auto paths = resolve_data(f.data, f.taxonomy);
  const auto base_cfg = resolve_train_config(f, manifest);
  if (base_cfg.disable_mi || base_cfg.disable_label_prior)
    throw UsageError("ablate runs every variant; drop --disable-mi/--disable-label-prior");
  const auto seeds = f.seeds_opt->count() ? parse_seeds(f.seeds) : std::vector<std::uint64_t>{base_cfg.seed};
  manifest.input("train", paths.train);
  if (!paths.val.empty()) manifest.input("val", paths.val);
  if (!paths.test.empty()) manifest.input("test", paths.test);
  manifest.input("taxonomy", paths.taxonomy);
  manifest.j["config"] = base_cfg.to_json();
  manifest.j["seed"] = seeds;
  manifest.j["limit_train"] = f.limit_train;
  manifest.emit(err, f.out);

  const auto corpus = load_training_corpus(paths, base_cfg, f.limit_train);
  const auto& held_out = !corpus.test.empty() ? corpus.test : corpus.val;
  if (held_out.empty()) throw UsageError("ablate needs a val or test split");

  struct Variant {
    const char* name;
    bool mi, prior;
  };
  const Variant variants[] = {{"HTCInfoMax", true, true},
                              {"w/o MI", false, true},
                              {"w/o LabelPrior", true, false},
                              {"base", false, false}};
  nlohmann::json table = nlohmann::json::array();
  err << std::left << std::setw(18) << "variant" << std::setw(12) << "Mi-F1" << "Ma-F1\n";
  for (const auto& v : variants) {
    double mi = 0.0, ma = 0.0;
    for (auto seed : seeds) {
      auto cfg = base_cfg;
      cfg.seed = seed;
      cfg.disable_mi = !v.mi;
      cfg.disable_label_prior = !v.prior;
      Model model(cfg.dims, corpus.tax, corpus.vocab.size(), seed);
      TrainingSession session(model, cfg);
      session.fit(corpus.train, nullptr, nullptr);
      const auto r = evaluate(model, held_out, cfg.batch_size, cfg.max_len, cfg.threshold);
      mi += r.micro_f1;
      ma += r.macro_f1;
    }
    const double n = static_cast<double>(seeds.size());
    table.push_back({{"variant", v.name}, {"micro_f1", mi / n}, {"macro_f1", ma / n}, {"runs", seeds.size()}});
    err << std::setw(18) << v.name << std::setw(12) << std::fixed << std::setprecision(4) << mi / n
        << ma / n << "\n";
  }
  out << nlohmann::json{{"ablation", table}}.dump() << "\n";
  return kExitOk;
}

void add_train_options(CLI::App* cmd, TrainFlags& f) {
  cmd->add_option("--data", f.data, "Corpus directory or training JSONL file")->required();
  cmd->add_option("--taxonomy", f.taxonomy, "Taxonomy file (default: <data>/taxonomy.txt)");
  cmd->add_option("--config", f.config, "JSON config (or an earlier run manifest)");
  f.seed_opt = cmd->add_option("--seed", f.seed, "Random seed");
  f.seeds_opt = cmd->add_option("--seeds", f.seeds, "Comma-separated seed sweep, e.g. 1,2,3");
  f.epochs_opt = cmd->add_option("--epochs", f.epochs, "Maximum epochs");
  f.batch_opt = cmd->add_option("--batch-size", f.batch_size, "Documents per batch");
  f.lr_opt = cmd->add_option("--lr", f.lr, "Adam learning rate");
  f.threshold_opt = cmd->add_option("--threshold", f.threshold, "Decision threshold")->check(CLI::Range(0.0, 1.0));
  f.max_len_opt = cmd->add_option("--max-len", f.max_len, "Token cap per document");
  cmd->add_flag("--disable-mi", f.disable_mi, "Drop the text-label MI term");
  cmd->add_flag("--disable-label-prior", f.disable_prior, "Drop the prior-matching term");
  cmd->add_option("--limit-train", f.limit_train, "Use only the first N training documents");
  cmd->add_option("--out", f.out, "Output directory for run_manifest.json and train_log.jsonl");
}

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 computation failed");
  }
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int{digest[i]};
  return hex.str();
}

std::string sha256_file(const std::string& path) { return sha256_hex(read_file(path)); }

void configure_logging() {
  auto logger = std::make_shared<spdlog::logger>("htcim", std::make_shared<spdlog::sinks::stderr_sink_mt>());
  const char* env = std::getenv("HTCIM_LOG");
  logger->set_level(env ? spdlog::level::from_str(env) : spdlog::level::info);
  spdlog::set_default_logger(logger);
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  configure_logging();
  CLI::App app{"Hierarchical multi-label text classification with mutual-information and "
               "label-prior regularisation",
               "htcim"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  GenFlags gen;
  auto* gen_cmd = app.add_subcommand("gendata", "Generate a synthetic hierarchical corpus");
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();
  gen_cmd->add_option("--config", gen.config, "JSON generator config");
  gen.seed_opt = gen_cmd->add_option("--seed", gen.seed, "Random seed (default 7)");
  gen.depth = gen_cmd->add_option("--depth", gen.synth.depth, "Tree depth");
  gen.branching = gen_cmd->add_option("--branching", gen.synth.branching, "Children per internal node");
  gen.vpl = gen_cmd->add_option("--vocab-per-label", gen.synth.vocab_per_label, "Signature tokens per label");
  gen.dpl = gen_cmd->add_option("--docs-per-label", gen.synth.docs_per_label, "Documents per leaf (on average)");
  gen.len = gen_cmd->add_option("--doc-len", gen.synth.doc_len, "Tokens per document");
  gen.imb = gen_cmd->add_option("--imbalance", gen.synth.imbalance_exponent, "Leaf popularity exponent");
  gen.noise = gen_cmd->add_option("--noise-rate", gen.synth.noise_rate, "Probability of a noise token");

  TrainFlags train;
  auto* train_cmd = app.add_subcommand("train", "Train a model");
  add_train_options(train_cmd, train);
  train_cmd->add_option("--checkpoint", train.checkpoint, "Where to save the trained model");
  train_cmd->add_option("--resume", train.resume, "Continue training from a checkpoint");

  TrainFlags ablate;
  auto* ablate_cmd = app.add_subcommand("ablate", "Train every loss variant and compare");
  add_train_options(ablate_cmd, ablate);

  InferFlags eval, predict;
  auto* eval_cmd = app.add_subcommand("eval", "Score a checkpoint on a labelled corpus");
  eval_cmd->add_option("--checkpoint", eval.checkpoint, "Trained model")->required();
  eval_cmd->add_option("--data", eval.data, "Corpus directory or JSONL file")->required();
  eval.threshold_opt = eval_cmd->add_option("--threshold", eval.threshold, "Decision threshold")->check(CLI::Range(0.0, 1.0));
  eval_cmd->add_option("--batch-size", eval.batch_size, "Documents per batch");
  eval_cmd->add_option("--out", eval.out, "Directory for run_manifest.json");

  auto* predict_cmd = app.add_subcommand("predict", "Label documents with a checkpoint");
  predict_cmd->add_option("--checkpoint", predict.checkpoint, "Trained model")->required();
  predict_cmd->add_option("--data", predict.data, "JSONL file; the label field is optional")->required();
  predict.threshold_opt = predict_cmd->add_option("--threshold", predict.threshold, "Decision threshold")->check(CLI::Range(0.0, 1.0));
  predict_cmd->add_option("--batch-size", predict.batch_size, "Documents per batch");
  predict_cmd->add_option("--out", predict.out, "Write JSON lines here instead of stdout");

  std::vector<const char*> argv{"htcim"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen_cmd->parsed()) return cmd_gendata(gen, args, out, err);
    if (train_cmd->parsed()) return cmd_train(train, args, out, err);
    if (ablate_cmd->parsed()) return cmd_ablate(ablate, args, out, err);
    if (eval_cmd->parsed()) return cmd_eval(eval, args, out, err);
    if (predict_cmd->parsed()) return cmd_predict(predict, args, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace htcim
