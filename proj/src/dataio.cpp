// Copyright (c) 2026, The HTCInfoMax Authors
// SPDX-License-Identifier: Apache-2.0
#include "htcim/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <sstream>

#include "htcim/errors.hpp"
#include "htcim/random.hpp"

namespace htcim {

namespace {

std::vector<std::string> string_array(const nlohmann::json& obj, const char* field,
                                      std::size_t line_no) {
  const auto& arr = obj.at(field);
  if (!arr.is_array()) {
    throw DataError("line " + std::to_string(line_no) + ": field '" + field +
                    "' must be an array of strings");
  }
  std::vector<std::string> out;
  out.reserve(arr.size());
  for (const auto& v : arr) {
    if (!v.is_string()) {
      throw DataError("line " + std::to_string(line_no) + ": field '" + field +
                      "' must contain only strings");
    }
    out.push_back(v.get<std::string>());
  }
  return out;
}

}  // namespace

std::vector<RawDocument> read_jsonl(std::istream& in, bool require_labels) {
  std::vector<RawDocument> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError("line " + std::to_string(line_no) + ": malformed JSON: " + e.what());
    }
    if (!obj.is_object() || !obj.contains("token")) {
      throw DataError("line " + std::to_string(line_no) + ": expected an object with 'token'");
    }
    RawDocument doc;
    doc.line = line_no;
    doc.tokens = string_array(obj, "token", line_no);
    if (obj.contains("label")) doc.labels = string_array(obj, "label", line_no);
    if (require_labels && doc.labels.empty()) {
      throw DataError("line " + std::to_string(line_no) + ": empty label list");
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

std::vector<RawDocument> read_jsonl_file(const std::string& path, bool require_labels) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus file " + path);
  try {
    return read_jsonl(in, require_labels);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

std::string to_jsonl(const std::vector<RawDocument>& docs) {
  std::string out;
  for (const auto& d : docs) {
    nlohmann::json obj;
    obj["token"] = d.tokens;
    obj["label"] = d.labels;
    out += obj.dump();
    out += '\n';
  }
  return out;
}

// ---- vocabulary ------------------------------------------------------------

Vocabulary::Vocabulary() {
  push(std::string(kPadToken));
  push(std::string(kUnkToken));
}

void Vocabulary::push(std::string token) {
  index_.emplace(token, tokens_.size());
  tokens_.push_back(std::move(token));
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& tokens) {
  if (tokens.size() < 2 || tokens[0] != kPadToken || tokens[1] != kUnkToken) {
    throw DataError("vocabulary must start with the reserved <pad>, <unk> tokens");
  }
  Vocabulary v;
  for (std::size_t i = 2; i < tokens.size(); ++i) {
    if (v.index_.count(tokens[i])) throw DataError("duplicate vocabulary token '" + tokens[i] + "'");
    v.push(tokens[i]);
  }
  return v;
}

std::size_t Vocabulary::id(std::string_view token) const {
  if (token == kPadToken || token == kUnkToken) return kUnk;
  const auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

Vocabulary build_vocab(const std::vector<RawDocument>& docs, std::size_t min_freq) {
  if (min_freq < 1) throw ConfigError("build_vocab: min_freq must be >= 1");
  std::unordered_map<std::string, std::size_t> freq;
  std::vector<std::string> order;
  for (const auto& d : docs) {
    for (const auto& t : d.tokens) {
      if (t == Vocabulary::kPadToken || t == Vocabulary::kUnkToken) continue;
      auto [it, inserted] = freq.emplace(t, 0);
      if (inserted) order.push_back(t);
      ++it->second;
    }
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](const std::string& a, const std::string& b) { return freq[a] > freq[b]; });
  std::vector<std::string> tokens{std::string(Vocabulary::kPadToken),
                                  std::string(Vocabulary::kUnkToken)};
  for (const auto& t : order)
    if (freq[t] >= min_freq) tokens.push_back(t);
  return Vocabulary::from_tokens(tokens);
}

// ---- documents and batches -------------------------------------------------

std::vector<Document> to_documents(const std::vector<RawDocument>& raw, const Vocabulary& vocab,
                                   const Taxonomy& tax, bool require_labels) {
  std::vector<Document> docs;
  docs.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto& r = raw[i];
    const std::string where = r.line ? "line " + std::to_string(r.line) + ": "
                                     : "record " + std::to_string(i + 1) + ": ";
    if (r.tokens.empty()) throw DataError(where + "empty token list");
    if (require_labels && r.labels.empty()) throw DataError(where + "empty label list");
    Document d;
    d.tokens.reserve(r.tokens.size());
    for (const auto& t : r.tokens) d.tokens.push_back(vocab.id(t));
    for (const auto& name : r.labels) {
      if (!tax.contains(name)) throw DataError(where + "unknown label '" + name + "'");
      const std::size_t id = tax.id(name);
      if (id == tax.root()) throw DataError(where + "the root cannot be a document label");
      d.labels.push_back(id);
    }
    std::sort(d.labels.begin(), d.labels.end());
    d.labels.erase(std::unique(d.labels.begin(), d.labels.end()), d.labels.end());
    docs.push_back(std::move(d));
  }
  return docs;
}

std::vector<Document> load_corpus(const std::string& path, const Vocabulary& vocab,
                                  const Taxonomy& tax, bool require_labels) {
  const auto raw = read_jsonl_file(path, require_labels);
  try {
    return to_documents(raw, vocab, tax, require_labels);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
  return idx;
}

std::vector<Batch> make_batches(const std::vector<Document>& docs, const BatchOptions& options,
                                const Taxonomy& tax) {
  if (options.batch_size < 1) throw ContractError("make_batches: batch_size must be >= 1");
  if (options.drop_last && options.batch_size < 2) {
    throw ContractError("make_batches: in-batch negatives need batch_size >= 2");
  }
  if (options.max_len < 1) throw ContractError("make_batches: max_len must be >= 1");

  std::vector<std::size_t> order(docs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (options.shuffle_seed) order = shuffled_indices(docs.size(), *options.shuffle_seed);

  const std::size_t n_labels = tax.target_count();
  std::vector<Batch> batches;
  for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
    const std::size_t count = std::min(options.batch_size, order.size() - start);
    if (count < options.batch_size && options.drop_last) break;
    Batch b;
    b.size = count;
    b.label_count = n_labels;
    for (std::size_t k = 0; k < count; ++k) {
      const auto& d = docs[order[start + k]];
      const std::size_t len = std::min(d.tokens.size(), options.max_len);
      if (len == 0) {
        throw DataError("document " + std::to_string(order[start + k]) +
                        " has no tokens after truncation");
      }
      if (options.require_labels && d.labels.empty()) {
        throw DataError("document " + std::to_string(order[start + k]) + " has no labels");
      }
      b.lengths.push_back(len);
      b.doc_index.push_back(order[start + k]);
      b.seq_len = std::max(b.seq_len, len);
    }
    b.token_ids.assign(count * b.seq_len, Vocabulary::kPad);
    b.mask.assign(count * b.seq_len, 0.0);
    b.targets.assign(count * n_labels, 0.0);
    b.target_columns.resize(count);
    for (std::size_t k = 0; k < count; ++k) {
      const auto& d = docs[order[start + k]];
      for (std::size_t s = 0; s < b.lengths[k]; ++s) {
        b.token_ids[k * b.seq_len + s] = d.tokens[s];
        b.mask[k * b.seq_len + s] = 1.0;
      }
      for (std::size_t id : d.labels) {
        const std::size_t col = tax.target_column(id);
        b.targets[k * n_labels + col] = 1.0;
        b.target_columns[k].push_back(col);
      }
    }
    batches.push_back(std::move(b));
  }
  return batches;
}

// ---- synthetic corpus ------------------------------------------------------

void SyntheticConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("synthetic config: " + msg); };
  if (depth < 1) fail("depth must be >= 1");
  if (branching < 2) fail("branching must be >= 2");
  if (vocab_per_label < 1) fail("vocab_per_label must be >= 1");
  if (docs_per_label < 1) fail("docs_per_label must be >= 1");
  if (doc_len < 1) fail("doc_len must be >= 1");
  if (!(imbalance_exponent >= 0.0) || !std::isfinite(imbalance_exponent))
    fail("imbalance_exponent must be a finite value >= 0");
  if (!(noise_rate >= 0.0 && noise_rate <= 1.0)) fail("noise_rate must lie in [0, 1]");
  if (noise_rate > 0.0 && noise_vocab < 1) fail("noise_vocab must be >= 1 when noise_rate > 0");
  if (!(val_fraction >= 0.0 && test_fraction >= 0.0 && val_fraction + test_fraction < 1.0))
    fail("val_fraction + test_fraction must lie in [0, 1)");
  // Guard against accidentally enormous trees.
  double nodes = 1.0, level = 1.0;
  for (std::size_t d = 0; d < depth; ++d) nodes += (level *= static_cast<double>(branching));
  if (nodes > 1e6) fail("taxonomy would exceed 1e6 nodes");
}

nlohmann::json SyntheticConfig::to_json() const {
  return {{"depth", depth},
          {"branching", branching},
          {"vocab_per_label", vocab_per_label},
          {"docs_per_label", docs_per_label},
          {"doc_len", doc_len},
          {"imbalance_exponent", imbalance_exponent},
          {"noise_rate", noise_rate},
          {"noise_vocab", noise_vocab},
          {"val_fraction", val_fraction},
          {"test_fraction", test_fraction}};
}

SyntheticConfig SyntheticConfig::from_json(const nlohmann::json& j) {
  SyntheticConfig c;
  try {
    c.depth = j.value("depth", c.depth);
    c.branching = j.value("branching", c.branching);
    c.vocab_per_label = j.value("vocab_per_label", c.vocab_per_label);
    c.docs_per_label = j.value("docs_per_label", c.docs_per_label);
    c.doc_len = j.value("doc_len", c.doc_len);
    c.imbalance_exponent = j.value("imbalance_exponent", c.imbalance_exponent);
    c.noise_rate = j.value("noise_rate", c.noise_rate);
    c.noise_vocab = j.value("noise_vocab", c.noise_vocab);
    c.val_fraction = j.value("val_fraction", c.val_fraction);
    c.test_fraction = j.value("test_fraction", c.test_fraction);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("synthetic config: ") + e.what());
  }
  return c;
}

SyntheticCorpus generate_synthetic(const SyntheticConfig& config, std::uint64_t seed) {
  config.validate();
  SyntheticCorpus corpus;
  corpus.config = config;
  corpus.seed = seed;

  // Breadth-first complete tree; names encode the path from the root.
  std::vector<std::string> frontier{std::string(kRootToken)};
  std::vector<std::vector<std::string>> paths{{}};
  std::string tax_text;
  for (std::size_t level = 0; level < config.depth; ++level) {
    std::vector<std::string> next;
    std::vector<std::vector<std::string>> next_paths;
    for (std::size_t i = 0; i < frontier.size(); ++i) {
      tax_text += frontier[i];
      for (std::size_t c = 0; c < config.branching; ++c) {
        std::string child = level == 0 ? "L" + std::to_string(c)
                                       : frontier[i] + "-" + std::to_string(c);
        tax_text += "\t" + child;
        auto p = paths[i];
        p.push_back(child);
        next.push_back(child);
        next_paths.push_back(std::move(p));
      }
      tax_text += "\n";
    }
    frontier = std::move(next);
    paths = std::move(next_paths);
  }
  corpus.taxonomy_text = tax_text;

  const std::size_t leaves = frontier.size();
  Rng rng(derive_seed(seed, 0));

  // Popularity ranks are a random permutation of the leaves.
  const auto rank_of = shuffled_indices(leaves, derive_seed(seed, 1));
  std::vector<double> cumulative(leaves);
  double total = 0.0;
  for (std::size_t leaf = 0; leaf < leaves; ++leaf) {
    total += std::pow(static_cast<double>(rank_of[leaf] + 1), -config.imbalance_exponent);
    cumulative[leaf] = total;
  }

  auto signature = [&](const std::string& label, std::size_t k) {
    return "w_" + label + "_" + std::to_string(k);
  };

  const std::size_t n_docs = config.docs_per_label * leaves;
  std::vector<RawDocument> docs;
  docs.reserve(n_docs);
  corpus.leaves.reserve(n_docs);
  for (std::size_t n = 0; n < n_docs; ++n) {
    const double u = rng.uniform() * total;
    const std::size_t leaf = std::min<std::size_t>(
        leaves - 1,
        static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) -
                                 cumulative.begin()));
    const auto& path = paths[leaf];
    RawDocument d;
    d.labels = path;
    d.tokens.reserve(config.doc_len);
    for (std::size_t t = 0; t < config.doc_len; ++t) {
      if (config.noise_rate > 0.0 && rng.uniform() < config.noise_rate) {
        d.tokens.push_back("noise_" + std::to_string(rng.below(config.noise_vocab)));
      } else {
        const auto& label = path[rng.below(path.size())];
        d.tokens.push_back(signature(label, rng.below(config.vocab_per_label)));
      }
    }
    corpus.leaves.push_back(frontier[leaf]);
    docs.push_back(std::move(d));
  }

  const auto n_val = static_cast<std::size_t>(std::llround(config.val_fraction * static_cast<double>(n_docs)));
  const auto n_test = static_cast<std::size_t>(std::llround(config.test_fraction * static_cast<double>(n_docs)));
  const std::size_t n_train = n_docs - n_val - n_test;
  corpus.train.assign(docs.begin(), docs.begin() + static_cast<std::ptrdiff_t>(n_train));
  corpus.val.assign(docs.begin() + static_cast<std::ptrdiff_t>(n_train),
                    docs.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  corpus.test.assign(docs.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), docs.end());
  return corpus;
}

void write_synthetic(const SyntheticCorpus& corpus, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  auto write = [&](const std::string& name, const std::string& content) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw IoError("cannot write " + (dir / name).string());
    out << content;
    if (!out) throw IoError("failed writing " + (dir / name).string());
  };
  write("taxonomy.txt", corpus.taxonomy_text);
  write("train.jsonl", to_jsonl(corpus.train));
  write("val.jsonl", to_jsonl(corpus.val));
  write("test.jsonl", to_jsonl(corpus.test));
  nlohmann::json manifest{{"generator", "synthetic-hierarchy"},
                          {"config", corpus.config.to_json()},
                          {"seed", corpus.seed},
                          {"files",
                           {{"taxonomy", "taxonomy.txt"},
                            {"train", "train.jsonl"},
                            {"val", "val.jsonl"},
                            {"test", "test.jsonl"}}},
                          {"splits",
                           {{"train", corpus.train.size()},
                            {"val", corpus.val.size()},
                            {"test", corpus.test.size()}}}};
  write("manifest.json", manifest.dump(2) + "\n");
}

}  // namespace htcim
