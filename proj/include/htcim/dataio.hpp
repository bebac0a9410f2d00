// Copyright (c) 2026, The HTCInfoMax Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "htcim/taxonomy.hpp"

namespace htcim {

/// One corpus record as it appears on disk.
struct RawDocument {
  std::vector<std::string> tokens;
  std::vector<std::string> labels;
  /// 1-based source line, 0 when not read from a file.
  std::size_t line = 0;
};

/// Reads JSON-lines records with fields `token` and (optionally) `label`.
/// Blank lines are skipped. Errors carry the 1-based line number.
std::vector<RawDocument> read_jsonl(std::istream& in, bool require_labels = true);
std::vector<RawDocument> read_jsonl_file(const std::string& path, bool require_labels = true);
std::string to_jsonl(const std::vector<RawDocument>& docs);

class Vocabulary {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnk = 1;
  static constexpr std::string_view kPadToken = "<pad>";
  static constexpr std::string_view kUnkToken = "<unk>";

  Vocabulary();
  /// Rebuilds from an id-ordered token list that starts with the reserved pair.
  static Vocabulary from_tokens(const std::vector<std::string>& tokens);

  std::size_t size() const { return tokens_.size(); }
  /// Unknown tokens (and the reserved spellings) map to kUnk.
  std::size_t id(std::string_view token) const;
  const std::string& token(std::size_t id) const { return tokens_.at(id); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  void push(std::string token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Tokens with frequency >= min_freq, by descending frequency; ties keep
/// first-appearance order.
Vocabulary build_vocab(const std::vector<RawDocument>& docs, std::size_t min_freq = 1);

struct Document {
  std::vector<std::size_t> tokens;
  /// Taxonomy ids, ascending and unique. Empty only for unlabeled inference input.
  std::vector<std::size_t> labels;
};

std::vector<Document> to_documents(const std::vector<RawDocument>& raw, const Vocabulary& vocab,
                                   const Taxonomy& tax, bool require_labels = true);
std::vector<Document> load_corpus(const std::string& path, const Vocabulary& vocab,
                                  const Taxonomy& tax, bool require_labels = true);

/// Padded B×S token matrix for one step.
struct Batch {
  std::size_t size = 0;
  std::size_t seq_len = 0;
  std::size_t label_count = 0;
  std::vector<std::size_t> token_ids;  // B×S, kPad beyond each length
  std::vector<double> mask;            // B×S, 1 on real tokens
  std::vector<double> targets;         // B×N multi-hot over target columns
  std::vector<std::vector<std::size_t>> target_columns;
  std::vector<std::size_t> lengths;
  std::vector<std::size_t> doc_index;  // position in the source list
};

struct BatchOptions {
  std::size_t batch_size = 32;
  std::size_t max_len = 64;
  std::optional<std::uint64_t> shuffle_seed;
  /// Drop a trailing partial batch (needed when negatives are drawn in-batch).
  bool drop_last = false;
  bool require_labels = true;
};

/// Truncates to max_len and pads each batch to its longest document.
std::vector<Batch> make_batches(const std::vector<Document>& docs, const BatchOptions& options,
                                const Taxonomy& tax);

/// Fisher-Yates permutation of 0..n-1, a pure function of seed.
std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed);

struct SyntheticConfig {
  std::size_t depth = 3;
  std::size_t branching = 3;
  std::size_t vocab_per_label = 4;
  /// Total documents = docs_per_label × leaf count.
  std::size_t docs_per_label = 232;
  std::size_t doc_len = 10;
  /// Leaf of popularity rank r (1-based) is drawn with weight r^-exponent.
  double imbalance_exponent = 0.0;
  double noise_rate = 0.1;
  std::size_t noise_vocab = 50;
  double val_fraction = 0.1;
  double test_fraction = 0.1;

  void validate() const;
  nlohmann::json to_json() const;
  static SyntheticConfig from_json(const nlohmann::json& j);
};

struct SyntheticCorpus {
  SyntheticConfig config;
  std::uint64_t seed = 0;
  std::string taxonomy_text;
  std::vector<RawDocument> train, val, test;
  /// Taxonomy name of the leaf each document was drawn from, all splits in order.
  std::vector<std::string> leaves;

  std::size_t total_docs() const { return train.size() + val.size() + test.size(); }
};

/// Complete `branching`-ary tree of the given depth; every document's labels
/// are one full root-to-leaf path (root excluded).
SyntheticCorpus generate_synthetic(const SyntheticConfig& config, std::uint64_t seed);

/// Writes taxonomy.txt, train/val/test.jsonl and manifest.json into dir.
void write_synthetic(const SyntheticCorpus& corpus, const std::filesystem::path& dir);

}  // namespace htcim
