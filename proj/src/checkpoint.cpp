// Copyright (c) 2026, The HTCInfoMax Authors
// SPDX-License-Identifier: Apache-2.0
#include "htcim/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <set>
#include <ostream>
#include <sstream>

#include "htcim/errors.hpp"

namespace htcim {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[8] = {'H', 'T', 'C', 'I', 'M', 'C', 'K', 'P'};
constexpr char kEndMagic[8] = {'H', 'T', 'C', 'I', 'M', 'E', 'N', 'D'};
// Refuse absurd sizes from corrupt headers before allocating.
constexpr std::uint64_t kMaxCount = std::uint64_t{1} << 34;

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}
  void bytes(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
  void u32(std::uint32_t v) { bytes(&v, sizeof v); }
  void u64(std::uint64_t v) { bytes(&v, sizeof v); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void doubles(std::span<const double> v) { bytes(v.data(), v.size() * sizeof(double)); }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}
  void bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) throw CheckpointError("truncated checkpoint");
  }
  std::uint32_t u32() {
    std::uint32_t v;
    bytes(&v, sizeof v);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v;
    bytes(&v, sizeof v);
    return v;
  }
  std::uint64_t count(const char* what) {
    const auto n = u64();
    if (n > kMaxCount) throw CheckpointError(std::string("corrupt checkpoint: implausible ") + what);
    return n;
  }
  std::string str() {
    const auto n = u32();
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }
  std::vector<double> doubles(std::size_t n) {
    std::vector<double> v(n);
    bytes(v.data(), n * sizeof(double));
    return v;
  }

 private:
  std::istream& in_;
};

}  // namespace

void write_checkpoint(std::ostream& out, const ParamRegistry& params, const AdamState& adam,
                      const nlohmann::json& meta) {
  Writer w(out);
  w.bytes(kMagic, sizeof kMagic);
  w.u32(kCheckpointVersion);
  const auto meta_text = meta.dump();
  w.u64(meta_text.size());
  w.bytes(meta_text.data(), meta_text.size());

  w.u64(params.size());
  for (const auto& e : params.entries()) {
    w.str(e.name);
    w.u32(static_cast<std::uint32_t>(e.tensor.rank()));
    for (std::size_t d : e.tensor.shape()) w.u64(d);
    w.doubles(e.tensor.values());
  }

  // Moments in registry order, so identical states give identical bytes.
  w.u64(adam.step);
  std::uint64_t n_moments = 0;
  for (const auto& e : params.entries()) n_moments += adam.moments.count(e.name);
  w.u64(n_moments);
  for (const auto& e : params.entries()) {
    const auto it = adam.moments.find(e.name);
    if (it == adam.moments.end()) continue;
    w.str(e.name);
    w.u64(it->second.m.size());
    w.doubles(it->second.m);
    w.doubles(it->second.v);
  }
  w.bytes(kEndMagic, sizeof kEndMagic);
}

void save_checkpoint(const std::string& path, const ParamRegistry& params, const AdamState& adam,
                     const nlohmann::json& meta) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint " + path);
  write_checkpoint(out, params, adam, meta);
  out.flush();
  if (!out) throw IoError("failed writing checkpoint " + path);
}

CheckpointData read_checkpoint(std::istream& in) {
  Reader r(in);
  char magic[8];
  r.bytes(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof magic) != 0) throw CheckpointError("not a checkpoint file (bad magic)");
  const auto version = r.u32();
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  }
  CheckpointData data;
  const auto meta_len = r.count("metadata length");
  std::string meta_text(meta_len, '\0');
  r.bytes(meta_text.data(), meta_len);
  try {
    data.meta = nlohmann::json::parse(meta_text);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("corrupt checkpoint metadata: ") + e.what());
  }

  const auto n_params = r.count("parameter count");
  for (std::uint64_t i = 0; i < n_params; ++i) {
    auto name = r.str();
    const auto rank = r.u32();
    if (rank > 8) throw CheckpointError("corrupt checkpoint: rank " + std::to_string(rank) + " for '" + name + "'");
    ad::Shape shape(rank);
    std::uint64_t numel = 1;
    for (auto& d : shape) {
      d = r.count("dimension");
      numel *= d;
      if (numel > kMaxCount) throw CheckpointError("corrupt checkpoint: '" + name + "' is implausibly large");
    }
    auto values = r.doubles(numel);
    data.params.emplace_back(std::move(name), ad::Tensor(std::move(shape), std::move(values)));
  }

  data.adam.step = r.u64();
  const auto n_moments = r.count("moment count");
  for (std::uint64_t i = 0; i < n_moments; ++i) {
    auto name = r.str();
    const auto numel = r.count("moment size");
    AdamMoments mv;
    mv.m = r.doubles(numel);
    mv.v = r.doubles(numel);
    data.adam.moments.emplace(std::move(name), std::move(mv));
  }
  char end[8];
  r.bytes(end, sizeof end);
  if (std::memcmp(end, kEndMagic, sizeof end) != 0) throw CheckpointError("corrupt checkpoint: bad trailer");
  return data;
}

CheckpointData load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path);
  try {
    return read_checkpoint(in);
  } catch (const CheckpointError& e) {
    throw CheckpointError(path + ": " + e.what());
  }
}

void restore_params(ParamRegistry& params, const CheckpointData& data) {
  for (const auto& [name, tensor] : data.params) {
    if (!params.contains(name)) throw CheckpointError("checkpoint holds unknown parameter '" + name + "'");
    const auto& target = params.get(name);
    if (target.shape() != tensor.shape()) {
      throw CheckpointError("shape mismatch for parameter '" + name + "': checkpoint " +
                            ad::to_string(tensor.shape()) + ", model " + ad::to_string(target.shape()));
    }
  }
  std::set<std::string> stored;
  for (const auto& p : data.params) {
    if (!stored.insert(p.first).second) throw CheckpointError("checkpoint repeats parameter '" + p.first + "'");
  }
  for (const auto& e : params.entries()) {
    if (!stored.count(e.name)) throw CheckpointError("checkpoint is missing parameter '" + e.name + "'");
  }
  for (const auto& [name, mv] : data.adam.moments) {
    if (!params.contains(name)) throw CheckpointError("optimizer state for unknown parameter '" + name + "'");
    const auto n = params.get(name).numel();
    if (mv.m.size() != n || mv.v.size() != n) {
      throw CheckpointError("optimizer state size mismatch for parameter '" + name + "'");
    }
  }
  for (const auto& [name, tensor] : data.params) {
    auto target = params.get(name);
    const auto src = tensor.values();
    auto dst = target.mutable_values();
    std::copy(src.begin(), src.end(), dst.begin());
    target.clear_grad();
  }
}

}  // namespace htcim
