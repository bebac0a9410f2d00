// Copyright (c) 2026, The HTCInfoMax Authors
// SPDX-License-Identifier: Apache-2.0
// Parallel kernels against their serial reference versions.
#include <benchmark/benchmark.h>

#include <vector>

#include "htcim/kernels.hpp"
#include "htcim/random.hpp"

namespace {

using htcim::kernels::gemm;

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  htcim::Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

template <bool Reference>
void BM_Gemm(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto n = static_cast<std::size_t>(state.range(1));
  const auto k = static_cast<std::size_t>(state.range(2));
  const auto a = random_vector(m * k, 1), b = random_vector(k * n, 2);
  std::vector<double> c(m * n);
  for (auto _ : state) {
    if constexpr (Reference) {
      htcim::kernels::reference::gemm(false, false, m, n, k, a, b, c);
    } else {
      gemm(false, false, m, n, k, a, b, c);
    }
    benchmark::DoNotOptimize(c.data());
  }
  state.counters["GFLOP/s"] = benchmark::Counter(2.0 * m * n * k, benchmark::Counter::kIsIterationInvariantRate,
                                                  benchmark::Counter::kIs1000);
}

template <bool Reference>
void BM_Conv1d(benchmark::State& state) {
  const std::size_t batch = 32, seq = static_cast<std::size_t>(state.range(0));
  const auto c_in = static_cast<std::size_t>(state.range(1));
  const auto c_out = static_cast<std::size_t>(state.range(2));
  const std::size_t taps = 3, pad = 1;
  const auto x = random_vector(batch * seq * c_in, 3);
  const auto w = random_vector(taps * c_in * c_out, 4);
  std::vector<double> out(batch * seq * c_out), col(batch * seq * taps * c_in);
  for (auto _ : state) {
    if constexpr (Reference) {
      htcim::kernels::reference::conv1d(x, batch, seq, c_in, w, taps, c_out, pad, out);
    } else {
      htcim::kernels::im2col(x, batch, seq, c_in, taps, pad, col);
      gemm(false, false, batch * seq, c_out, taps * c_in, col, w, out);
    }
    benchmark::DoNotOptimize(out.data());
  }
  state.counters["GFLOP/s"] = benchmark::Counter(2.0 * batch * seq * taps * c_in * c_out,
                                                  benchmark::Counter::kIsIterationInvariantRate,
                                                  benchmark::Counter::kIs1000);
}

void gemm_shapes(benchmark::internal::Benchmark* b) {
  b->Args({384, 300, 300})->Args({384, 512, 900})->Args({192, 512, 812})->Args({256, 256, 256});
}

void conv_shapes(benchmark::internal::Benchmark* b) { b->Args({12, 300, 300})->Args({12, 300, 512}); }

}  // namespace

BENCHMARK(BM_Gemm<false>)->Name("gemm/parallel")->Apply(gemm_shapes);
BENCHMARK(BM_Gemm<true>)->Name("gemm/reference")->Apply(gemm_shapes);
BENCHMARK(BM_Conv1d<false>)->Name("conv1d/im2col_gemm")->Apply(conv_shapes);
BENCHMARK(BM_Conv1d<true>)->Name("conv1d/reference")->Apply(conv_shapes);

BENCHMARK_MAIN();
