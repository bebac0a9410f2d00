// Copyright (c) 2026, The HTCInfoMax Authors
// SPDX-License-Identifier: Apache-2.0
#include "htcim/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cstring>
#include <vector>

namespace htcim::kernels {

namespace {

constexpr std::size_t kRowBlock = 64;
constexpr std::size_t kColBlock = 256;
constexpr std::size_t kDepthBlock = 128;
// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::size_t kParallelWork = std::size_t{1} << 18;

// c rows [i, i+4) over columns [j0, j1) and depth [p0, p1).
inline void micro4(const double* a, std::size_t a_row, std::size_t a_col,
                   const double* __restrict b, std::size_t n, double* __restrict c,
                   std::size_t i, std::size_t j0, std::size_t j1, std::size_t p0,
                   std::size_t p1) {
  double* __restrict c0 = c + (i + 0) * n;
  double* __restrict c1 = c + (i + 1) * n;
  double* __restrict c2 = c + (i + 2) * n;
  double* __restrict c3 = c + (i + 3) * n;
  for (std::size_t p = p0; p < p1; ++p) {
    const double a0 = a[(i + 0) * a_row + p * a_col];
    const double a1 = a[(i + 1) * a_row + p * a_col];
    const double a2 = a[(i + 2) * a_row + p * a_col];
    const double a3 = a[(i + 3) * a_row + p * a_col];
    const double* __restrict brow = b + p * n;
#pragma omp simd
    for (std::size_t j = j0; j < j1; ++j) {
      const double bv = brow[j];
      c0[j] += a0 * bv;
      c1[j] += a1 * bv;
      c2[j] += a2 * bv;
      c3[j] += a3 * bv;
    }
  }
}

inline void micro1(const double* a, std::size_t a_row, std::size_t a_col,
                   const double* __restrict b, std::size_t n, double* __restrict c,
                   std::size_t i, std::size_t j0, std::size_t j1, std::size_t p0,
                   std::size_t p1) {
  double* __restrict c0 = c + i * n;
  for (std::size_t p = p0; p < p1; ++p) {
    const double a0 = a[i * a_row + p * a_col];
    const double* __restrict brow = b + p * n;
#pragma omp simd
    for (std::size_t j = j0; j < j1; ++j) c0[j] += a0 * brow[j];
  }
}

// c += op(a) · b with b stored k×n.
void gemm_nn(bool trans_a, std::size_t m, std::size_t n, std::size_t k, const double* a,
             const double* b, double* c) {
  const std::size_t a_row = trans_a ? 1 : k;
  const std::size_t a_col = trans_a ? m : 1;
  const std::size_t blocks = (m + kRowBlock - 1) / kRowBlock;
  const bool parallel = m * n * k >= kParallelWork && blocks > 1;
#pragma omp parallel for schedule(static) if (parallel)
  for (std::size_t blk = 0; blk < blocks; ++blk) {
    const std::size_t i0 = blk * kRowBlock;
    const std::size_t i1 = std::min(m, i0 + kRowBlock);
    for (std::size_t j0 = 0; j0 < n; j0 += kColBlock) {
      const std::size_t j1 = std::min(n, j0 + kColBlock);
      for (std::size_t p0 = 0; p0 < k; p0 += kDepthBlock) {
        const std::size_t p1 = std::min(k, p0 + kDepthBlock);
        std::size_t i = i0;
        for (; i + 4 <= i1; i += 4) micro4(a, a_row, a_col, b, n, c, i, j0, j1, p0, p1);
        for (; i < i1; ++i) micro1(a, a_row, a_col, b, n, c, i, j0, j1, p0, p1);
      }
    }
  }
}

}  // namespace

void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,
          std::span<const double> a, std::span<const double> b, std::span<double> c,
          bool accumulate) {
  if (!accumulate) std::fill(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(m * n), 0.0);
  if (m == 0 || n == 0 || k == 0) return;
  if (!trans_b) {
    gemm_nn(trans_a, m, n, k, a.data(), b.data(), c.data());
    return;
  }
  // b is n×k; repack as k×n so the inner loop streams contiguous rows.
  std::vector<double> bt(k * n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t p = 0; p < k; ++p) bt[p * n + j] = b[j * k + p];
  gemm_nn(trans_a, m, n, k, a.data(), bt.data(), c.data());
}

void im2col(std::span<const double> x, std::size_t batch, std::size_t seq,
            std::size_t channels, std::size_t taps, std::size_t left_pad,
            std::span<double> col) {
  const std::size_t width = taps * channels;
  const std::size_t rows = batch * seq;
#pragma omp parallel for schedule(static) if (rows * width >= kParallelWork)
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t b = r / seq;
    const std::size_t s = r % seq;
    double* out = col.data() + r * width;
    for (std::size_t t = 0; t < taps; ++t) {
      const auto src = static_cast<std::ptrdiff_t>(s + t) - static_cast<std::ptrdiff_t>(left_pad);
      if (src < 0 || src >= static_cast<std::ptrdiff_t>(seq)) {
        std::memset(out + t * channels, 0, channels * sizeof(double));
      } else {
        std::memcpy(out + t * channels,
                    x.data() + (b * seq + static_cast<std::size_t>(src)) * channels,
                    channels * sizeof(double));
      }
    }
  }
}

void col2im_add(std::span<const double> col, std::size_t batch, std::size_t seq,
                std::size_t channels, std::size_t taps, std::size_t left_pad,
                std::span<double> dx) {
  const std::size_t width = taps * channels;
  // Parallel over destination positions: each one gathers its taps in a fixed order.
  const std::size_t rows = batch * seq;
#pragma omp parallel for schedule(static) if (rows * width >= kParallelWork)
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t b = r / seq;
    const std::size_t d = r % seq;
    double* dst = dx.data() + r * channels;
    for (std::size_t t = 0; t < taps; ++t) {
      // Output position s reads d when s + t - left_pad == d.
      const auto s = static_cast<std::ptrdiff_t>(d + left_pad) - static_cast<std::ptrdiff_t>(t);
      if (s < 0 || s >= static_cast<std::ptrdiff_t>(seq)) continue;
      const double* src = col.data() + (b * seq + static_cast<std::size_t>(s)) * width + t * channels;
      for (std::size_t ch = 0; ch < channels; ++ch) dst[ch] += src[ch];
    }
  }
}

int max_threads() { return omp_get_max_threads(); }

namespace reference {

void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,
          std::span<const double> a, std::span<const double> b, std::span<double> c,
          bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double sum = 0.0;
      for (std::size_t p = 0; p < k; ++p) {
        const double av = trans_a ? a[p * m + i] : a[i * k + p];
        const double bv = trans_b ? b[j * k + p] : b[p * n + j];
        sum += av * bv;
      }
      c[i * n + j] = accumulate ? c[i * n + j] + sum : sum;
    }
  }
}

void conv1d(std::span<const double> x, std::size_t batch, std::size_t seq, std::size_t c_in,
            std::span<const double> kernel, std::size_t taps, std::size_t c_out,
            std::size_t left_pad, std::span<double> out) {
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t s = 0; s < seq; ++s) {
      for (std::size_t o = 0; o < c_out; ++o) {
        double sum = 0.0;
        for (std::size_t t = 0; t < taps; ++t) {
          const auto src = static_cast<std::ptrdiff_t>(s + t) - static_cast<std::ptrdiff_t>(left_pad);
          if (src < 0 || src >= static_cast<std::ptrdiff_t>(seq)) continue;
          for (std::size_t i = 0; i < c_in; ++i) {
            sum += x[(b * seq + static_cast<std::size_t>(src)) * c_in + i] *
                   kernel[(t * c_in + i) * c_out + o];
          }
        }
        out[(b * seq + s) * c_out + o] = sum;
      }
    }
  }
}

}  // namespace reference

}  // namespace htcim::kernels
