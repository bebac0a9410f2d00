// Copyright (c) 2026, The HTCInfoMax Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Dense row-major kernels behind the autodiff engine.
//
// The parallel kernels split work over rows of the output only, so every
// output element is reduced in the same order no matter how many threads
// run. Results are therefore bit-identical across thread counts.
//
// `reference::` holds naive serial versions used by the tests and the
// benchmark as ground truth.

#include <cstddef>
#include <span>

namespace htcim::kernels {

/// c[m×n] (+)= op(a) · op(b), where op transposes when the flag is set.
/// a is stored m×k (k×m when transposed), b is k×n (n×k when transposed).
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,
          std::span<const double> a, std::span<const double> b, std::span<double> c,
          bool accumulate = false);

/// Unfolds `batch` sequences of shape seq×channels into rows of taps×channels
/// windows. Tap t of output position s reads input position s + t - left_pad;
/// out-of-range reads are zero.
void im2col(std::span<const double> x, std::size_t batch, std::size_t seq,
            std::size_t channels, std::size_t taps, std::size_t left_pad,
            std::span<double> col);

/// Adjoint of im2col: scatter-adds window rows back onto the sequence.
void col2im_add(std::span<const double> col, std::size_t batch, std::size_t seq,
                std::size_t channels, std::size_t taps, std::size_t left_pad,
                std::span<double> dx);

/// Threads the OpenMP runtime will use for the next parallel region.
int max_threads();

namespace reference {

void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,
          std::span<const double> a, std::span<const double> b, std::span<double> c,
          bool accumulate = false);

/// Direct cross-correlation with zero padding. kernel is taps×c_in×c_out.
void conv1d(std::span<const double> x, std::size_t batch, std::size_t seq, std::size_t c_in,
            std::span<const double> kernel, std::size_t taps, std::size_t c_out,
            std::size_t left_pad, std::span<double> out);

}  // namespace reference

}  // namespace htcim::kernels
