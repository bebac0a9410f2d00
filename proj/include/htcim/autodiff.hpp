// Copyright (c) 2026, The HTCInfoMax Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Reverse-mode automatic differentiation over dense double tensors.
//
// Ops are recorded as they execute: every result holds references to its
// inputs and a closure that pushes its output gradient back onto them.
// backward() orders the reachable graph topologically and replays those
// closures once each, in reverse.
//
// Broadcasting is limited to scalar-times-tensor and row-bias addition.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace htcim::ad {

using Shape = std::vector<std::size_t>;

std::string to_string(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

namespace detail {
struct Node;
struct Access;
}  // namespace detail

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor scalar(double value);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;

  std::span<const double> values() const;
  /// Direct write access, reserved for leaves (parameters, inputs).
  std::span<double> mutable_values();
  double item() const;
  double operator[](std::size_t flat_index) const { return values()[flat_index]; }

  bool requires_grad() const;
  Tensor& set_requires_grad(bool on = true);
  bool has_grad() const;
  /// Empty span when no gradient has been accumulated.
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  /// Allocates the buffer if needed and fills it with zeros.
  void zero_grad();
  /// Drops the gradient buffer entirely (has_grad() becomes false).
  void clear_grad();

  /// Copy of the values with no history.
  Tensor detach() const;
  /// Short name of the op that produced this tensor ("leaf" for inputs).
  const char* op_name() const;

  bool same_node(const Tensor& other) const { return node_ == other.node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node> node_;

  friend struct detail::Access;
};

/// Populates grad on every requires_grad leaf reachable from `loss`.
/// Gradients accumulate into existing buffers. Throws ContractError unless
/// loss holds exactly one element.
void backward(const Tensor& loss);

/// While alive on the current thread, ops record no history.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

/// Sign pattern of every ReLU input seen while active. Two evaluations with
/// different signatures straddle a kink. Used by the gradient checker.
class KinkMonitor {
 public:
  KinkMonitor();
  ~KinkMonitor();
  KinkMonitor(const KinkMonitor&) = delete;
  KinkMonitor& operator=(const KinkMonitor&) = delete;

  std::uint64_t signature() const;
  void reset();
};

// ---- linear algebra --------------------------------------------------------

/// [m×k] · [k×n] -> [m×n].
Tensor matmul(const Tensor& a, const Tensor& b);
/// Per-slice product of rank-3 tensors; slices transposed when requested.
Tensor batched_matmul(const Tensor& a, const Tensor& b, bool trans_a = false,
                      bool trans_b = false);
Tensor transpose(const Tensor& a);

/// Same-length cross-correlation along the sequence axis with zero padding.
/// x is [S×C_in] or [B×S×C_in] (each sequence padded independently),
/// kernel is [k×C_in×C_out]. Tap t reads position s + t - (k-1)/2.
Tensor conv1d(const Tensor& x, const Tensor& kernel);

// ---- elementwise -----------------------------------------------------------

enum class Activation { kRelu, kSigmoid, kTanh, kLog, kSoftmax };

Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);
/// Throws DomainError on any nonpositive entry.
Tensor log(const Tensor& x);
/// Softmax over `axis`. Entries where `mask` (same shape, 0/1) is zero are
/// excluded from the normalisation and come out exactly zero. A slice whose
/// mask is entirely zero yields zeros.
Tensor softmax(const Tensor& x, std::size_t axis, const std::vector<double>* mask = nullptr);
Tensor activation(const Tensor& x, Activation kind, std::size_t softmax_axis = 0);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);
Tensor add_scalar(const Tensor& x, double offset);
/// Adds bias[n] to every length-n row of x (x's last extent is n).
Tensor add_row_bias(const Tensor& x, const Tensor& bias);
/// Multiplies each length-`last extent` row of x by a constant weight.
Tensor scale_rows(const Tensor& x, std::span<const double> weights);
/// Identity forward; multiplies the incoming gradient by -factor.
Tensor grad_reverse(const Tensor& x, double factor = 1.0);

// ---- reductions and reshaping ----------------------------------------------

enum class Reduce { kSum, kMean, kMax };

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
Tensor reduce(const Tensor& x, Reduce kind, std::size_t axis);

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
Tensor slice(const Tensor& x, std::size_t axis, std::size_t start, std::size_t length);
Tensor reshape(const Tensor& x, Shape shape);

/// Gathers rows of a [V×d] table. Gradient scatter-adds into the table.
Tensor embedding_lookup(const Tensor& table, std::span<const std::size_t> ids);

/// Mean over elements of -[t·log σ(z) + (1-t)·log(1-σ(z))], computed in logit
/// space. targets has the same number of elements as logits.
Tensor bce_with_logits(const Tensor& logits, std::span<const double> targets);

}  // namespace htcim::ad
