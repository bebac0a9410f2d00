// Copyright (c) 2026, The HTCInfoMax Authors
// SPDX-License-Identifier: Apache-2.0
#include "htcim/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <unordered_set>
#include <utility>

#include "htcim/errors.hpp"
#include "htcim/kernels.hpp"

namespace htcim::ad {

std::string to_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool grad_ready = false;
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward_fn;

  std::vector<double>& grad_buffer() {
    if (!grad_ready) {
      grad.assign(value.size(), 0.0);
      grad_ready = true;
    }
    return grad;
  }
};

namespace {
thread_local bool g_grad_enabled = true;
thread_local int g_kink_depth = 0;
thread_local std::uint64_t g_kink_signature = 0;
constexpr std::uint64_t kFnvOffset = 1469598103934665603ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;
}  // namespace

struct Access {
  static Node& node(const Tensor& t) {
    if (!t.node_) throw ContractError("operation on an undefined tensor");
    return *t.node_;
  }
  static const std::shared_ptr<Node>& ptr(const Tensor& t) { return t.node_; }

  // Builds an op result. History is kept only when recording is on and some
  // input needs a gradient.
  static Tensor make(Shape shape, std::vector<double> value, const char* op,
                     std::initializer_list<const Tensor*> inputs,
                     std::function<void(Node&)> backward_fn) {
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->value = std::move(value);
    n->op = op;
    bool needs = false;
    if (g_grad_enabled) {
      for (const Tensor* in : inputs) needs = needs || node(*in).requires_grad;
    }
    if (needs) {
      n->requires_grad = true;
      for (const Tensor* in : inputs) n->inputs.push_back(in->node_);
      n->backward_fn = std::move(backward_fn);
    }
    return Tensor(std::move(n));
  }

  static Tensor make_many(Shape shape, std::vector<double> value, const char* op,
                          const std::vector<Tensor>& inputs,
                          std::function<void(Node&)> backward_fn) {
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->value = std::move(value);
    n->op = op;
    bool needs = false;
    if (g_grad_enabled) {
      for (const auto& in : inputs) needs = needs || node(in).requires_grad;
    }
    if (needs) {
      n->requires_grad = true;
      for (const auto& in : inputs) n->inputs.push_back(in.node_);
      n->backward_fn = std::move(backward_fn);
    }
    return Tensor(std::move(n));
  }
};

// Gradient buffer of the i-th input, or nullptr when it needs none.
inline double* input_grad(Node& self, std::size_t i) {
  Node& in = *self.inputs[i];
  if (!in.requires_grad) return nullptr;
  return in.grad_buffer().data();
}

inline const std::vector<double>& input_value(const Node& self, std::size_t i) {
  return self.inputs[i]->value;
}

}  // namespace detail

using detail::Access;
using detail::Node;

// ---- Tensor ----------------------------------------------------------------

Tensor::Tensor(Shape shape, double fill) : node_(std::make_shared<detail::Node>()) {
  node_->value.assign(shape_numel(shape), fill);
  node_->shape = std::move(shape);
}

Tensor::Tensor(Shape shape, std::vector<double> values) : node_(std::make_shared<detail::Node>()) {
  if (shape_numel(shape) != values.size()) {
    throw DimensionError("tensor shape " + to_string(shape) + " does not hold " +
                         std::to_string(values.size()) + " values");
  }
  node_->shape = std::move(shape);
  node_->value = std::move(values);
}

Tensor Tensor::scalar(double value) { return Tensor(Shape{}, std::vector<double>{value}); }

const Shape& Tensor::shape() const { return Access::node(*this).shape; }

std::size_t Tensor::dim(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size()) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for " + to_string(s));
  }
  return s[axis];
}

std::size_t Tensor::numel() const { return Access::node(*this).value.size(); }

std::span<const double> Tensor::values() const { return Access::node(*this).value; }

std::span<double> Tensor::mutable_values() { return Access::node(*this).value; }

double Tensor::item() const {
  const auto& n = Access::node(*this);
  if (n.value.size() != 1) {
    throw ContractError("item() on tensor of shape " + to_string(n.shape));
  }
  return n.value[0];
}

bool Tensor::requires_grad() const { return Access::node(*this).requires_grad; }

Tensor& Tensor::set_requires_grad(bool on) {
  Access::node(*this).requires_grad = on;
  return *this;
}

bool Tensor::has_grad() const { return Access::node(*this).grad_ready; }

std::span<const double> Tensor::grad() const {
  const auto& n = Access::node(*this);
  if (!n.grad_ready) return {};
  return n.grad;
}

std::span<double> Tensor::mutable_grad() { return Access::node(*this).grad_buffer(); }

void Tensor::zero_grad() {
  auto& g = Access::node(*this).grad_buffer();
  std::fill(g.begin(), g.end(), 0.0);
}

void Tensor::clear_grad() {
  auto& n = Access::node(*this);
  n.grad.clear();
  n.grad.shrink_to_fit();
  n.grad_ready = false;
}

Tensor Tensor::detach() const {
  const auto& n = Access::node(*this);
  return Tensor(n.shape, n.value);
}

const char* Tensor::op_name() const { return Access::node(*this).op; }

// ---- recording controls ----------------------------------------------------

NoGradGuard::NoGradGuard() : previous_(detail::g_grad_enabled) { detail::g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { detail::g_grad_enabled = previous_; }
bool grad_enabled() { return detail::g_grad_enabled; }

KinkMonitor::KinkMonitor() {
  if (detail::g_kink_depth++ == 0) detail::g_kink_signature = detail::kFnvOffset;
}
KinkMonitor::~KinkMonitor() { --detail::g_kink_depth; }
std::uint64_t KinkMonitor::signature() const { return detail::g_kink_signature; }
void KinkMonitor::reset() { detail::g_kink_signature = detail::kFnvOffset; }

// ---- backward --------------------------------------------------------------

void backward(const Tensor& loss) {
  Node& root = Access::node(loss);
  if (root.value.size() != 1) {
    throw ContractError("backward() needs a scalar loss, got shape " + to_string(root.shape));
  }
  if (!root.requires_grad) {
    throw ContractError("backward(): loss does not depend on any tensor that requires grad");
  }

  // Iterative post-order DFS gives a topological order (inputs first).
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{&root, 0}};
  visited.insert(&root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (child->requires_grad && child->backward_fn && visited.insert(child).second) {
        stack.emplace_back(child, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node* n : order) {
    n->grad.assign(n->value.size(), 0.0);
    n->grad_ready = true;
  }
  root.grad[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) (*it)->backward_fn(**it);
  // Intermediate gradients are scratch; leaves keep theirs.
  for (Node* n : order) {
    n->grad.clear();
    n->grad.shrink_to_fit();
    n->grad_ready = false;
  }
}

// ---- linear algebra --------------------------------------------------------

namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) +
                         ", got " + to_string(t.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                         to_string(b.shape()));
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw DimensionError("matmul: inner dimensions disagree: " + to_string(a.shape()) + " vs " +
                         to_string(b.shape()));
  }
  std::vector<double> out(m * n);
  kernels::gemm(false, false, m, n, k, a.values(), b.values(), out);
  return Access::make({m, n}, std::move(out), "matmul", {&a, &b}, [m, n, k](Node& self) {
    const auto& av = detail::input_value(self, 0);
    const auto& bv = detail::input_value(self, 1);
    if (double* da = detail::input_grad(self, 0)) {
      kernels::gemm(false, true, m, k, n, self.grad, bv, {da, m * k}, true);
    }
    if (double* db = detail::input_grad(self, 1)) {
      kernels::gemm(true, false, k, n, m, av, self.grad, {db, k * n}, true);
    }
  });
}

Tensor batched_matmul(const Tensor& a, const Tensor& b, bool trans_a, bool trans_b) {
  require_rank(a, 3, "batched_matmul");
  require_rank(b, 3, "batched_matmul");
  const std::size_t batch = a.dim(0);
  const std::size_t m = trans_a ? a.dim(2) : a.dim(1);
  const std::size_t k = trans_a ? a.dim(1) : a.dim(2);
  const std::size_t kb = trans_b ? b.dim(2) : b.dim(1);
  const std::size_t n = trans_b ? b.dim(1) : b.dim(2);
  if (b.dim(0) != batch || kb != k) {
    throw DimensionError("batched_matmul: incompatible operands " + to_string(a.shape()) +
                         " vs " + to_string(b.shape()));
  }
  std::vector<double> out(batch * m * n);
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t s = 0; s < batch; ++s) {
    kernels::gemm(trans_a, trans_b, m, n, k, av.subspan(s * m * k, m * k),
                  bv.subspan(s * k * n, k * n), std::span<double>(out).subspan(s * m * n, m * n));
  }
  return Access::make(
      {batch, m, n}, std::move(out), "batched_matmul", {&a, &b},
      [batch, m, n, k, trans_a, trans_b](Node& self) {
        const std::span<const double> av = detail::input_value(self, 0);
        const std::span<const double> bv = detail::input_value(self, 1);
        const std::span<const double> dc = self.grad;
        double* da = detail::input_grad(self, 0);
        double* db = detail::input_grad(self, 1);
        for (std::size_t s = 0; s < batch; ++s) {
          const auto as = av.subspan(s * m * k, m * k);
          const auto bs = bv.subspan(s * k * n, k * n);
          const auto cs = dc.subspan(s * m * n, m * n);
          if (da) {
            std::span<double> out{da + s * m * k, m * k};
            if (!trans_a && !trans_b) kernels::gemm(false, true, m, k, n, cs, bs, out, true);
            if (trans_a && !trans_b) kernels::gemm(false, true, k, m, n, bs, cs, out, true);
            if (!trans_a && trans_b) kernels::gemm(false, false, m, k, n, cs, bs, out, true);
            if (trans_a && trans_b) kernels::gemm(true, true, k, m, n, bs, cs, out, true);
          }
          if (db) {
            std::span<double> out{db + s * k * n, k * n};
            if (!trans_a && !trans_b) kernels::gemm(true, false, k, n, m, as, cs, out, true);
            if (trans_a && !trans_b) kernels::gemm(false, false, k, n, m, as, cs, out, true);
            if (!trans_a && trans_b) kernels::gemm(true, false, n, k, m, cs, as, out, true);
            if (trans_a && trans_b) kernels::gemm(true, true, n, k, m, cs, as, out, true);
          }
        }
      });
}

Tensor transpose(const Tensor& a) {
  require_rank(a, 2, "transpose");
  const std::size_t r = a.dim(0), c = a.dim(1);
  std::vector<double> out(r * c);
  const auto v = a.values();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = v[i * c + j];
  return Access::make({c, r}, std::move(out), "transpose", {&a}, [r, c](Node& self) {
    if (double* da = detail::input_grad(self, 0)) {
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) da[i * c + j] += self.grad[j * r + i];
    }
  });
}

Tensor conv1d(const Tensor& x, const Tensor& kernel) {
  require_rank(kernel, 3, "conv1d kernel");
  if (x.rank() != 2 && x.rank() != 3) {
    throw DimensionError("conv1d: input must be [S x C] or [B x S x C], got " +
                         to_string(x.shape()));
  }
  const bool batched = x.rank() == 3;
  const std::size_t batch = batched ? x.dim(0) : 1;
  const std::size_t seq = x.dim(batched ? 1 : 0);
  const std::size_t c_in = x.dim(batched ? 2 : 1);
  const std::size_t taps = kernel.dim(0);
  const std::size_t c_out = kernel.dim(2);
  if (kernel.dim(1) != c_in) {
    throw DimensionError("conv1d: input channels of " + to_string(x.shape()) +
                         " do not match kernel " + to_string(kernel.shape()));
  }
  if (seq == 0) throw DomainError("conv1d: empty sequence");
  if (taps == 0) throw DimensionError("conv1d: kernel has no taps");
  const std::size_t left = (taps - 1) / 2;
  const std::size_t rows = batch * seq;
  const std::size_t width = taps * c_in;

  std::vector<double> col(rows * width);
  kernels::im2col(x.values(), batch, seq, c_in, taps, left, col);
  std::vector<double> out(rows * c_out);
  kernels::gemm(false, false, rows, c_out, width, col, kernel.values(), out);

  Shape shape = batched ? Shape{batch, seq, c_out} : Shape{seq, c_out};
  return Access::make(
      std::move(shape), std::move(out), "conv1d", {&x, &kernel},
      [col = std::move(col), batch, seq, c_in, c_out, taps, left, rows, width](Node& self) {
        if (double* dk = detail::input_grad(self, 1)) {
          kernels::gemm(true, false, width, c_out, rows, col, self.grad, {dk, width * c_out}, true);
        }
        if (double* dx = detail::input_grad(self, 0)) {
          std::vector<double> dcol(rows * width);
          kernels::gemm(false, true, rows, width, c_out, self.grad, detail::input_value(self, 1),
                        dcol);
          kernels::col2im_add(dcol, batch, seq, c_in, taps, left, {dx, rows * c_in});
        }
      });
}

// ---- elementwise -----------------------------------------------------------

Tensor relu(const Tensor& x) {
  const auto v = x.values();
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] > 0.0 ? v[i] : 0.0;
  if (detail::g_kink_depth > 0) {
    auto sig = detail::g_kink_signature;
    for (double e : v) sig = (sig ^ (e > 0.0 ? 1u : 2u)) * detail::kFnvPrime;
    detail::g_kink_signature = sig;
  }
  return Access::make(x.shape(), std::move(out), "relu", {&x}, [](Node& self) {
    if (double* dx = detail::input_grad(self, 0)) {
      const auto& xv = detail::input_value(self, 0);
      for (std::size_t i = 0; i < xv.size(); ++i)
        if (xv[i] > 0.0) dx[i] += self.grad[i];
    }
  });
}

namespace {
inline double stable_sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}
}  // namespace

Tensor sigmoid(const Tensor& x) {
  const auto v = x.values();
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = stable_sigmoid(v[i]);
  return Access::make(x.shape(), std::move(out), "sigmoid", {&x}, [](Node& self) {
    if (double* dx = detail::input_grad(self, 0)) {
      for (std::size_t i = 0; i < self.value.size(); ++i) {
        const double y = self.value[i];
        dx[i] += self.grad[i] * y * (1.0 - y);
      }
    }
  });
}

Tensor tanh(const Tensor& x) {
  const auto v = x.values();
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::tanh(v[i]);
  return Access::make(x.shape(), std::move(out), "tanh", {&x}, [](Node& self) {
    if (double* dx = detail::input_grad(self, 0)) {
      for (std::size_t i = 0; i < self.value.size(); ++i) {
        const double y = self.value[i];
        dx[i] += self.grad[i] * (1.0 - y * y);
      }
    }
  });
}

Tensor log(const Tensor& x) {
  const auto v = x.values();
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] > 0.0)) {
      throw DomainError("log of nonpositive value " + std::to_string(v[i]) + " at index " +
                        std::to_string(i));
    }
    out[i] = std::log(v[i]);
  }
  return Access::make(x.shape(), std::move(out), "log", {&x}, [](Node& self) {
    if (double* dx = detail::input_grad(self, 0)) {
      const auto& xv = detail::input_value(self, 0);
      for (std::size_t i = 0; i < xv.size(); ++i) dx[i] += self.grad[i] / xv[i];
    }
  });
}

namespace {

struct AxisSplit {
  std::size_t outer = 1, extent = 1, inner = 1;
};

AxisSplit split_axis(const Shape& shape, std::size_t axis, const char* op) {
  if (axis >= shape.size()) {
    throw DimensionError(std::string(op) + ": axis " + std::to_string(axis) +
                         " invalid for shape " + to_string(shape));
  }
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.extent = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

}  // namespace

Tensor softmax(const Tensor& x, std::size_t axis, const std::vector<double>* mask) {
  const auto split = split_axis(x.shape(), axis, "softmax");
  const auto v = x.values();
  if (mask && mask->size() != v.size()) {
    throw DimensionError("softmax: mask holds " + std::to_string(mask->size()) +
                         " entries for shape " + to_string(x.shape()));
  }
  std::vector<double> out(v.size(), 0.0);
  for (std::size_t o = 0; o < split.outer; ++o) {
    for (std::size_t in = 0; in < split.inner; ++in) {
      const std::size_t base = o * split.extent * split.inner + in;
      double top = -std::numeric_limits<double>::infinity();
      for (std::size_t e = 0; e < split.extent; ++e) {
        const std::size_t idx = base + e * split.inner;
        if (mask && (*mask)[idx] == 0.0) continue;
        top = std::max(top, v[idx]);
      }
      if (top == -std::numeric_limits<double>::infinity()) continue;
      double total = 0.0;
      for (std::size_t e = 0; e < split.extent; ++e) {
        const std::size_t idx = base + e * split.inner;
        if (mask && (*mask)[idx] == 0.0) continue;
        out[idx] = std::exp(v[idx] - top);
        total += out[idx];
      }
      for (std::size_t e = 0; e < split.extent; ++e) out[base + e * split.inner] /= total;
    }
  }
  return Access::make(x.shape(), std::move(out), "softmax", {&x}, [split](Node& self) {
    double* dx = detail::input_grad(self, 0);
    if (!dx) return;
    const auto& y = self.value;
    const auto& dy = self.grad;
    for (std::size_t o = 0; o < split.outer; ++o) {
      for (std::size_t in = 0; in < split.inner; ++in) {
        const std::size_t base = o * split.extent * split.inner + in;
        double dot = 0.0;
        for (std::size_t e = 0; e < split.extent; ++e) {
          const std::size_t idx = base + e * split.inner;
          dot += y[idx] * dy[idx];
        }
        for (std::size_t e = 0; e < split.extent; ++e) {
          const std::size_t idx = base + e * split.inner;
          dx[idx] += y[idx] * (dy[idx] - dot);
        }
      }
    }
  });
}

Tensor activation(const Tensor& x, Activation kind, std::size_t softmax_axis) {
  switch (kind) {
    case Activation::kRelu: return relu(x);
    case Activation::kSigmoid: return sigmoid(x);
    case Activation::kTanh: return tanh(x);
    case Activation::kLog: return log(x);
    case Activation::kSoftmax: return softmax(x, softmax_axis);
  }
  throw ContractError("unknown activation");
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  const auto av = a.values(), bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  return Access::make(a.shape(), std::move(out), "add", {&a, &b}, [](Node& self) {
    for (std::size_t k = 0; k < 2; ++k) {
      if (double* d = detail::input_grad(self, k))
        for (std::size_t i = 0; i < self.grad.size(); ++i) d[i] += self.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  const auto av = a.values(), bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  return Access::make(a.shape(), std::move(out), "sub", {&a, &b}, [](Node& self) {
    if (double* d = detail::input_grad(self, 0))
      for (std::size_t i = 0; i < self.grad.size(); ++i) d[i] += self.grad[i];
    if (double* d = detail::input_grad(self, 1))
      for (std::size_t i = 0; i < self.grad.size(); ++i) d[i] -= self.grad[i];
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  const bool a_scalar = a.numel() == 1 && b.numel() != 1;
  const bool b_scalar = b.numel() == 1 && a.numel() != 1;
  if (!a_scalar && !b_scalar) require_same_shape(a, b, "mul");
  const auto av = a.values(), bv = b.values();
  const Shape shape = a_scalar ? b.shape() : a.shape();
  const std::size_t n = shape_numel(shape);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = av[a_scalar ? 0 : i] * bv[b_scalar ? 0 : i];
  return Access::make(shape, std::move(out), "mul", {&a, &b}, [a_scalar, b_scalar, n](Node& self) {
    const auto& av = detail::input_value(self, 0);
    const auto& bv = detail::input_value(self, 1);
    if (double* da = detail::input_grad(self, 0)) {
      for (std::size_t i = 0; i < n; ++i) da[a_scalar ? 0 : i] += self.grad[i] * bv[b_scalar ? 0 : i];
    }
    if (double* db = detail::input_grad(self, 1)) {
      for (std::size_t i = 0; i < n; ++i) db[b_scalar ? 0 : i] += self.grad[i] * av[a_scalar ? 0 : i];
    }
  });
}

Tensor scale(const Tensor& x, double factor) {
  const auto v = x.values();
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] * factor;
  return Access::make(x.shape(), std::move(out), "scale", {&x}, [factor](Node& self) {
    if (double* d = detail::input_grad(self, 0))
      for (std::size_t i = 0; i < self.grad.size(); ++i) d[i] += self.grad[i] * factor;
  });
}

Tensor add_scalar(const Tensor& x, double offset) {
  const auto v = x.values();
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] + offset;
  return Access::make(x.shape(), std::move(out), "add_scalar", {&x}, [](Node& self) {
    if (double* d = detail::input_grad(self, 0))
      for (std::size_t i = 0; i < self.grad.size(); ++i) d[i] += self.grad[i];
  });
}

Tensor add_row_bias(const Tensor& x, const Tensor& bias) {
  if (x.rank() == 0 || bias.numel() != x.shape().back()) {
    throw DimensionError("add_row_bias: bias " + to_string(bias.shape()) +
                         " does not match rows of " + to_string(x.shape()));
  }
  const std::size_t n = bias.numel();
  const std::size_t rows = x.numel() / n;
  const auto xv = x.values(), bv = bias.values();
  std::vector<double> out(xv.size());
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < n; ++j) out[r * n + j] = xv[r * n + j] + bv[j];
  return Access::make(x.shape(), std::move(out), "add_row_bias", {&x, &bias}, [n, rows](Node& self) {
    if (double* dx = detail::input_grad(self, 0))
      for (std::size_t i = 0; i < self.grad.size(); ++i) dx[i] += self.grad[i];
    if (double* db = detail::input_grad(self, 1))
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < n; ++j) db[j] += self.grad[r * n + j];
  });
}

Tensor scale_rows(const Tensor& x, std::span<const double> weights) {
  if (x.rank() == 0 || x.numel() != weights.size() * x.shape().back()) {
    throw DimensionError("scale_rows: " + std::to_string(weights.size()) +
                         " weights for rows of " + to_string(x.shape()));
  }
  const std::size_t n = x.shape().back();
  const auto xv = x.values();
  std::vector<double> w(weights.begin(), weights.end());
  std::vector<double> out(xv.size());
  for (std::size_t r = 0; r < w.size(); ++r)
    for (std::size_t j = 0; j < n; ++j) out[r * n + j] = xv[r * n + j] * w[r];
  return Access::make(x.shape(), std::move(out), "scale_rows", {&x}, [w = std::move(w), n](Node& self) {
    if (double* dx = detail::input_grad(self, 0))
      for (std::size_t r = 0; r < w.size(); ++r)
        for (std::size_t j = 0; j < n; ++j) dx[r * n + j] += self.grad[r * n + j] * w[r];
  });
}

Tensor grad_reverse(const Tensor& x, double factor) {
  std::vector<double> out(x.values().begin(), x.values().end());
  return Access::make(x.shape(), std::move(out), "grad_reverse", {&x}, [factor](Node& self) {
    if (double* d = detail::input_grad(self, 0))
      for (std::size_t i = 0; i < self.grad.size(); ++i) d[i] -= factor * self.grad[i];
  });
}

// ---- reductions and reshaping ----------------------------------------------

Tensor sum(const Tensor& x) {
  double total = 0.0;
  for (double v : x.values()) total += v;
  return Access::make({}, {total}, "sum", {&x}, [](Node& self) {
    if (double* d = detail::input_grad(self, 0)) {
      const std::size_t n = self.inputs[0]->value.size();
      for (std::size_t i = 0; i < n; ++i) d[i] += self.grad[0];
    }
  });
}

Tensor mean(const Tensor& x) {
  const std::size_t n = x.numel();
  if (n == 0) throw DimensionError("mean of empty tensor");
  double total = 0.0;
  for (double v : x.values()) total += v;
  return Access::make({}, {total / static_cast<double>(n)}, "mean", {&x}, [n](Node& self) {
    if (double* d = detail::input_grad(self, 0)) {
      const double g = self.grad[0] / static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) d[i] += g;
    }
  });
}

Tensor reduce(const Tensor& x, Reduce kind, std::size_t axis) {
  const auto split = split_axis(x.shape(), axis, "reduce");
  if (split.extent == 0) throw DimensionError("reduce over an empty axis");
  Shape shape = x.shape();
  shape.erase(shape.begin() + static_cast<std::ptrdiff_t>(axis));
  const auto v = x.values();
  std::vector<double> out(split.outer * split.inner);
  std::vector<std::size_t> argmax;
  if (kind == Reduce::kMax) argmax.resize(out.size());
  for (std::size_t o = 0; o < split.outer; ++o) {
    for (std::size_t in = 0; in < split.inner; ++in) {
      const std::size_t base = o * split.extent * split.inner + in;
      const std::size_t dst = o * split.inner + in;
      if (kind == Reduce::kMax) {
        std::size_t best = base;
        for (std::size_t e = 1; e < split.extent; ++e) {
          const std::size_t idx = base + e * split.inner;
          if (v[idx] > v[best]) best = idx;
        }
        out[dst] = v[best];
        argmax[dst] = best;
      } else {
        double total = 0.0;
        for (std::size_t e = 0; e < split.extent; ++e) total += v[base + e * split.inner];
        out[dst] = kind == Reduce::kMean ? total / static_cast<double>(split.extent) : total;
      }
    }
  }
  return Access::make(std::move(shape), std::move(out), "reduce", {&x},
                      [split, kind, argmax = std::move(argmax)](Node& self) {
    double* dx = detail::input_grad(self, 0);
    if (!dx) return;
    const double norm = kind == Reduce::kMean ? 1.0 / static_cast<double>(split.extent) : 1.0;
    for (std::size_t o = 0; o < split.outer; ++o) {
      for (std::size_t in = 0; in < split.inner; ++in) {
        const std::size_t dst = o * split.inner + in;
        const double g = self.grad[dst];
        if (kind == Reduce::kMax) {
          dx[argmax[dst]] += g;
          continue;
        }
        const std::size_t base = o * split.extent * split.inner + in;
        for (std::size_t e = 0; e < split.extent; ++e) dx[base + e * split.inner] += g * norm;
      }
    }
  });
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw DimensionError("concat of zero tensors");
  const Shape& first = parts.front().shape();
  if (axis >= first.size()) {
    throw DimensionError("concat: axis " + std::to_string(axis) + " invalid for " +
                         to_string(first));
  }
  Shape shape = first;
  shape[axis] = 0;
  std::vector<std::size_t> extents;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    bool ok = s.size() == first.size();
    for (std::size_t i = 0; ok && i < s.size(); ++i) ok = i == axis || s[i] == first[i];
    if (!ok) {
      throw DimensionError("concat: side extents disagree: " + to_string(first) + " vs " +
                           to_string(s));
    }
    extents.push_back(s[axis]);
    shape[axis] += s[axis];
  }
  auto split = split_axis(shape, axis, "concat");
  std::vector<double> out(shape_numel(shape));
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto v = parts[k].values();
    const std::size_t span = extents[k] * split.inner;
    for (std::size_t o = 0; o < split.outer; ++o) {
      std::copy_n(v.begin() + static_cast<std::ptrdiff_t>(o * span), span,
                  out.begin() + static_cast<std::ptrdiff_t>(o * split.extent * split.inner + offset));
    }
    offset += span;
  }
  return Access::make_many(std::move(shape), std::move(out), "concat", parts,
                           [split, extents = std::move(extents)](Node& self) {
    std::size_t offset = 0;
    for (std::size_t k = 0; k < extents.size(); ++k) {
      const std::size_t span = extents[k] * split.inner;
      if (double* d = detail::input_grad(self, k)) {
        for (std::size_t o = 0; o < split.outer; ++o) {
          const double* src = self.grad.data() + o * split.extent * split.inner + offset;
          for (std::size_t i = 0; i < span; ++i) d[o * span + i] += src[i];
        }
      }
      offset += span;
    }
  });
}

Tensor slice(const Tensor& x, std::size_t axis, std::size_t start, std::size_t length) {
  const auto split = split_axis(x.shape(), axis, "slice");
  if (start + length > split.extent) {
    throw IndexError("slice [" + std::to_string(start) + ", " + std::to_string(start + length) +
                     ") out of range for axis " + std::to_string(axis) + " of " +
                     to_string(x.shape()));
  }
  Shape shape = x.shape();
  shape[axis] = length;
  const auto v = x.values();
  const std::size_t span = length * split.inner;
  std::vector<double> out(split.outer * span);
  for (std::size_t o = 0; o < split.outer; ++o) {
    std::copy_n(v.begin() + static_cast<std::ptrdiff_t>((o * split.extent + start) * split.inner),
                span, out.begin() + static_cast<std::ptrdiff_t>(o * span));
  }
  return Access::make(std::move(shape), std::move(out), "slice", {&x}, [split, start, span](Node& self) {
    if (double* d = detail::input_grad(self, 0)) {
      for (std::size_t o = 0; o < split.outer; ++o) {
        double* dst = d + (o * split.extent + start) * split.inner;
        for (std::size_t i = 0; i < span; ++i) dst[i] += self.grad[o * span + i];
      }
    }
  });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw DimensionError("reshape: " + to_string(x.shape()) + " cannot become " + to_string(shape));
  }
  std::vector<double> out(x.values().begin(), x.values().end());
  return Access::make(std::move(shape), std::move(out), "reshape", {&x}, [](Node& self) {
    if (double* d = detail::input_grad(self, 0))
      for (std::size_t i = 0; i < self.grad.size(); ++i) d[i] += self.grad[i];
  });
}

Tensor embedding_lookup(const Tensor& table, std::span<const std::size_t> ids) {
  require_rank(table, 2, "embedding_lookup");
  const std::size_t rows = table.dim(0), width = table.dim(1);
  const auto tv = table.values();
  std::vector<std::size_t> idx(ids.begin(), ids.end());
  std::vector<double> out(idx.size() * width);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] >= rows) {
      throw IndexError("embedding_lookup: id " + std::to_string(idx[r]) +
                       " out of range for table " + to_string(table.shape()));
    }
    std::copy_n(tv.begin() + static_cast<std::ptrdiff_t>(idx[r] * width), width,
                out.begin() + static_cast<std::ptrdiff_t>(r * width));
  }
  Shape shape{idx.size(), width};
  return Access::make(std::move(shape), std::move(out), "embedding_lookup", {&table},
                      [idx = std::move(idx), width](Node& self) {
    if (double* d = detail::input_grad(self, 0)) {
      for (std::size_t r = 0; r < idx.size(); ++r) {
        double* dst = d + idx[r] * width;
        for (std::size_t j = 0; j < width; ++j) dst[j] += self.grad[r * width + j];
      }
    }
  });
}

Tensor bce_with_logits(const Tensor& logits, std::span<const double> targets) {
  const auto z = logits.values();
  if (z.size() != targets.size() || z.empty()) {
    throw DimensionError("bce_with_logits: " + std::to_string(targets.size()) +
                         " targets for logits " + to_string(logits.shape()));
  }
  const auto count = static_cast<double>(z.size());
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    // -[t log σ(z) + (1-t) log(1-σ(z))] = max(z,0) - z t + log(1 + e^{-|z|})
    total += std::max(z[i], 0.0) - z[i] * targets[i] + std::log1p(std::exp(-std::abs(z[i])));
  }
  std::vector<double> t(targets.begin(), targets.end());
  return Access::make({}, {total / count}, "bce_with_logits", {&logits},
                      [t = std::move(t), count](Node& self) {
    if (double* d = detail::input_grad(self, 0)) {
      const auto& z = detail::input_value(self, 0);
      const double g = self.grad[0] / count;
      for (std::size_t i = 0; i < z.size(); ++i) d[i] += g * (stable_sigmoid(z[i]) - t[i]);
    }
  });
}

}  // namespace htcim::ad
