#pragma once

// Reverse-mode automatic differentiation over dense float64 tensors.
//
// A Tensor is a shared handle to a graph node. Operations record their
// parents and a backward closure only when gradient recording is enabled and
// at least one input requires a gradient, so inference under NoGradGuard
// builds no graph at all.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace signforge {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);
std::size_t shape_size(const Shape& shape);

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads self.grad and accumulates into parents' grads.
  std::function<void(Node& self)> backward;

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  }
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
  std::size_t size() const { return node_->value.size(); }

  std::span<const double> values() const { return node_->value; }
  // Direct write access; only meaningful for leaves (parameters, inputs).
  std::span<double> mutable_values() { return node_->value; }
  double operator[](std::size_t i) const { return node_->value[i]; }
  double item() const;

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool flag) { node_->requires_grad = flag; }

  // Empty span until a backward pass has touched this tensor.
  std::span<const double> grad() const { return node_->grad; }
  std::span<double> mutable_grad() {
    node_->ensure_grad();
    return node_->grad;
  }
  void zero_grad();

  // Populates gradients of every requires_grad tensor reachable from this
  // scalar. Gradients accumulate; callers zero them explicitly.
  void backward() const;

  // Same values, no history, no gradient.
  Tensor detach() const;
  Tensor clone(bool requires_grad = false) const;

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

// Disables graph recording on this thread for its lifetime.
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

// Element-wise binary ops. `b` may equal `a`'s shape or a trailing suffix of
// it (including a single-element tensor), in which case it is broadcast.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

// Element-wise multiply by a constant mask broadcast like `mul`; the mask
// never receives gradient.
Tensor masked_mul(const Tensor& a, const Tensor& mask);

Tensor scale(const Tensor& a, double factor);
Tensor div_scalar(const Tensor& a, double divisor);
Tensor add_scalar(const Tensor& a, double offset);

Tensor relu(const Tensor& a);
// Exact erf form.
Tensor gelu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor square(const Tensor& a);
Tensor clamp(const Tensor& a, double lo, double hi);

// 2D products. matmul_nt computes a * b^T.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor matmul_nt(const Tensor& a, const Tensor& b);
// x [n, in] * weight[out, in]^T + bias[out]; bias may be undefined.
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

Tensor softmax(const Tensor& a);  // over the last axis
Tensor layer_norm(const Tensor& a, const Tensor& gain, const Tensor& bias, double eps = 1e-5);

// Rows of `table` [vocab, dim] selected by `indices`; result [n, dim].
Tensor embedding(const Tensor& table, std::span<const int> indices);

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
Tensor slice(const Tensor& a, std::size_t axis, std::size_t begin, std::size_t end);
Tensor reshape(const Tensor& a, Shape shape);
Tensor transpose(const Tensor& a);  // rank 2

// Single image convolution, stride 1: x [C, H, W], weight [O, C, k, k],
// bias [O] (may be undefined). Output [O, H + 2p - k + 1, W + 2p - k + 1].
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, std::size_t padding);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
// sqrt(sum(a^2)); gradient taken as zero at the origin.
Tensor frobenius_norm(const Tensor& a);

}  // namespace signforge
