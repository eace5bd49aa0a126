#include "signforge/tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "signforge/error.hpp"

namespace signforge {

namespace {

thread_local bool g_grad_enabled = true;

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

Tensor make_result(Shape shape, std::vector<double> values, std::vector<std::shared_ptr<Node>> parents,
                   std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  bool needs = false;
  if (g_grad_enabled) {
    for (const auto& p : parents) needs = needs || (p && p->requires_grad);
  }
  if (needs) {
    node->requires_grad = true;
    node->parents = std::move(parents);
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

void check_defined(const Tensor& t, const char* op) {
  if (!t.defined()) throw ContractError(std::string(op) + ": undefined tensor");
}

// Length of the broadcast period of b against a; throws unless b's shape is a
// trailing suffix of a's shape or b holds one element.
std::size_t broadcast_period(const Tensor& a, const Tensor& b, const char* op) {
  if (b.size() == 1) return 1;
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  bool ok = sb.size() <= sa.size();
  for (std::size_t i = 0; ok && i < sb.size(); ++i) {
    ok = sa[sa.size() - sb.size() + i] == sb[i];
  }
  if (!ok) {
    throw DimensionError(std::string(op) + ": cannot broadcast " + shape_string(sb) + " onto " +
                         shape_string(sa));
  }
  return b.size();
}

template <class Forward, class GradA, class GradB>
Tensor binary_op(const Tensor& a, const Tensor& b, const char* name, Forward f, GradA ga, GradB gb) {
  check_defined(a, name);
  check_defined(b, name);
  const std::size_t period = broadcast_period(a, b, name);
  const auto& av = a.node()->value;
  const auto& bv = b.node()->value;
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = f(av[i], bv[i % period]);
  return make_result(a.shape(), std::move(out), {a.node(), b.node()}, [period, ga, gb](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    if (pa.requires_grad) {
      pa.ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        pa.grad[i] += ga(self.grad[i], pa.value[i], pb.value[i % period]);
      }
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        pb.grad[i % period] += gb(self.grad[i], pa.value[i], pb.value[i % period]);
      }
    }
  });
}

template <class Forward, class Derivative>
Tensor unary_op(const Tensor& a, const char* name, Forward f, Derivative df) {
  check_defined(a, name);
  const auto& av = a.node()->value;
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = f(av[i]);
  return make_result(a.shape(), std::move(out), {a.node()}, [df](Node& self) {
    Node& pa = *self.parents[0];
    pa.ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      pa.grad[i] += self.grad[i] * df(pa.value[i], self.value[i]);
    }
  });
}

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                         shape_string(t.shape()));
  }
}

}  // namespace

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) out << (i ? "," : "") << shape[i];
  out << ']';
  return out.str();
}

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const std::size_t n = shape_size(shape);
  return from(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  for (std::size_t d : shape) {
    if (d == 0) throw DimensionError("tensor dimensions must be positive: " + shape_string(shape));
  }
  if (shape_size(shape) != values.size()) {
    throw DimensionError("value count " + std::to_string(values.size()) + " does not match shape " +
                         shape_string(shape));
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value, bool requires_grad) { return from({1}, {value}, requires_grad); }

double Tensor::item() const {
  if (size() != 1) throw ContractError("item() on tensor of shape " + shape_string(shape()));
  return node_->value[0];
}

void Tensor::zero_grad() {
  if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

void Tensor::backward() const {
  check_defined(*this, "backward");
  if (size() != 1) throw ContractError("backward() requires a scalar, got " + shape_string(shape()));
  if (!node_->requires_grad) return;

  // Iterative post-order DFS gives a topological order of the graph.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) stack.push_back({parent, 0});
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  node_->ensure_grad();
  node_->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward) {
      node->ensure_grad();
      node->backward(*node);
    }
  }
}

Tensor Tensor::detach() const { return from(shape(), node_->value, false); }

Tensor Tensor::clone(bool requires_grad) const { return from(shape(), node_->value, requires_grad); }

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_op(
      a, b, "add", [](double x, double y) { return x + y; }, [](double g, double, double) { return g; },
      [](double g, double, double) { return g; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_op(
      a, b, "sub", [](double x, double y) { return x - y; }, [](double g, double, double) { return g; },
      [](double g, double, double) { return -g; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_op(
      a, b, "mul", [](double x, double y) { return x * y; }, [](double g, double, double y) { return g * y; },
      [](double g, double x, double) { return g * x; });
}

Tensor masked_mul(const Tensor& a, const Tensor& mask) {
  check_defined(mask, "masked_mul");
  return mul(a, mask.requires_grad() ? mask.detach() : mask);
}

Tensor scale(const Tensor& a, double factor) {
  return unary_op(
      a, "scale", [factor](double x) { return x * factor; }, [factor](double, double) { return factor; });
}

Tensor div_scalar(const Tensor& a, double divisor) {
  if (divisor == 0.0) throw ContractError("div_scalar: division by zero");
  return unary_op(
      a, "div_scalar", [divisor](double x) { return x / divisor; },
      [divisor](double, double) { return 1.0 / divisor; });
}

Tensor add_scalar(const Tensor& a, double offset) {
  return unary_op(
      a, "add_scalar", [offset](double x) { return x + offset; }, [](double, double) { return 1.0; });
}

Tensor relu(const Tensor& a) {
  return unary_op(
      a, "relu", [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor gelu(const Tensor& a) {
  constexpr double inv_sqrt2 = 0.70710678118654752440;
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  return unary_op(
      a, "gelu", [](double x) { return 0.5 * x * (1.0 + std::erf(x * inv_sqrt2)); },
      [inv_sqrt_2pi](double x, double) {
        const double cdf = 0.5 * (1.0 + std::erf(x * inv_sqrt2));
        return cdf + x * inv_sqrt_2pi * std::exp(-0.5 * x * x);
      });
}

Tensor sigmoid(const Tensor& a) {
  return unary_op(
      a, "sigmoid",
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor square(const Tensor& a) {
  return unary_op(
      a, "square", [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  return unary_op(
      a, "clamp", [lo, hi](double x) { return std::clamp(x, lo, hi); },
      [lo, hi](double x, double) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_defined(a, "matmul");
  check_defined(b, "matmul");
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw DimensionError("matmul: inner dimensions differ " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()));
  }
  std::vector<double> out(m * n);
  MutMap(out.data(), m, n).noalias() = ConstMap(a.values().data(), m, k) * ConstMap(b.values().data(), k, n);
  return make_result({m, n}, std::move(out), {a.node(), b.node()}, [m, k, n](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    ConstMap g(self.grad.data(), m, n);
    if (pa.requires_grad) {
      pa.ensure_grad();
      MutMap(pa.grad.data(), m, k).noalias() += g * ConstMap(pb.value.data(), k, n).transpose();
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      MutMap(pb.grad.data(), k, n).noalias() += ConstMap(pa.value.data(), m, k).transpose() * g;
    }
  });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  check_defined(a, "matmul_nt");
  check_defined(b, "matmul_nt");
  require_rank(a, 2, "matmul_nt");
  require_rank(b, 2, "matmul_nt");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(0);
  if (b.dim(1) != k) {
    throw DimensionError("matmul_nt: inner dimensions differ " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()) + "^T");
  }
  std::vector<double> out(m * n);
  MutMap(out.data(), m, n).noalias() =
      ConstMap(a.values().data(), m, k) * ConstMap(b.values().data(), n, k).transpose();
  return make_result({m, n}, std::move(out), {a.node(), b.node()}, [m, k, n](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    ConstMap g(self.grad.data(), m, n);
    if (pa.requires_grad) {
      pa.ensure_grad();
      MutMap(pa.grad.data(), m, k).noalias() += g * ConstMap(pb.value.data(), n, k);
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      MutMap(pb.grad.data(), n, k).noalias() += g.transpose() * ConstMap(pa.value.data(), m, k);
    }
  });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  Tensor out = matmul_nt(x, weight);
  return bias.defined() ? add(out, bias) : out;
}

Tensor softmax(const Tensor& a) {
  check_defined(a, "softmax");
  const std::size_t cols = a.shape().back();
  const std::size_t rows = a.size() / cols;
  const auto& av = a.node()->value;
  std::vector<double> out(av.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = av.data() + r * cols;
    double* o = out.data() + r * cols;
    const double mx = *std::max_element(in, in + cols);
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) total += (o[c] = std::exp(in[c] - mx));
    for (std::size_t c = 0; c < cols; ++c) o[c] /= total;
  }
  return make_result(a.shape(), std::move(out), {a.node()}, [rows, cols](Node& self) {
    Node& pa = *self.parents[0];
    pa.ensure_grad();
    for (std::size_t r = 0; r < rows; ++r) {
      const double* y = self.value.data() + r * cols;
      const double* g = self.grad.data() + r * cols;
      double dot = 0.0;
      for (std::size_t c = 0; c < cols; ++c) dot += g[c] * y[c];
      double* ga = pa.grad.data() + r * cols;
      for (std::size_t c = 0; c < cols; ++c) ga[c] += y[c] * (g[c] - dot);
    }
  });
}

Tensor layer_norm(const Tensor& a, const Tensor& gain, const Tensor& bias, double eps) {
  check_defined(a, "layer_norm");
  check_defined(gain, "layer_norm");
  check_defined(bias, "layer_norm");
  const std::size_t cols = a.shape().back();
  if (gain.size() != cols || bias.size() != cols) {
    throw DimensionError("layer_norm: gain/bias " + shape_string(gain.shape()) + " vs features " +
                         std::to_string(cols));
  }
  const std::size_t rows = a.size() / cols;
  const auto& av = a.node()->value;
  std::vector<double> xhat(av.size());
  std::vector<double> inv_std(rows);
  std::vector<double> out(av.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = av.data() + r * cols;
    double mu = 0.0;
    for (std::size_t c = 0; c < cols; ++c) mu += in[c];
    mu /= static_cast<double>(cols);
    double var = 0.0;
    for (std::size_t c = 0; c < cols; ++c) var += (in[c] - mu) * (in[c] - mu);
    var /= static_cast<double>(cols);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < cols; ++c) {
      const std::size_t i = r * cols + c;
      xhat[i] = (in[c] - mu) * inv_std[r];
      out[i] = xhat[i] * gain[c] + bias[c];
    }
  }
  return make_result(
      a.shape(), std::move(out), {a.node(), gain.node(), bias.node()},
      [rows, cols, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& self) {
        Node& pa = *self.parents[0];
        Node& pg = *self.parents[1];
        Node& pb = *self.parents[2];
        if (pg.requires_grad) pg.ensure_grad();
        if (pb.requires_grad) pb.ensure_grad();
        if (pa.requires_grad) pa.ensure_grad();
        std::vector<double> gx(cols);
        for (std::size_t r = 0; r < rows; ++r) {
          double mean_g = 0.0, mean_gx = 0.0;
          for (std::size_t c = 0; c < cols; ++c) {
            const std::size_t i = r * cols + c;
            const double g = self.grad[i];
            if (pg.requires_grad) pg.grad[c] += g * xhat[i];
            if (pb.requires_grad) pb.grad[c] += g;
            gx[c] = g * pg.value[c];
            mean_g += gx[c];
            mean_gx += gx[c] * xhat[i];
          }
          if (!pa.requires_grad) continue;
          mean_g /= static_cast<double>(cols);
          mean_gx /= static_cast<double>(cols);
          for (std::size_t c = 0; c < cols; ++c) {
            const std::size_t i = r * cols + c;
            pa.grad[i] += inv_std[r] * (gx[c] - mean_g - xhat[i] * mean_gx);
          }
        }
      });
}

Tensor embedding(const Tensor& table, std::span<const int> indices) {
  check_defined(table, "embedding");
  require_rank(table, 2, "embedding");
  const std::size_t vocab = table.dim(0), width = table.dim(1);
  if (indices.empty()) throw DimensionError("embedding: empty index list");
  std::vector<int> idx(indices.begin(), indices.end());
  std::vector<double> out(idx.size() * width);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] < 0 || static_cast<std::size_t>(idx[r]) >= vocab) {
      throw ContractError("embedding: index " + std::to_string(idx[r]) + " outside vocabulary of " +
                          std::to_string(vocab));
    }
    std::copy_n(table.values().begin() + idx[r] * width, width, out.begin() + r * width);
  }
  return make_result({idx.size(), width}, std::move(out), {table.node()}, [idx, width](Node& self) {
    Node& pt = *self.parents[0];
    pt.ensure_grad();
    for (std::size_t r = 0; r < idx.size(); ++r) {
      for (std::size_t c = 0; c < width; ++c) pt.grad[idx[r] * width + c] += self.grad[r * width + c];
    }
  });
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw ContractError("concat: no inputs");
  const Shape& first = parts.front().shape();
  if (axis >= first.size()) throw DimensionError("concat: axis out of range for " + shape_string(first));
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const auto& p : parts) {
    check_defined(p, "concat");
    const Shape& s = p.shape();
    bool ok = s.size() == first.size();
    for (std::size_t d = 0; ok && d < s.size(); ++d) ok = d == axis || s[d] == first[d];
    if (!ok) throw DimensionError("concat: " + shape_string(s) + " incompatible with " + shape_string(first));
    out_shape[axis] += s[axis];
  }
  const std::size_t outer = shape_size(Shape(first.begin(), first.begin() + axis));
  const std::size_t inner = shape_size(Shape(first.begin() + axis + 1, first.end()));
  const std::size_t out_block = out_shape[axis] * inner;
  std::vector<double> out(outer * out_block);
  std::vector<std::size_t> offsets;
  std::vector<std::size_t> blocks;
  std::size_t offset = 0;
  std::vector<std::shared_ptr<Node>> nodes;
  for (const auto& p : parts) {
    const std::size_t block = p.dim(axis) * inner;
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy_n(p.values().begin() + o * block, block, out.begin() + o * out_block + offset);
    }
    offsets.push_back(offset);
    blocks.push_back(block);
    offset += block;
    nodes.push_back(p.node());
  }
  return make_result(std::move(out_shape), std::move(out), std::move(nodes),
                     [outer, out_block, offsets, blocks](Node& self) {
                       for (std::size_t k = 0; k < self.parents.size(); ++k) {
                         Node& p = *self.parents[k];
                         if (!p.requires_grad) continue;
                         p.ensure_grad();
                         for (std::size_t o = 0; o < outer; ++o) {
                           const double* g = self.grad.data() + o * out_block + offsets[k];
                           double* dst = p.grad.data() + o * blocks[k];
                           for (std::size_t i = 0; i < blocks[k]; ++i) dst[i] += g[i];
                         }
                       }
                     });
}

Tensor slice(const Tensor& a, std::size_t axis, std::size_t begin, std::size_t end) {
  check_defined(a, "slice");
  const Shape& s = a.shape();
  if (axis >= s.size() || begin >= end || end > s[axis]) {
    throw DimensionError("slice: range [" + std::to_string(begin) + "," + std::to_string(end) +
                         ") on axis " + std::to_string(axis) + " of " + shape_string(s));
  }
  Shape out_shape = s;
  out_shape[axis] = end - begin;
  const std::size_t outer = shape_size(Shape(s.begin(), s.begin() + axis));
  const std::size_t inner = shape_size(Shape(s.begin() + axis + 1, s.end()));
  const std::size_t in_block = s[axis] * inner;
  const std::size_t out_block = (end - begin) * inner;
  const std::size_t start = begin * inner;
  std::vector<double> out(outer * out_block);
  for (std::size_t o = 0; o < outer; ++o) {
    std::copy_n(a.values().begin() + o * in_block + start, out_block, out.begin() + o * out_block);
  }
  return make_result(std::move(out_shape), std::move(out), {a.node()},
                     [outer, in_block, out_block, start](Node& self) {
                       Node& p = *self.parents[0];
                       p.ensure_grad();
                       for (std::size_t o = 0; o < outer; ++o) {
                         for (std::size_t i = 0; i < out_block; ++i) {
                           p.grad[o * in_block + start + i] += self.grad[o * out_block + i];
                         }
                       }
                     });
}

Tensor reshape(const Tensor& a, Shape shape) {
  check_defined(a, "reshape");
  if (shape_size(shape) != a.size()) {
    throw DimensionError("reshape: " + shape_string(a.shape()) + " to " + shape_string(shape));
  }
  return make_result(std::move(shape), a.node()->value, {a.node()}, [](Node& self) {
    Node& p = *self.parents[0];
    p.ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) p.grad[i] += self.grad[i];
  });
}

Tensor transpose(const Tensor& a) {
  check_defined(a, "transpose");
  require_rank(a, 2, "transpose");
  const std::size_t m = a.dim(0), n = a.dim(1);
  std::vector<double> out(m * n);
  MutMap(out.data(), n, m) = ConstMap(a.values().data(), m, n).transpose();
  return make_result({n, m}, std::move(out), {a.node()}, [m, n](Node& self) {
    Node& p = *self.parents[0];
    p.ensure_grad();
    MutMap(p.grad.data(), m, n) += ConstMap(self.grad.data(), n, m).transpose();
  });
}

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, std::size_t padding) {
  check_defined(x, "conv2d");
  check_defined(weight, "conv2d");
  require_rank(x, 3, "conv2d");
  require_rank(weight, 4, "conv2d");
  const std::size_t channels = x.dim(0), height = x.dim(1), width = x.dim(2);
  const std::size_t out_ch = weight.dim(0), k = weight.dim(2);
  if (weight.dim(1) != channels || weight.dim(3) != k) {
    throw DimensionError("conv2d: weight " + shape_string(weight.shape()) + " vs input " +
                         shape_string(x.shape()));
  }
  if (bias.defined() && bias.size() != out_ch) {
    throw DimensionError("conv2d: bias " + shape_string(bias.shape()) + " vs " + std::to_string(out_ch) +
                         " output channels");
  }
  if (height + 2 * padding < k || width + 2 * padding < k) {
    throw DimensionError("conv2d: kernel larger than padded input " + shape_string(x.shape()));
  }
  const std::size_t out_h = height + 2 * padding - k + 1;
  const std::size_t out_w = width + 2 * padding - k + 1;
  const std::size_t patch = channels * k * k;
  const std::size_t pixels = out_h * out_w;

  // im2col: columns[(c, ky, kx), (oy, ox)].
  std::vector<double> columns(patch * pixels, 0.0);
  const auto& xv = x.node()->value;
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        double* row = columns.data() + ((c * k + ky) * k + kx) * pixels;
        for (std::size_t oy = 0; oy < out_h; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy + ky) - static_cast<std::ptrdiff_t>(padding);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(height)) continue;
          for (std::size_t ox = 0; ox < out_w; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox + kx) - static_cast<std::ptrdiff_t>(padding);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(width)) continue;
            row[oy * out_w + ox] = xv[(c * height + iy) * width + ix];
          }
        }
      }
    }
  }
  std::vector<double> out(out_ch * pixels);
  MutMap result(out.data(), out_ch, pixels);
  result.noalias() = ConstMap(weight.values().data(), out_ch, patch) * ConstMap(columns.data(), patch, pixels);
  if (bias.defined()) {
    for (std::size_t o = 0; o < out_ch; ++o) result.row(o).array() += bias[o];
  }

  std::vector<std::shared_ptr<Node>> parents{x.node(), weight.node()};
  if (bias.defined()) parents.push_back(bias.node());
  return make_result(
      {out_ch, out_h, out_w}, std::move(out), std::move(parents),
      [=, columns = std::move(columns)](Node& self) {
        Node& px = *self.parents[0];
        Node& pw = *self.parents[1];
        ConstMap g(self.grad.data(), out_ch, pixels);
        if (pw.requires_grad) {
          pw.ensure_grad();
          MutMap(pw.grad.data(), out_ch, patch).noalias() += g * ConstMap(columns.data(), patch, pixels).transpose();
        }
        if (self.parents.size() > 2 && self.parents[2]->requires_grad) {
          Node& pb = *self.parents[2];
          pb.ensure_grad();
          for (std::size_t o = 0; o < out_ch; ++o) pb.grad[o] += g.row(o).sum();
        }
        if (px.requires_grad) {
          px.ensure_grad();
          RowMatrix dcols = ConstMap(pw.value.data(), out_ch, patch).transpose() * g;
          for (std::size_t c = 0; c < channels; ++c) {
            for (std::size_t ky = 0; ky < k; ++ky) {
              for (std::size_t kx = 0; kx < k; ++kx) {
                const double* row = dcols.data() + ((c * k + ky) * k + kx) * pixels;
                for (std::size_t oy = 0; oy < out_h; ++oy) {
                  const std::ptrdiff_t iy =
                      static_cast<std::ptrdiff_t>(oy + ky) - static_cast<std::ptrdiff_t>(padding);
                  if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(height)) continue;
                  for (std::size_t ox = 0; ox < out_w; ++ox) {
                    const std::ptrdiff_t ix =
                        static_cast<std::ptrdiff_t>(ox + kx) - static_cast<std::ptrdiff_t>(padding);
                    if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(width)) continue;
                    px.grad[(c * height + iy) * width + ix] += row[oy * out_w + ox];
                  }
                }
              }
            }
          }
        }
      });
}

Tensor sum(const Tensor& a) {
  check_defined(a, "sum");
  double total = 0.0;
  for (double v : a.values()) total += v;
  return make_result({1}, {total}, {a.node()}, [](Node& self) {
    Node& p = *self.parents[0];
    p.ensure_grad();
    for (double& g : p.grad) g += self.grad[0];
  });
}

Tensor mean(const Tensor& a) { return div_scalar(sum(a), static_cast<double>(a.size())); }

Tensor frobenius_norm(const Tensor& a) {
  check_defined(a, "frobenius_norm");
  double total = 0.0;
  for (double v : a.values()) total += v * v;
  const double norm = std::sqrt(total);
  return make_result({1}, {norm}, {a.node()}, [norm](Node& self) {
    if (norm == 0.0) return;
    Node& p = *self.parents[0];
    p.ensure_grad();
    for (std::size_t i = 0; i < p.value.size(); ++i) p.grad[i] += self.grad[0] * p.value[i] / norm;
  });
}

}  // namespace signforge
