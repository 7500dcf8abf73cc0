#pragma once

// Dense 64-bit tensors with tape-free reverse-mode differentiation.
//
// Every op returns a new immutable Tensor that remembers its inputs and a
// backward rule. Calling backward() on a scalar walks the resulting DAG in
// reverse topological order and returns the gradient of every tracked leaf.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace msk::ad {

using Shape = std::vector<std::size_t>;
using Rng = std::mt19937_64;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

struct Node;

class Tensor {
public:
  Tensor() = default;

  /// Untracked tensor. `values.size()` must equal the product of `shape`.
  static Tensor constant(Shape shape, std::vector<double> values);
  /// Gradient-tracked leaf.
  static Tensor parameter(Shape shape, std::vector<double> values);
  static Tensor scalar(double value);
  static Tensor zeros(Shape shape);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;
  std::span<const double> values() const;
  bool requires_grad() const;

  /// Value of a rank-0 (or single element) tensor.
  double item() const;
  double operator[](std::size_t flat) const { return values()[flat]; }
  double at(std::size_t row, std::size_t col) const;

  const Node* id() const { return node_.get(); }
  const std::shared_ptr<Node>& node() const { return node_; }
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

private:
  std::shared_ptr<Node> node_;
};

/// Gradients of tracked leaves, keyed by leaf identity.
class Gradients {
public:
  bool contains(const Tensor& leaf) const;
  /// Gradient of `leaf`, same length as its values. Leaves the loss does not
  /// depend on get an all-zero gradient.
  std::vector<double> of(const Tensor& leaf) const;
  std::size_t size() const { return grads_.size(); }

private:
  friend Gradients backward(const Tensor& loss);
  std::unordered_map<const Node*, std::vector<double>> grads_;
};

/// Reverse-mode sweep from a scalar loss.
Gradients backward(const Tensor& loss);

// Elementwise arithmetic. Operands must have equal shapes, or one of them
// must be rank-0 (scalar broadcast).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double offset);

Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor sin(const Tensor& x);
Tensor square(const Tensor& x);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

// Shape manipulation.
Tensor reshape(const Tensor& x, Shape shape);
Tensor transpose(const Tensor& x);
/// Elements [begin, end) of a rank-1 tensor.
Tensor slice(const Tensor& x, std::size_t begin, std::size_t end);
/// Columns [begin, end) of a rank-2 tensor.
Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end);
/// Column j of a rank-2 tensor as a rank-1 tensor.
Tensor column(const Tensor& x, std::size_t j);
/// y[r][c] = x[r][c] * scales[c] + shifts[c] with constant per-column factors.
Tensor column_affine(const Tensor& x, std::span<const double> scales,
                     std::span<const double> shifts);

/// A[m x k] * B[k x n].
Tensor matmul(const Tensor& a, const Tensor& b);

/// weights[h x d] * input + bias. `input` is either [d] (result [h]) or
/// [d x L], in which case the same map is applied to every column.
Tensor dense(const Tensor& input, const Tensor& weights, const Tensor& bias);

/// 1-D cross-correlation with zero padding:
/// out[o][t] = bias[o] + sum_{c,k} kernels[o][c][k] * in_pad[c][t*stride + k].
Tensor conv1d(const Tensor& input, const Tensor& kernels, const Tensor& bias,
              std::size_t padding, std::size_t stride);

/// Per-channel standardization over the temporal axis of a [C x L] tensor,
/// then y = gain[c] * xhat + shift[c]. Population variance; requires L >= 2.
Tensor seq_norm(const Tensor& x, const Tensor& gain, const Tensor& shift,
                double epsilon = 1e-8);

/// Per-position standardization over the channel axis of a [C x L] tensor
/// with per-channel gain/shift. Requires C >= 2.
Tensor feature_norm(const Tensor& x, const Tensor& gain, const Tensor& shift,
                    double epsilon = 1e-8);

/// Inverted dropout. In training mode each element is zeroed with
/// probability `rate` and survivors are scaled by 1/(1-rate).
Tensor dropout(const Tensor& x, double rate, bool training, Rng& rng);

/// Uniform double in [0, 1) from 53 random bits (portable across stdlibs).
double uniform01(Rng& rng);

} // namespace msk::ad
