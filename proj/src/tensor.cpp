#include "msk/tensor.hpp"

#include "msk/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace msk::ad {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;
using MapVec = Eigen::Map<Eigen::VectorXd>;
using CMapVec = Eigen::Map<const Eigen::VectorXd>;

struct Node {
  using GradSlots = std::vector<std::vector<double>*>;
  using BackwardFn =
      std::function<void(const Node& self, std::span<const double> grad_out, GradSlots& grad_in)>;

  std::string op;
  Shape shape;
  std::vector<double> value;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  BackwardFn backward;
};

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape)
    n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i)
    os << (i ? " x " : "") << shape[i];
  os << ']';
  return os.str();
}

namespace {

[[noreturn]] void shape_fail(const std::string& op, const std::string& what) {
  throw ShapeError(op + ": " + what);
}

void check_finite(const std::string& op, const std::vector<double>& v) {
  for (std::size_t i = 0; i < v.size(); ++i)
    if (!std::isfinite(v[i])) {
      std::ostringstream os;
      os << op << ": non-finite value " << v[i] << " at flat index " << i;
      throw NumericError(os.str());
    }
}

Tensor make(std::string op, Shape shape, std::vector<double> value,
            std::vector<std::shared_ptr<Node>> inputs, Node::BackwardFn fn) {
  check_finite(op, value);
  auto node = std::make_shared<Node>();
  node->op = std::move(op);
  node->shape = std::move(shape);
  node->value = std::move(value);
  for (const auto& in : inputs)
    node->requires_grad = node->requires_grad || in->requires_grad;
  if (node->requires_grad) {
    node->inputs = std::move(inputs);
    node->backward = std::move(fn);
  }
  return Tensor(std::move(node));
}

void require_rank(const std::string& op, const Tensor& t, std::size_t rank, const char* name) {
  if (t.rank() != rank) {
    std::ostringstream os;
    os << name << " must be rank " << rank << ", got shape " << shape_str(t.shape());
    shape_fail(op, os.str());
  }
}

void require_dim(const std::string& op, const char* what, std::size_t got, std::size_t want) {
  if (got != want) {
    std::ostringstream os;
    os << what << " is " << got << ", expected " << want;
    shape_fail(op, os.str());
  }
}

enum class Bcast { Same, LeftScalar, RightScalar };

Bcast broadcast_kind(const std::string& op, const Tensor& a, const Tensor& b) {
  if (a.shape() == b.shape())
    return Bcast::Same;
  if (a.rank() == 0)
    return Bcast::LeftScalar;
  if (b.rank() == 0)
    return Bcast::RightScalar;
  shape_fail(op, "incompatible shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()));
}

// Reduce an elementwise gradient onto an operand that may have been broadcast.
void accumulate(std::vector<double>* slot, const std::vector<double>& g, bool was_scalar) {
  if (!slot)
    return;
  if (was_scalar) {
    double s = 0.0;
    for (double v : g)
      s += v;
    (*slot)[0] += s;
  } else {
    for (std::size_t i = 0; i < g.size(); ++i)
      (*slot)[i] += g[i];
  }
}

template <class F, class D>
Tensor unary(const std::string& op, const Tensor& x, F f, D dfdx) {
  std::vector<double> out(x.numel());
  auto xv = x.values();
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = f(xv[i]);
  return make(op, x.shape(), std::move(out), {x.node()},
              [dfdx](const Node& self, std::span<const double> g, Node::GradSlots& gin) {
                if (!gin[0])
                  return;
                const auto& xin = self.inputs[0]->value;
                for (std::size_t i = 0; i < g.size(); ++i)
                  (*gin[0])[i] += g[i] * dfdx(xin[i], self.value[i]);
              });
}

// Shared implementation of seq_norm / feature_norm: `groups` groups of
// `count` elements; element j of group g lives at g*group_stride +
// j*elem_stride and uses gain/shift channel g (per_group) or j.
struct NormLayout {
  std::size_t groups;
  std::size_t count;
  std::size_t group_stride;
  std::size_t elem_stride;
  bool per_group;

  std::size_t index(std::size_t g, std::size_t j) const { return g * group_stride + j * elem_stride; }
  std::size_t param(std::size_t g, std::size_t j) const { return per_group ? g : j; }
};

Tensor normalize_impl(const std::string& op, const Tensor& x, const Tensor& gain, const Tensor& shift,
                      double epsilon, NormLayout layout) {
  if (epsilon < 0.0)
    throw InvalidArgument(op + ": epsilon must be non-negative");
  const std::size_t n = layout.count;
  auto xv = x.values();
  auto gv = gain.values();
  auto sv = shift.values();
  auto xhat = std::make_shared<std::vector<double>>(x.numel());
  auto inv_std = std::make_shared<std::vector<double>>(layout.groups);
  std::vector<double> out(x.numel());
  for (std::size_t g = 0; g < layout.groups; ++g) {
    double mu = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      mu += xv[layout.index(g, j)];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double d = xv[layout.index(g, j)] - mu;
      var += d * d;
    }
    var /= static_cast<double>(n);
    const double denom = std::sqrt(var + epsilon);
    if (denom == 0.0)
      throw NumericError(op + ": zero variance with epsilon 0");
    (*inv_std)[g] = 1.0 / denom;
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t i = layout.index(g, j);
      const std::size_t c = layout.param(g, j);
      (*xhat)[i] = (xv[i] - mu) * (*inv_std)[g];
      out[i] = gv[c] * (*xhat)[i] + sv[c];
    }
  }
  return make(op, x.shape(), std::move(out), {x.node(), gain.node(), shift.node()},
              [xhat, inv_std, layout](const Node& self, std::span<const double> g, Node::GradSlots& gin) {
                const auto& gv = self.inputs[1]->value;
                const std::size_t n = layout.count;
                std::vector<double> dxhat(n);
                for (std::size_t grp = 0; grp < layout.groups; ++grp) {
                  double sum_d = 0.0;
                  double sum_dx = 0.0;
                  for (std::size_t j = 0; j < n; ++j) {
                    const std::size_t i = layout.index(grp, j);
                    const std::size_t c = layout.param(grp, j);
                    if (gin[1])
                      (*gin[1])[c] += g[i] * (*xhat)[i];
                    if (gin[2])
                      (*gin[2])[c] += g[i];
                    dxhat[j] = g[i] * gv[c];
                    sum_d += dxhat[j];
                    sum_dx += dxhat[j] * (*xhat)[i];
                  }
                  if (!gin[0])
                    continue;
                  const double k = (*inv_std)[grp] / static_cast<double>(n);
                  for (std::size_t j = 0; j < n; ++j) {
                    const std::size_t i = layout.index(grp, j);
                    (*gin[0])[i] += k * (static_cast<double>(n) * dxhat[j] - sum_d - (*xhat)[i] * sum_dx);
                  }
                }
              });
}

} // namespace

// ---------------------------------------------------------------------------
// Tensor

Tensor Tensor::constant(Shape shape, std::vector<double> values) {
  if (shape_numel(shape) != values.size()) {
    std::ostringstream os;
    os << "constant: shape " << shape_str(shape) << " needs " << shape_numel(shape) << " values, got "
       << values.size();
    throw ShapeError(os.str());
  }
  return make("constant", std::move(shape), std::move(values), {}, nullptr);
}

Tensor Tensor::parameter(Shape shape, std::vector<double> values) {
  Tensor t = constant(std::move(shape), std::move(values));
  t.node_->op = "parameter";
  t.node_->requires_grad = true;
  return t;
}

Tensor Tensor::scalar(double value) { return constant({}, {value}); }

Tensor Tensor::zeros(Shape shape) {
  const auto n = shape_numel(shape);
  return constant(std::move(shape), std::vector<double>(n, 0.0));
}

const Shape& Tensor::shape() const { return node_->shape; }

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= rank())
    throw ShapeError("dim: axis " + std::to_string(axis) + " out of range for " + shape_str(shape()));
  return shape()[axis];
}

std::size_t Tensor::numel() const { return node_->value.size(); }

std::span<const double> Tensor::values() const { return node_->value; }

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

double Tensor::item() const {
  if (numel() != 1)
    throw ShapeError("item: tensor of shape " + shape_str(shape()) + " is not a scalar");
  return node_->value[0];
}

double Tensor::at(std::size_t row, std::size_t col) const {
  if (rank() != 2)
    throw ShapeError("at: tensor is not rank 2");
  return node_->value[row * shape()[1] + col];
}

// ---------------------------------------------------------------------------
// Backward

bool Gradients::contains(const Tensor& leaf) const { return grads_.count(leaf.id()) != 0; }

std::vector<double> Gradients::of(const Tensor& leaf) const {
  auto it = grads_.find(leaf.id());
  if (it == grads_.end())
    return std::vector<double>(leaf.numel(), 0.0);
  return it->second;
}

Gradients backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1 || loss.rank() != 0)
    throw ShapeError("backward: loss must be a rank-0 scalar, got shape " +
                     (loss.defined() ? shape_str(loss.shape()) : std::string("<undefined>")));
  Gradients result;
  if (!loss.requires_grad())
    return result;

  // Iterative DFS post-order; grey nodes on the stack detect cycles.
  enum class Mark : std::uint8_t { Grey, Black };
  std::unordered_map<const Node*, Mark> marks;
  std::vector<Node*> order;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  marks[loss.id()] = Mark::Grey;
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (!child->requires_grad)
        continue;
      auto it = marks.find(child);
      if (it == marks.end()) {
        marks[child] = Mark::Grey;
        stack.emplace_back(child, 0);
      } else if (it->second == Mark::Grey) {
        throw InvariantError("backward: cycle detected at op '" + child->op + "'");
      }
    } else {
      marks[node] = Mark::Black;
      order.push_back(node);
      stack.pop_back();
    }
  }

  std::unordered_map<const Node*, std::vector<double>> grads;
  grads.reserve(order.size());
  for (Node* n : order)
    grads.emplace(n, std::vector<double>(n->value.size(), 0.0));
  grads[loss.id()][0] = 1.0;

  Node::GradSlots slots;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->inputs.empty())
      continue;
    slots.assign(n->inputs.size(), nullptr);
    for (std::size_t i = 0; i < n->inputs.size(); ++i)
      if (n->inputs[i]->requires_grad)
        slots[i] = &grads[n->inputs[i].get()];
    n->backward(*n, grads[n], slots);
  }
  for (Node* n : order)
    if (n->inputs.empty())
      result.grads_.emplace(n, std::move(grads[n]));
  return result;
}

// ---------------------------------------------------------------------------
// Elementwise

namespace {

template <class Fwd, class Bwd>
Tensor binary(const std::string& op, const Tensor& a, const Tensor& b, Fwd fwd, Bwd bwd) {
  const Bcast kind = broadcast_kind(op, a, b);
  const Shape shape = kind == Bcast::LeftScalar ? b.shape() : a.shape();
  const std::size_t n = shape_numel(shape);
  auto av = a.values();
  auto bv = b.values();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = fwd(av[kind == Bcast::LeftScalar ? 0 : i], bv[kind == Bcast::RightScalar ? 0 : i]);
  return make(op, shape, std::move(out), {a.node(), b.node()},
              [kind, bwd](const Node& self, std::span<const double> g, Node::GradSlots& gin) {
                const auto& av = self.inputs[0]->value;
                const auto& bv = self.inputs[1]->value;
                std::vector<double> ga(gin[0] ? g.size() : 0);
                std::vector<double> gb(gin[1] ? g.size() : 0);
                for (std::size_t i = 0; i < g.size(); ++i) {
                  const double x = av[kind == Bcast::LeftScalar ? 0 : i];
                  const double y = bv[kind == Bcast::RightScalar ? 0 : i];
                  double da = 0.0;
                  double db = 0.0;
                  bwd(x, y, da, db);
                  if (gin[0])
                    ga[i] = g[i] * da;
                  if (gin[1])
                    gb[i] = g[i] * db;
                }
                accumulate(gin[0], ga, kind == Bcast::LeftScalar);
                accumulate(gin[1], gb, kind == Bcast::RightScalar);
              });
}

} // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary("add", a, b, [](double x, double y) { return x + y; },
                [](double, double, double& da, double& db) { da = 1.0; db = 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary("sub", a, b, [](double x, double y) { return x - y; },
                [](double, double, double& da, double& db) { da = 1.0; db = -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary("mul", a, b, [](double x, double y) { return x * y; },
                [](double x, double y, double& da, double& db) { da = y; db = x; });
}

Tensor scale(const Tensor& a, double factor) {
  return unary("scale", a, [factor](double x) { return factor * x; },
               [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& a, double offset) {
  return unary("add_scalar", a, [offset](double x) { return x + offset; },
               [](double, double) { return 1.0; });
}

Tensor relu(const Tensor& x) {
  return unary("relu", x, [](double v) { return v > 0.0 ? v : 0.0; },
               [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor sigmoid(const Tensor& x) {
  return unary("sigmoid", x,
               [](double v) {
                 if (v >= 0.0)
                   return 1.0 / (1.0 + std::exp(-v));
                 const double e = std::exp(v);
                 return e / (1.0 + e);
               },
               [](double, double y) { return y * (1.0 - y); });
}

Tensor sin(const Tensor& x) {
  return unary("sin", x, [](double v) { return std::sin(v); },
               [](double v, double) { return std::cos(v); });
}

Tensor square(const Tensor& x) {
  return unary("square", x, [](double v) { return v * v; },
               [](double v, double) { return 2.0 * v; });
}

Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.values())
    s += v;
  return make("sum", {}, {s}, {x.node()},
              [](const Node&, std::span<const double> g, Node::GradSlots& gin) {
                for (auto& v : *gin[0])
                  v += g[0];
              });
}

Tensor mean(const Tensor& x) {
  if (x.numel() == 0)
    throw ShapeError("mean: empty tensor");
  const double n = static_cast<double>(x.numel());
  double s = 0.0;
  for (double v : x.values())
    s += v;
  return make("mean", {}, {s / n}, {x.node()},
              [n](const Node&, std::span<const double> g, Node::GradSlots& gin) {
                for (auto& v : *gin[0])
                  v += g[0] / n;
              });
}

// ---------------------------------------------------------------------------
// Shape manipulation

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel())
    shape_fail("reshape", "cannot view " + shape_str(x.shape()) + " as " + shape_str(shape));
  std::vector<double> out(x.values().begin(), x.values().end());
  return make("reshape", std::move(shape), std::move(out), {x.node()},
              [](const Node&, std::span<const double> g, Node::GradSlots& gin) {
                for (std::size_t i = 0; i < g.size(); ++i)
                  (*gin[0])[i] += g[i];
              });
}

Tensor transpose(const Tensor& x) {
  require_rank("transpose", x, 2, "input");
  const std::size_t r = x.dim(0);
  const std::size_t c = x.dim(1);
  std::vector<double> out(x.numel());
  auto xv = x.values();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j)
      out[j * r + i] = xv[i * c + j];
  return make("transpose", {c, r}, std::move(out), {x.node()},
              [r, c](const Node&, std::span<const double> g, Node::GradSlots& gin) {
                for (std::size_t i = 0; i < r; ++i)
                  for (std::size_t j = 0; j < c; ++j)
                    (*gin[0])[i * c + j] += g[j * r + i];
              });
}

Tensor slice(const Tensor& x, std::size_t begin, std::size_t end) {
  require_rank("slice", x, 1, "input");
  if (begin > end || end > x.dim(0))
    shape_fail("slice", "range [" + std::to_string(begin) + ", " + std::to_string(end) +
                            ") out of bounds for length " + std::to_string(x.dim(0)));
  std::vector<double> out(x.values().begin() + begin, x.values().begin() + end);
  return make("slice", {end - begin}, std::move(out), {x.node()},
              [begin](const Node&, std::span<const double> g, Node::GradSlots& gin) {
                for (std::size_t i = 0; i < g.size(); ++i)
                  (*gin[0])[begin + i] += g[i];
              });
}

Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end) {
  require_rank("slice_cols", x, 2, "input");
  const std::size_t rows = x.dim(0);
  const std::size_t cols = x.dim(1);
  if (begin > end || end > cols)
    shape_fail("slice_cols", "column range [" + std::to_string(begin) + ", " + std::to_string(end) +
                                 ") out of bounds for " + std::to_string(cols) + " columns");
  const std::size_t w = end - begin;
  std::vector<double> out(rows * w);
  auto xv = x.values();
  for (std::size_t r = 0; r < rows; ++r)
    std::copy_n(xv.begin() + r * cols + begin, w, out.begin() + r * w);
  return make("slice_cols", {rows, w}, std::move(out), {x.node()},
              [rows, cols, begin, w](const Node&, std::span<const double> g, Node::GradSlots& gin) {
                for (std::size_t r = 0; r < rows; ++r)
                  for (std::size_t j = 0; j < w; ++j)
                    (*gin[0])[r * cols + begin + j] += g[r * w + j];
              });
}

Tensor column(const Tensor& x, std::size_t j) {
  Tensor cols = slice_cols(x, j, j + 1);
  return reshape(cols, {x.dim(0)});
}

Tensor column_affine(const Tensor& x, std::span<const double> scales, std::span<const double> shifts) {
  require_rank("column_affine", x, 2, "input");
  const std::size_t rows = x.dim(0);
  const std::size_t cols = x.dim(1);
  require_dim("column_affine", "scale count", scales.size(), cols);
  require_dim("column_affine", "shift count", shifts.size(), cols);
  std::vector<double> sc(scales.begin(), scales.end());
  std::vector<double> out(x.numel());
  auto xv = x.values();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      out[r * cols + c] = xv[r * cols + c] * scales[c] + shifts[c];
  return make("column_affine", x.shape(), std::move(out), {x.node()},
              [rows, cols, sc](const Node&, std::span<const double> g, Node::GradSlots& gin) {
                for (std::size_t r = 0; r < rows; ++r)
                  for (std::size_t c = 0; c < cols; ++c)
                    (*gin[0])[r * cols + c] += g[r * cols + c] * sc[c];
              });
}

// ---------------------------------------------------------------------------
// Linear algebra

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank("matmul", a, 2, "left operand");
  require_rank("matmul", b, 2, "right operand");
  const std::size_t m = a.dim(0);
  const std::size_t k = a.dim(1);
  const std::size_t n = b.dim(1);
  require_dim("matmul", "inner dimension of right operand", b.dim(0), k);
  std::vector<double> out(m * n);
  MapMat(out.data(), m, n).noalias() = CMapMat(a.values().data(), m, k) * CMapMat(b.values().data(), k, n);
  return make("matmul", {m, n}, std::move(out), {a.node(), b.node()},
              [m, k, n](const Node& self, std::span<const double> g, Node::GradSlots& gin) {
                CMapMat G(g.data(), m, n);
                if (gin[0])
                  MapMat(gin[0]->data(), m, k).noalias() +=
                      G * CMapMat(self.inputs[1]->value.data(), k, n).transpose();
                if (gin[1])
                  MapMat(gin[1]->data(), k, n).noalias() +=
                      CMapMat(self.inputs[0]->value.data(), m, k).transpose() * G;
              });
}

Tensor dense(const Tensor& input, const Tensor& weights, const Tensor& bias) {
  require_rank("dense", weights, 2, "weights");
  require_rank("dense", bias, 1, "bias");
  if (input.rank() != 1 && input.rank() != 2)
    shape_fail("dense", "input must be rank 1 or 2, got " + shape_str(input.shape()));
  const std::size_t h = weights.dim(0);
  const std::size_t d = weights.dim(1);
  require_dim("dense", "input dimension 0", input.dim(0), d);
  require_dim("dense", "bias length", bias.dim(0), h);
  const std::size_t cols = input.rank() == 2 ? input.dim(1) : 1;
  Shape shape = input.rank() == 2 ? Shape{h, cols} : Shape{h};

  std::vector<double> out(h * cols);
  MapMat Y(out.data(), h, cols);
  Y.noalias() = CMapMat(weights.values().data(), h, d) * CMapMat(input.values().data(), d, cols);
  Y.colwise() += CMapVec(bias.values().data(), h);
  return make("dense", std::move(shape), std::move(out), {input.node(), weights.node(), bias.node()},
              [h, d, cols](const Node& self, std::span<const double> g, Node::GradSlots& gin) {
                CMapMat G(g.data(), h, cols);
                if (gin[0])
                  MapMat(gin[0]->data(), d, cols).noalias() +=
                      CMapMat(self.inputs[1]->value.data(), h, d).transpose() * G;
                if (gin[1])
                  MapMat(gin[1]->data(), h, d).noalias() +=
                      G * CMapMat(self.inputs[0]->value.data(), d, cols).transpose();
                if (gin[2])
                  MapVec(gin[2]->data(), h) += G.rowwise().sum();
              });
}

Tensor conv1d(const Tensor& input, const Tensor& kernels, const Tensor& bias, std::size_t padding,
              std::size_t stride) {
  require_rank("conv1d", input, 2, "input");
  require_rank("conv1d", kernels, 3, "kernels");
  require_rank("conv1d", bias, 1, "bias");
  if (stride < 1)
    throw InvalidArgument("conv1d: stride must be >= 1");
  const std::size_t cin = input.dim(0);
  const std::size_t len = input.dim(1);
  const std::size_t cout = kernels.dim(0);
  const std::size_t k = kernels.dim(2);
  require_dim("conv1d", "kernel input channels (dim 1)", kernels.dim(1), cin);
  require_dim("conv1d", "bias length", bias.dim(0), cout);
  if (k == 0 || k > len + 2 * padding)
    shape_fail("conv1d", "kernel size " + std::to_string(k) + " exceeds padded length " +
                             std::to_string(len + 2 * padding));
  const std::size_t lout = (len + 2 * padding - k) / stride + 1;

  // im2col: cols[(c*k + j) x t] = in_pad[c][t*stride + j]
  auto cols = std::make_shared<std::vector<double>>(cin * k * lout, 0.0);
  auto xv = input.values();
  for (std::size_t c = 0; c < cin; ++c)
    for (std::size_t j = 0; j < k; ++j) {
      double* row = cols->data() + (c * k + j) * lout;
      for (std::size_t t = 0; t < lout; ++t) {
        const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t * stride + j) - static_cast<std::ptrdiff_t>(padding);
        if (src >= 0 && src < static_cast<std::ptrdiff_t>(len))
          row[t] = xv[c * len + static_cast<std::size_t>(src)];
      }
    }
  std::vector<double> out(cout * lout);
  MapMat Y(out.data(), cout, lout);
  Y.noalias() = CMapMat(kernels.values().data(), cout, cin * k) * CMapMat(cols->data(), cin * k, lout);
  Y.colwise() += CMapVec(bias.values().data(), cout);

  return make("conv1d", {cout, lout}, std::move(out), {input.node(), kernels.node(), bias.node()},
              [cols, cin, len, cout, k, lout, padding, stride](const Node& self, std::span<const double> g,
                                                               Node::GradSlots& gin) {
                CMapMat G(g.data(), cout, lout);
                if (gin[1])
                  MapMat(gin[1]->data(), cout, cin * k).noalias() +=
                      G * CMapMat(cols->data(), cin * k, lout).transpose();
                if (gin[2])
                  MapVec(gin[2]->data(), cout) += G.rowwise().sum();
                if (gin[0]) {
                  RowMat dcols = CMapMat(self.inputs[1]->value.data(), cout, cin * k).transpose() * G;
                  auto& gx = *gin[0];
                  for (std::size_t c = 0; c < cin; ++c)
                    for (std::size_t j = 0; j < k; ++j)
                      for (std::size_t t = 0; t < lout; ++t) {
                        const std::ptrdiff_t src =
                            static_cast<std::ptrdiff_t>(t * stride + j) - static_cast<std::ptrdiff_t>(padding);
                        if (src >= 0 && src < static_cast<std::ptrdiff_t>(len))
                          gx[c * len + static_cast<std::size_t>(src)] += dcols(c * k + j, t);
                      }
                }
              });
}

// ---------------------------------------------------------------------------
// Normalization and dropout

Tensor seq_norm(const Tensor& x, const Tensor& gain, const Tensor& shift, double epsilon) {
  require_rank("seq_norm", x, 2, "input");
  require_rank("seq_norm", gain, 1, "gain");
  require_rank("seq_norm", shift, 1, "shift");
  const std::size_t c = x.dim(0);
  const std::size_t len = x.dim(1);
  if (len < 2)
    shape_fail("seq_norm", "sequence length must be >= 2, got " + std::to_string(len));
  require_dim("seq_norm", "gain length", gain.dim(0), c);
  require_dim("seq_norm", "shift length", shift.dim(0), c);
  NormLayout layout{c, len, len, 1, true};
  return normalize_impl("seq_norm", x, gain, shift, epsilon, layout);
}

Tensor feature_norm(const Tensor& x, const Tensor& gain, const Tensor& shift, double epsilon) {
  require_rank("feature_norm", x, 2, "input");
  require_rank("feature_norm", gain, 1, "gain");
  require_rank("feature_norm", shift, 1, "shift");
  const std::size_t c = x.dim(0);
  const std::size_t len = x.dim(1);
  if (c < 2)
    shape_fail("feature_norm", "feature count must be >= 2, got " + std::to_string(c));
  require_dim("feature_norm", "gain length", gain.dim(0), c);
  require_dim("feature_norm", "shift length", shift.dim(0), c);
  NormLayout layout{len, c, 1, len, false};
  return normalize_impl("feature_norm", x, gain, shift, epsilon, layout);
}

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Tensor dropout(const Tensor& x, double rate, bool training, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0))
    throw InvalidArgument("dropout: rate must lie in [0, 1), got " + std::to_string(rate));
  if (!training || rate == 0.0)
    return x;
  const double keep_scale = 1.0 / (1.0 - rate);
  auto mask = std::make_shared<std::vector<double>>(x.numel());
  for (auto& m : *mask)
    m = uniform01(rng) < rate ? 0.0 : keep_scale;
  std::vector<double> out(x.numel());
  auto xv = x.values();
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = xv[i] * (*mask)[i];
  return make("dropout", x.shape(), std::move(out), {x.node()},
              [mask](const Node&, std::span<const double> g, Node::GradSlots& gin) {
                for (std::size_t i = 0; i < g.size(); ++i)
                  (*gin[0])[i] += g[i] * (*mask)[i];
              });
}

} // namespace msk::ad
