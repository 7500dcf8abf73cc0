#include "testkit.hpp"

#include "msk/datasets.hpp"
#include "msk/metrics.hpp"
#include "msk/network.hpp"
#include "msk/physics.hpp"
#include "msk/random.hpp"
#include "msk/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

namespace msk::testkit {

std::vector<double> random_values(std::size_t n, std::uint64_t seed, double lo, double hi) {
  ad::Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v)
    x = uniform(rng, lo, hi);
  return v;
}

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, double lo, double hi) {
  Matrix m(rows, cols);
  m.data = random_values(rows * cols, seed, lo, hi);
  return m;
}

std::vector<double> loop_conv1d(const std::vector<double>& input, std::size_t channels, std::size_t length,
                                const std::vector<double>& kernels, std::size_t out_channels, std::size_t kernel,
                                const std::vector<double>& bias, std::size_t padding, std::size_t stride) {
  const std::size_t padded = length + 2 * padding;
  const std::size_t out_len = (padded - kernel) / stride + 1;
  std::vector<double> out(out_channels * out_len);
  for (std::size_t o = 0; o < out_channels; ++o)
    for (std::size_t t = 0; t < out_len; ++t) {
      double acc = bias[o];
      for (std::size_t c = 0; c < channels; ++c)
        for (std::size_t k = 0; k < kernel; ++k) {
          const long pos = static_cast<long>(t * stride + k) - static_cast<long>(padding);
          if (pos < 0 || pos >= static_cast<long>(length))
            continue;
          acc += kernels[(o * channels + c) * kernel + k] * input[c * length + static_cast<std::size_t>(pos)];
        }
      out[o * out_len + t] = acc;
    }
  return out;
}

std::vector<double> loop_torque(const Matrix& forces, const std::vector<double>& arms) {
  std::vector<double> tau(forces.rows, 0.0);
  for (std::size_t t = 0; t < forces.rows; ++t)
    for (std::size_t n = 0; n < forces.cols; ++n)
      tau[t] += arms[n] * forces(t, n);
  return tau;
}

Matrix gauss_solve(Matrix a, Matrix b) {
  const std::size_t n = a.rows;
  if (a.cols != n || b.rows != n)
    throw std::invalid_argument("gauss_solve: shape");
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a(r, col)) > std::abs(a(piv, col)))
        piv = r;
    if (a(piv, col) == 0.0)
      throw std::runtime_error("gauss_solve: singular");
    for (std::size_t c = 0; c < n; ++c)
      std::swap(a(col, c), a(piv, c));
    for (std::size_t c = 0; c < b.cols; ++c)
      std::swap(b(col, c), b(piv, c));
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a(r, col) / a(col, col);
      for (std::size_t c = col; c < n; ++c)
        a(r, c) -= f * a(col, c);
      for (std::size_t c = 0; c < b.cols; ++c)
        b(r, c) -= f * b(col, c);
    }
  }
  Matrix x(n, b.cols);
  for (std::size_t c = 0; c < b.cols; ++c)
    for (std::size_t r = n; r-- > 0;) {
      double acc = b(r, c);
      for (std::size_t k = r + 1; k < n; ++k)
        acc -= a(r, k) * x(k, c);
      x(r, c) = acc / a(r, r);
    }
  return x;
}

namespace {

Matrix regularized_system(const Matrix& x, const Matrix& y, const std::vector<double>& penalty, Matrix& rhs) {
  const std::size_t d = x.cols;
  Matrix a(d, d);
  rhs = Matrix(d, y.cols);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j)
      for (std::size_t s = 0; s < x.rows; ++s)
        a(i, j) += x(s, i) * x(s, j);
    a(i, i) += penalty[i];
    for (std::size_t c = 0; c < y.cols; ++c)
      for (std::size_t s = 0; s < x.rows; ++s)
        rhs(i, c) += x(s, i) * y(s, c);
  }
  return a;
}

} // namespace

Matrix normal_equations(const Matrix& x, const Matrix& y, double lambda) {
  Matrix rhs;
  Matrix a = regularized_system(x, y, std::vector<double>(x.cols, lambda), rhs);
  return gauss_solve(std::move(a), std::move(rhs));
}

Matrix normal_equations_intercept(const Matrix& x, const Matrix& y, double lambda) {
  Matrix aug(x.rows, x.cols + 1, 1.0);
  for (std::size_t s = 0; s < x.rows; ++s)
    for (std::size_t j = 0; j < x.cols; ++j)
      aug(s, j) = x(s, j);
  std::vector<double> penalty(x.cols + 1, lambda);
  penalty.back() = 0.0;
  Matrix rhs;
  Matrix a = regularized_system(aug, y, penalty, rhs);
  return gauss_solve(std::move(a), std::move(rhs));
}

Matrix loop_sigmoid_hidden(const Matrix& x, const Matrix& w, const std::vector<double>& bias) {
  Matrix g(x.rows, w.rows);
  for (std::size_t s = 0; s < x.rows; ++s)
    for (std::size_t h = 0; h < w.rows; ++h) {
      double z = bias[h];
      for (std::size_t j = 0; j < x.cols; ++j)
        z += w(h, j) * x(s, j);
      g(s, h) = 1.0 / (1.0 + std::exp(-z));
    }
  return g;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    return INFINITY;
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// ---------------------------------------------------------------------------

GradReport grad_check(const ScalarFn& f, const std::vector<Leaf>& leaves, double h, double floor,
                      std::size_t per_leaf) {
  std::vector<ad::Tensor> tracked;
  for (const auto& l : leaves)
    tracked.push_back(ad::Tensor::parameter(l.shape, l.values));
  const auto grads = ad::backward(f(tracked));

  auto eval_at = [&](std::size_t leaf, std::size_t elem, double delta) {
    std::vector<ad::Tensor> in;
    for (std::size_t i = 0; i < leaves.size(); ++i) {
      auto v = leaves[i].values;
      if (i == leaf)
        v[elem] += delta;
      in.push_back(ad::Tensor::constant(leaves[i].shape, std::move(v)));
    }
    return f(in).item();
  };

  GradReport rep;
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    const auto analytic = grads.of(tracked[i]);
    const std::size_t n = leaves[i].values.size();
    const std::size_t count = per_leaf == 0 ? n : std::min(n, per_leaf);
    for (std::size_t k = 0; k < count; ++k) {
      const std::size_t j = count == n ? k : (k * n) / count + (n / count) / 2;
      const double numeric = (eval_at(i, j, h) - eval_at(i, j, -h)) / (2.0 * h);
      const double err = std::abs(analytic[j] - numeric) / std::max(std::abs(analytic[j]) + std::abs(numeric), floor);
      ++rep.checked;
      if (err >= rep.max_rel_error) {
        rep.max_rel_error = err;
        rep.worst = "leaf " + std::to_string(i) + " element " + std::to_string(j);
      }
    }
  }
  return rep;
}

namespace {

// sum(x * R) for a fixed random R of x's shape.
ad::Tensor project(const ad::Tensor& x, std::uint64_t seed) {
  if (x.numel() == 1 && x.rank() == 0)
    return x;
  return ad::sum(ad::mul(x, ad::Tensor::constant(x.shape(), random_values(x.numel(), seed))));
}

Leaf leaf(ad::Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  const auto n = ad::shape_numel(shape);
  return {std::move(shape), random_values(n, seed, lo, hi)};
}

// Values bounded away from zero, for ops with a kink at the origin.
Leaf leaf_off_zero(ad::Shape shape, std::uint64_t seed) {
  auto l = leaf(std::move(shape), seed);
  for (auto& v : l.values)
    v = v < 0 ? v - 0.05 : v + 0.05;
  return l;
}

using Ts = std::vector<ad::Tensor>;

} // namespace

std::vector<GradCase> op_gradient_cases() {
  physics::DynamicsParams dyn;
  dyn.dt = 0.02;
  std::vector<GradCase> c;
  c.push_back({"add", [](const Ts& x) { return project(ad::add(x[0], x[1]), 1); }, {leaf({3, 4}, 2), leaf({3, 4}, 3)}});
  c.push_back({"add scalar broadcast", [](const Ts& x) { return project(ad::add(x[0], x[1]), 4); },
               {leaf({5}, 5), leaf({}, 6)}});
  c.push_back({"sub", [](const Ts& x) { return project(ad::sub(x[0], x[1]), 7); }, {leaf({6}, 8), leaf({6}, 9)}});
  c.push_back({"mul", [](const Ts& x) { return project(ad::mul(x[0], x[1]), 10); },
               {leaf({2, 3}, 11), leaf({2, 3}, 12)}});
  c.push_back({"mul scalar broadcast", [](const Ts& x) { return project(ad::mul(x[1], x[0]), 13); },
               {leaf({4}, 14), leaf({}, 15)}});
  c.push_back({"scale", [](const Ts& x) { return project(ad::scale(x[0], -2.5), 16); }, {leaf({7}, 17)}});
  c.push_back({"add_scalar", [](const Ts& x) { return project(ad::add_scalar(x[0], 0.7), 18); }, {leaf({7}, 19)}});
  c.push_back({"relu", [](const Ts& x) { return project(ad::relu(x[0]), 20); }, {leaf_off_zero({4, 5}, 21)}});
  c.push_back({"sigmoid", [](const Ts& x) { return project(ad::sigmoid(x[0]), 22); }, {leaf({9}, 23, -4, 4)}});
  c.push_back({"sin", [](const Ts& x) { return project(ad::sin(x[0]), 24); }, {leaf({9}, 25, -3, 3)}});
  c.push_back({"square", [](const Ts& x) { return project(ad::square(x[0]), 26); }, {leaf({9}, 27)}});
  c.push_back({"sum", [](const Ts& x) { return ad::sum(ad::square(x[0])); }, {leaf({3, 3}, 28)}});
  c.push_back({"mean", [](const Ts& x) { return ad::mean(ad::square(x[0])); }, {leaf({3, 3}, 29)}});
  c.push_back({"reshape", [](const Ts& x) { return project(ad::reshape(x[0], {3, 4}), 30); }, {leaf({2, 6}, 31)}});
  c.push_back({"transpose", [](const Ts& x) { return project(ad::transpose(x[0]), 32); }, {leaf({3, 5}, 33)}});
  c.push_back({"slice", [](const Ts& x) { return project(ad::slice(x[0], 2, 7), 34); }, {leaf({9}, 35)}});
  c.push_back({"slice_cols", [](const Ts& x) { return project(ad::slice_cols(x[0], 1, 3), 36); },
               {leaf({4, 5}, 37)}});
  c.push_back({"column", [](const Ts& x) { return project(ad::column(x[0], 2), 38); }, {leaf({4, 5}, 39)}});
  c.push_back({"column_affine",
               [](const Ts& x) {
                 const std::vector<double> s{2.0, -0.5, 3.0}, b{1.0, 0.0, -4.0};
                 return project(ad::column_affine(x[0], s, b), 40);
               },
               {leaf({4, 3}, 41)}});
  c.push_back({"matmul", [](const Ts& x) { return project(ad::matmul(x[0], x[1]), 42); },
               {leaf({3, 4}, 43), leaf({4, 2}, 44)}});
  c.push_back({"dense vector", [](const Ts& x) { return project(ad::dense(x[0], x[1], x[2]), 45); },
               {leaf({4}, 46), leaf({3, 4}, 47), leaf({3}, 48)}});
  c.push_back({"dense sequence", [](const Ts& x) { return project(ad::dense(x[0], x[1], x[2]), 49); },
               {leaf({4, 6}, 50), leaf({3, 4}, 51), leaf({3}, 52)}});
  c.push_back({"conv1d padded", [](const Ts& x) { return project(ad::conv1d(x[0], x[1], x[2], 3, 1), 53); },
               {leaf({2, 10}, 54), leaf({4, 2, 3}, 55), leaf({4}, 56)}});
  c.push_back({"conv1d strided", [](const Ts& x) { return project(ad::conv1d(x[0], x[1], x[2], 1, 2), 57); },
               {leaf({3, 9}, 58), leaf({2, 3, 3}, 59), leaf({2}, 60)}});
  c.push_back({"seq_norm", [](const Ts& x) { return project(ad::seq_norm(x[0], x[1], x[2]), 61); },
               {leaf({3, 8}, 62), leaf({3}, 63, 0.5, 1.5), leaf({3}, 64)}});
  c.push_back({"feature_norm", [](const Ts& x) { return project(ad::feature_norm(x[0], x[1], x[2]), 65); },
               {leaf({4, 6}, 66), leaf({4}, 67, 0.5, 1.5), leaf({4}, 68)}});
  c.push_back({"dropout",
               [](const Ts& x) {
                 ad::Rng rng(69);
                 return project(ad::dropout(x[0], 0.3, true, rng), 70);
               },
               {leaf({50}, 71)}});
  c.push_back({"torque", [dyn](const Ts& x) { return project(physics::torque(x[0], dyn), 72); },
               {leaf({7, 5}, 73, 0, 200)}});
  c.push_back({"central differences",
               [](const Ts& x) {
                 auto d = physics::fd_derivatives(x[0], 0.02);
                 return ad::add(project(d.velocity, 74), project(d.acceleration, 75));
               },
               {leaf({9}, 76)}});
  c.push_back({"eom residual", [dyn](const Ts& x) { return project(physics::eom_residual(x[0], x[1], dyn), 77); },
               {leaf({8}, 78), leaf({8, 5}, 79, 0, 50)}});
  c.push_back({"physics loss", [dyn](const Ts& x) { return physics::physics_loss(x[0], x[1], dyn); },
               {leaf({8}, 80), leaf({8, 5}, 81, 0, 50)}});
  c.push_back({"force loss", [](const Ts& x) { return metrics::mse_force(x[0], x[1]); },
               {leaf({6, 5}, 82), leaf({6, 5}, 83)}});
  c.push_back({"angle loss", [](const Ts& x) { return metrics::mse_angle(x[0], x[1]); }, {leaf({6}, 84), leaf({6}, 85)}});
  c.push_back({"weighted total",
               [](const Ts& x) {
                 return metrics::weighted_total(ad::square(x[0]), ad::square(x[1]), ad::square(x[2]),
                                                metrics::LossWeights{2.0, 1.0, 0.5});
               },
               {leaf({}, 86), leaf({}, 87), leaf({}, 88)}});
  return c;
}

GradCase composite_gradient_case(std::uint64_t seed, std::size_t per_leaf) {
  auto sim = sim::wrist_preset();
  sim.duration = 4.0;
  const auto mvc = sim::calibrate_mvc(sim, derive_seed(seed, {1}));
  const auto trial = sim::generate_trial(sim, 1.0, derive_seed(seed, {2}), mvc, "grad");
  const auto windows = data::make_windows({trial}, 100, 10, 25);
  ad::Rng pick(derive_seed(seed, {3}));
  const std::size_t idx = static_cast<std::size_t>(ad::uniform01(pick) * static_cast<double>(windows.size()));

  auto model = std::make_shared<net::NetworkModel>(net::default_architecture(), windows.input_channels(),
                                                   windows.window(), windows.outputs(), seed);
  model->set_training(true);
  const Matrix in = windows.input(idx);
  const Matrix targets = windows.targets(idx);
  const auto stats = data::compute_stats(windows);
  net::LossConfig loss{{1.0, 1.0, 1e-3}, sim.dynamics};
  const double dt = windows.dt();

  GradCase c;
  c.name = "composite loss";
  c.per_leaf = per_leaf;
  // Zero biases put some pre-activations exactly on the ReLU kink (all-zero
  // input patches), where finite differences are meaningless; jitter them.
  std::uint64_t jitter = derive_seed(seed, {4});
  for (const auto& p : model->parameters()) {
    auto values = p.values;
    if (p.name.ends_with(".bias") || p.name.ends_with(".shift")) {
      const auto noise = random_values(values.size(), jitter++, -0.05, 0.05);
      for (std::size_t i = 0; i < values.size(); ++i)
        values[i] += noise[i];
    }
    c.leaves.push_back({p.shape, values});
  }
  c.fn = [=](const Ts& leaves) {
    model->reseed(seed);
    auto out = model->forward(leaves, ad::Tensor::constant({in.rows, in.cols}, in.data));
    return net::window_loss(out, targets, stats, loss, dt).total;
  };
  return c;
}

} // namespace msk::testkit
