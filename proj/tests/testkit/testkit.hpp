#pragma once

// Independent reference implementations and a finite-difference gradient
// checker, shared by the unit suites and the acceptance runner. Everything
// here is written as plain loops on purpose: it must not share code paths
// with the library it checks.

#include "msk/matrix.hpp"
#include "msk/tensor.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace msk::testkit {

std::vector<double> random_values(std::size_t n, std::uint64_t seed, double lo = -1.0, double hi = 1.0);
Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, double lo = -1.0, double hi = 1.0);

// --- oracles -------------------------------------------------------------------

/// Direct zero-padded cross-correlation; input [C x L], kernels [O x C x K].
std::vector<double> loop_conv1d(const std::vector<double>& input, std::size_t channels, std::size_t length,
                                const std::vector<double>& kernels, std::size_t out_channels, std::size_t kernel,
                                const std::vector<double>& bias, std::size_t padding, std::size_t stride);

/// sum_n r_n F[t][n] for every row.
std::vector<double> loop_torque(const Matrix& forces, const std::vector<double>& arms);

/// Gaussian elimination with partial pivoting; A is [n x n], B is [n x m].
Matrix gauss_solve(Matrix a, Matrix b);

/// (X'X + lambda D) W = X'Y with D = I, built and solved with plain loops.
Matrix normal_equations(const Matrix& x, const Matrix& y, double lambda);

/// Ridge with an unpenalized intercept: augment X with a ones column whose
/// diagonal entry is not regularized. Returns [(d+1) x m], intercept last.
Matrix normal_equations_intercept(const Matrix& x, const Matrix& y, double lambda);

/// sigmoid(X W' + b) with loops.
Matrix loop_sigmoid_hidden(const Matrix& x, const Matrix& w, const std::vector<double>& bias);

double max_abs_diff(std::span<const double> a, std::span<const double> b);

// --- gradients -------------------------------------------------------------------

struct Leaf {
  ad::Shape shape;
  std::vector<double> values;
};

/// Scalar function of tracked leaves.
using ScalarFn = std::function<ad::Tensor(const std::vector<ad::Tensor>&)>;

struct GradReport {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::string worst;  // "leaf i element j"
};

/// Compares backward() against central differences with step `h`. The error
/// of one element is |a - n| / max(|a| + |n|, floor). At most `per_leaf`
/// evenly spaced elements of each leaf are perturbed (0 = all).
GradReport grad_check(const ScalarFn& f, const std::vector<Leaf>& leaves, double h = 1e-5, double floor = 1e-6,
                      std::size_t per_leaf = 0);

struct GradCase {
  std::string name;
  ScalarFn fn;
  std::vector<Leaf> leaves;
  std::size_t per_leaf = 0;
};

/// One case per differentiable op, each reduced to a scalar through a fixed
/// random projection so that no gradient is trivially zero.
std::vector<GradCase> op_gradient_cases();

/// The composite objective (forces, angle and physics terms, all weights
/// non-zero) of the default network on a random window, one leaf per
/// parameter tensor. Dropout masks are replayed identically for every
/// evaluation.
GradCase composite_gradient_case(std::uint64_t seed, std::size_t per_leaf);

} // namespace msk::testkit
