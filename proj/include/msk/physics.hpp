#pragma once

// Single-DoF joint dynamics:  M*theta'' + b*theta' + g*sin(theta) = sum_n r_n F_n
//
// The same parameters drive the differentiable physics loss and the forward
// simulator, so the two stay consistent by construction.

#include "msk/tensor.hpp"

#include <vector>

namespace msk::physics {

struct DynamicsParams {
  double inertia = 0.05;        // kg m^2
  double damping = 0.1;         // N m s / rad
  double gravity_coeff = 2.0;   // m*g*l, N m
  std::vector<double> moment_arms{0.03, 0.025, -0.03, -0.025, -0.02};  // m, signed
  double dt = 1e-3;             // s

  std::size_t muscles() const { return moment_arms.size(); }
  /// Throws InvalidArgument naming the offending field.
  void validate() const;
};

struct JointState {
  double theta = 0.0;  // rad
  double omega = 0.0;  // rad/s
};

/// Joint angular acceleration for a given state and applied torque.
double acceleration(const DynamicsParams& params, JointState state, double torque);

/// tau_t = sum_n r_n F_t^n for forces [T x N]; returns [T].
ad::Tensor torque(const ad::Tensor& forces, const DynamicsParams& params);

struct Derivatives {
  ad::Tensor velocity;      // [T-2]
  ad::Tensor acceleration;  // [T-2]
};

/// Central differences on interior samples of theta [T], T >= 3.
Derivatives fd_derivatives(const ad::Tensor& theta, double dt);

/// Equation-of-motion residual on interior samples; returns [T-2].
ad::Tensor eom_residual(const ad::Tensor& theta, const ad::Tensor& forces, const DynamicsParams& params);

/// Mean squared residual over the T-2 interior samples.
ad::Tensor physics_loss(const ad::Tensor& theta, const ad::Tensor& forces, const DynamicsParams& params);

} // namespace msk::physics
