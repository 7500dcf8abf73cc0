#include "msk/physics.hpp"

#include "msk/error.hpp"

#include <cmath>
#include <string>

namespace msk::physics {

void DynamicsParams::validate() const {
  auto finite = [](double v) { return std::isfinite(v); };
  if (!(finite(inertia) && inertia > 0.0))
    throw InvalidArgument("dynamics: inertia must be finite and > 0");
  if (!finite(damping))
    throw InvalidArgument("dynamics: damping must be finite");
  if (!finite(gravity_coeff))
    throw InvalidArgument("dynamics: gravity_coeff must be finite");
  if (!(finite(dt) && dt > 0.0))
    throw InvalidArgument("dynamics: dt must be finite and > 0");
  if (moment_arms.empty())
    throw InvalidArgument("dynamics: moment_arms needs at least one muscle");
  for (std::size_t i = 0; i < moment_arms.size(); ++i)
    if (!finite(moment_arms[i]))
      throw InvalidArgument("dynamics: moment_arms[" + std::to_string(i) + "] is not finite");
}

double acceleration(const DynamicsParams& params, JointState state, double torque) {
  return (torque - params.damping * state.omega - params.gravity_coeff * std::sin(state.theta)) / params.inertia;
}

ad::Tensor torque(const ad::Tensor& forces, const DynamicsParams& params) {
  if (forces.rank() != 2)
    throw ShapeError("torque: forces must be [T x N], got " + ad::shape_str(forces.shape()));
  if (forces.dim(1) != params.muscles())
    throw ShapeError("torque: forces have " + std::to_string(forces.dim(1)) + " muscle columns, moment arms " +
                     std::to_string(params.muscles()));
  auto arms = ad::Tensor::constant({params.muscles(), 1}, params.moment_arms);
  return ad::reshape(ad::matmul(forces, arms), {forces.dim(0)});
}

Derivatives fd_derivatives(const ad::Tensor& theta, double dt) {
  if (theta.rank() != 1)
    throw ShapeError("fd_derivatives: theta must be rank 1, got " + ad::shape_str(theta.shape()));
  const std::size_t n = theta.dim(0);
  if (n < 3)
    throw ShapeError("fd_derivatives: need at least 3 samples, got " + std::to_string(n));
  if (!(dt > 0.0))
    throw InvalidArgument("fd_derivatives: dt must be > 0");
  auto next = ad::slice(theta, 2, n);
  auto mid = ad::slice(theta, 1, n - 1);
  auto prev = ad::slice(theta, 0, n - 2);
  Derivatives d;
  d.velocity = ad::scale(ad::sub(next, prev), 1.0 / (2.0 * dt));
  d.acceleration = ad::scale(ad::add(ad::sub(next, ad::scale(mid, 2.0)), prev), 1.0 / (dt * dt));
  return d;
}

ad::Tensor eom_residual(const ad::Tensor& theta, const ad::Tensor& forces, const DynamicsParams& params) {
  if (forces.rank() != 2 || theta.rank() != 1 || forces.dim(0) != theta.dim(0))
    throw ShapeError("eom_residual: theta " + ad::shape_str(theta.shape()) + " and forces " +
                     ad::shape_str(forces.shape()) + " disagree on T");
  const std::size_t n = theta.dim(0);
  auto d = fd_derivatives(theta, params.dt);
  auto tau = ad::slice(torque(forces, params), 1, n - 1);
  auto mid = ad::slice(theta, 1, n - 1);
  auto lhs = ad::add(ad::add(ad::scale(d.acceleration, params.inertia), ad::scale(d.velocity, params.damping)),
                     ad::scale(ad::sin(mid), params.gravity_coeff));
  return ad::sub(lhs, tau);
}

ad::Tensor physics_loss(const ad::Tensor& theta, const ad::Tensor& forces, const DynamicsParams& params) {
  return ad::mean(ad::square(eom_residual(theta, forces, params)));
}

} // namespace msk::physics
