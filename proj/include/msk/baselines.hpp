#pragma once

// Reference regressors on flattened window features: extreme learning machine
// and ridge regression.

#include "msk/datasets.hpp"
#include "msk/matrix.hpp"

#include <cstdint>

namespace msk::baselines {

struct ElmModel {
  Matrix input_weights;  // [H x d], uniform(-1, 1), frozen
  std::vector<double> hidden_bias;  // [H], uniform(-1, 1), frozen
  Matrix output_weights; // [H x m], solved
  double lambda = 0.0;
  std::uint64_t seed = 0;

  std::size_t hidden() const { return input_weights.rows; }
  std::size_t features() const { return input_weights.cols; }
  std::size_t outputs() const { return output_weights.cols; }
};

/// Random hidden layer drawn unit by unit, so models with the same seed and a
/// larger H contain the smaller model's hidden units as a prefix.
ElmModel elm_init(std::size_t features, std::size_t hidden, std::uint64_t seed);

/// Sigmoid hidden activations G [S x H].
Matrix elm_hidden(const ElmModel& model, const Matrix& x);

/// Solve (G'G + lambda I) beta = G'Y. With lambda = 0 and S <= H the minimum
/// norm interpolant G'(GG')^-1 Y is returned. Throws NumericError advising
/// lambda > 0 when the system is singular.
ElmModel elm_train(const Matrix& x, const Matrix& y, std::size_t hidden, double lambda, std::uint64_t seed);

Matrix elm_predict(const ElmModel& model, const Matrix& x);

struct RidgeModel {
  Matrix weights;                 // [d x m]
  std::vector<double> intercept;  // [m], zero when fitted without intercept
  double lambda = 0.0;
};

/// argmin ||Y - XW - 1c'||^2 + lambda ||W||^2; the intercept is not penalized.
RidgeModel ridge_train(const Matrix& x, const Matrix& y, double lambda, bool fit_intercept = true);
Matrix ridge_predict(const RidgeModel& model, const Matrix& x);

/// Ridge objective value of `weights` (no intercept).
double ridge_objective(const Matrix& x, const Matrix& y, const Matrix& weights, double lambda);

/// Flattened window inputs [S x (channels*W)] and z-scored center-sample
/// targets [S x (N+1)].
struct FeatureSet {
  Matrix x;
  Matrix y;
};

FeatureSet window_features(const data::WindowSet& windows, const data::NormStats& stats);

} // namespace msk::baselines
