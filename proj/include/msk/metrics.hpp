#pragma once

#include "msk/tensor.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace msk::metrics {

/// (1/T) * sum_t sum_n (F - Fhat)^2 over [T x N]; the muscle sum is not averaged.
ad::Tensor mse_force(const ad::Tensor& target, const ad::Tensor& prediction);
/// (1/T) * sum_t (theta - thetahat)^2 over [T].
ad::Tensor mse_angle(const ad::Tensor& target, const ad::Tensor& prediction);

struct LossWeights {
  double force = 1.0;
  double angle = 1.0;
  double physics = 1.0;

  void validate() const;
};

struct LossBreakdown {
  double force = 0.0;    // L_F
  double angle = 0.0;    // L_theta
  double physics = 0.0;  // L_P
  LossWeights weights;
  double total = 0.0;
};

LossBreakdown total_loss(double force, double angle, double physics, const LossWeights& weights);

/// Differentiable weighted total. A zero weight drops its term from the graph.
ad::Tensor weighted_total(const ad::Tensor& force, const ad::Tensor& angle, const ad::Tensor& physics,
                          const LossWeights& weights);

double mse(std::span<const double> y, std::span<const double> yhat);
double rmse(std::span<const double> y, std::span<const double> yhat);
/// Pearson correlation. Throws NumericError if either sequence is constant.
double pearson_cc(std::span<const double> y, std::span<const double> yhat);
/// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> x, std::span<const double> y);

struct OutputMetrics {
  std::string variable;
  double rmse = 0.0;
  std::optional<double> cc;     // empty when undefined (constant sequence)
  std::optional<double> nrmse;  // empty when the ground-truth range is zero
};

struct EvalReport {
  std::vector<OutputMetrics> outputs;
  double mean_rmse = 0.0;
  std::optional<double> mean_cc;
  std::optional<double> mean_nrmse;
  std::uint64_t seed = 0;
  std::string split;
};

/// Per-output metrics, pooled over all samples. `truth[j]` and
/// `prediction[j]` are the sample sequences of output j.
EvalReport evaluate(const std::vector<std::string>& names, const std::vector<std::vector<double>>& truth,
                    const std::vector<std::vector<double>>& prediction, std::uint64_t seed, std::string split);

} // namespace msk::metrics
