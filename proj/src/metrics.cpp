#include "msk/metrics.hpp"

#include "msk/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace msk::metrics {

namespace {

void same_length(const char* op, std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw ShapeError(std::string(op) + ": lengths " + std::to_string(a.size()) + " and " + std::to_string(b.size()) +
                     " differ");
}

std::vector<double> ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]])
      ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k)
      r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

} // namespace

ad::Tensor mse_force(const ad::Tensor& target, const ad::Tensor& prediction) {
  if (target.shape() != prediction.shape() || target.rank() != 2)
    throw ShapeError("mse_force: expected equal [T x N] shapes, got " + ad::shape_str(target.shape()) + " and " +
                     ad::shape_str(prediction.shape()));
  const double t = static_cast<double>(target.dim(0));
  return ad::scale(ad::sum(ad::square(ad::sub(target, prediction))), 1.0 / t);
}

ad::Tensor mse_angle(const ad::Tensor& target, const ad::Tensor& prediction) {
  if (target.shape() != prediction.shape() || target.rank() != 1)
    throw ShapeError("mse_angle: expected equal [T] shapes, got " + ad::shape_str(target.shape()) + " and " +
                     ad::shape_str(prediction.shape()));
  return ad::mean(ad::square(ad::sub(target, prediction)));
}

void LossWeights::validate() const {
  for (double w : {force, angle, physics})
    if (!(std::isfinite(w) && w >= 0.0))
      throw InvalidArgument("loss weights must be finite and non-negative");
}

LossBreakdown total_loss(double force, double angle, double physics, const LossWeights& weights) {
  weights.validate();
  for (double c : {force, angle, physics})
    if (!(std::isfinite(c) && c >= 0.0))
      throw NumericError("total_loss: loss components must be finite and non-negative");
  LossBreakdown b{force, angle, physics, weights, 0.0};
  b.total = weights.force * force + weights.angle * angle;
  if (weights.physics != 0.0)
    b.total += weights.physics * physics;
  return b;
}

ad::Tensor weighted_total(const ad::Tensor& force, const ad::Tensor& angle, const ad::Tensor& physics,
                          const LossWeights& weights) {
  weights.validate();
  auto total = ad::add(ad::scale(force, weights.force), ad::scale(angle, weights.angle));
  if (weights.physics != 0.0)
    total = ad::add(total, ad::scale(physics, weights.physics));
  return total;
}

double mse(std::span<const double> y, std::span<const double> yhat) {
  same_length("mse", y, yhat);
  if (y.empty())
    throw InvalidArgument("mse: empty input");
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = y[i] - yhat[i];
    s += d * d;
  }
  return s / static_cast<double>(y.size());
}

double rmse(std::span<const double> y, std::span<const double> yhat) {
  if (y.empty())
    throw InvalidArgument("rmse: empty input");
  return std::sqrt(mse(y, yhat));
}

double pearson_cc(std::span<const double> y, std::span<const double> yhat) {
  same_length("pearson_cc", y, yhat);
  if (y.size() < 2)
    throw InvalidArgument("pearson_cc: need at least 2 samples");
  const double n = static_cast<double>(y.size());
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  const double mp = std::accumulate(yhat.begin(), yhat.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double a = y[i] - my;
    const double b = yhat[i] - mp;
    sxy += a * b;
    sxx += a * a;
    syy += b * b;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw NumericError("pearson_cc: correlation undefined for a constant sequence");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double spearman(std::span<const double> x, std::span<const double> y) {
  same_length("spearman", x, y);
  auto rx = ranks(x);
  auto ry = ranks(y);
  return pearson_cc(rx, ry);
}

EvalReport evaluate(const std::vector<std::string>& names, const std::vector<std::vector<double>>& truth,
                    const std::vector<std::vector<double>>& prediction, std::uint64_t seed, std::string split) {
  if (names.size() != truth.size() || names.size() != prediction.size() || names.empty())
    throw ShapeError("evaluate: names, truth and prediction must list the same non-zero number of outputs");
  EvalReport report;
  report.seed = seed;
  report.split = std::move(split);
  double cc_sum = 0.0;
  double nrmse_sum = 0.0;
  bool all_cc = true;
  bool all_nrmse = true;
  for (std::size_t j = 0; j < names.size(); ++j) {
    OutputMetrics m;
    m.variable = names[j];
    m.rmse = rmse(truth[j], prediction[j]);
    try {
      m.cc = pearson_cc(truth[j], prediction[j]);
    } catch (const NumericError&) {
      m.cc.reset();
    }
    const auto [lo, hi] = std::minmax_element(truth[j].begin(), truth[j].end());
    if (*hi > *lo)
      m.nrmse = m.rmse / (*hi - *lo);
    report.mean_rmse += m.rmse;
    if (m.cc)
      cc_sum += *m.cc;
    else
      all_cc = false;
    if (m.nrmse)
      nrmse_sum += *m.nrmse;
    else
      all_nrmse = false;
    report.outputs.push_back(std::move(m));
  }
  const double k = static_cast<double>(names.size());
  report.mean_rmse /= k;
  if (all_cc)
    report.mean_cc = cc_sum / k;
  if (all_nrmse)
    report.mean_nrmse = nrmse_sum / k;
  return report;
}

} // namespace msk::metrics
