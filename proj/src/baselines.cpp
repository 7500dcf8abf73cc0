#include "msk/baselines.hpp"

#include "msk/error.hpp"
#include "msk/random.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace msk::baselines {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const RowMat> view(const Matrix& m) { return {m.data.data(), static_cast<Eigen::Index>(m.rows),
                                                        static_cast<Eigen::Index>(m.cols)}; }

Matrix to_matrix(const Eigen::MatrixXd& e) {
  Matrix m(static_cast<std::size_t>(e.rows()), static_cast<std::size_t>(e.cols()));
  Eigen::Map<RowMat>(m.data.data(), e.rows(), e.cols()) = e;
  return m;
}

constexpr std::uint64_t kElmStream = 0x656c6dULL;

// Solve A x = B for symmetric positive semi-definite A, failing loudly when
// A is numerically singular.
Eigen::MatrixXd solve_spd(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const char* who) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-12);
  if (!qr.isInvertible())
    throw NumericError(std::string(who) + ": singular system (rank " + std::to_string(qr.rank()) + " of " +
                       std::to_string(a.rows()) + "); use a ridge coefficient lambda > 0");
  return qr.solve(b);
}

} // namespace

ElmModel elm_init(std::size_t features, std::size_t hidden, std::uint64_t seed) {
  if (features == 0 || hidden == 0)
    throw InvalidArgument("elm: features and hidden width must be positive");
  ElmModel m;
  m.seed = seed;
  m.input_weights = Matrix(hidden, features);
  m.hidden_bias.resize(hidden);
  ad::Rng rng(derive_seed(seed, {kElmStream}));
  for (std::size_t h = 0; h < hidden; ++h) {
    for (std::size_t j = 0; j < features; ++j)
      m.input_weights(h, j) = uniform(rng, -1.0, 1.0);
    m.hidden_bias[h] = uniform(rng, -1.0, 1.0);
  }
  return m;
}

Matrix elm_hidden(const ElmModel& model, const Matrix& x) {
  if (x.cols != model.features())
    throw ShapeError("elm: input has " + std::to_string(x.cols) + " features, model expects " +
                     std::to_string(model.features()));
  RowMat z = view(x) * view(model.input_weights).transpose();
  for (Eigen::Index h = 0; h < z.cols(); ++h)
    z.col(h).array() += model.hidden_bias[static_cast<std::size_t>(h)];
  z = z.unaryExpr([](double v) { return v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v)); });
  Matrix g(x.rows, model.hidden());
  Eigen::Map<RowMat>(g.data.data(), z.rows(), z.cols()) = z;
  return g;
}

ElmModel elm_train(const Matrix& x, const Matrix& y, std::size_t hidden, double lambda, std::uint64_t seed) {
  if (x.rows < 1)
    throw InvalidArgument("elm: need at least one sample");
  if (y.rows != x.rows)
    throw ShapeError("elm: X has " + std::to_string(x.rows) + " rows, Y has " + std::to_string(y.rows));
  if (!(lambda >= 0.0))
    throw InvalidArgument("elm: lambda must be >= 0");
  ElmModel m = elm_init(x.cols, hidden, seed);
  m.lambda = lambda;
  const Matrix g = elm_hidden(m, x);
  const Eigen::MatrixXd G = view(g);
  const Eigen::MatrixXd Y = view(y);
  Eigen::MatrixXd beta;
  if (lambda == 0.0 && x.rows <= hidden) {
    const Eigen::MatrixXd gram = G * G.transpose();
    beta = G.transpose() * solve_spd(gram, Y, "elm");
  } else {
    Eigen::MatrixXd a = G.transpose() * G;
    a.diagonal().array() += lambda;
    beta = solve_spd(a, G.transpose() * Y, "elm");
  }
  m.output_weights = to_matrix(beta);
  return m;
}

Matrix elm_predict(const ElmModel& model, const Matrix& x) {
  const Matrix g = elm_hidden(model, x);
  const Eigen::MatrixXd out = view(g) * view(model.output_weights);
  return to_matrix(out);
}

RidgeModel ridge_train(const Matrix& x, const Matrix& y, double lambda, bool fit_intercept) {
  if (!(lambda > 0.0))
    throw InvalidArgument("ridge: lambda must be > 0");
  if (y.rows != x.rows || x.rows == 0)
    throw ShapeError("ridge: X has " + std::to_string(x.rows) + " rows, Y has " + std::to_string(y.rows));
  Eigen::MatrixXd X = view(x);
  Eigen::MatrixXd Y = view(y);
  Eigen::RowVectorXd x_mean = Eigen::RowVectorXd::Zero(X.cols());
  Eigen::RowVectorXd y_mean = Eigen::RowVectorXd::Zero(Y.cols());
  if (fit_intercept) {
    x_mean = X.colwise().mean();
    y_mean = Y.colwise().mean();
    X.rowwise() -= x_mean;
    Y.rowwise() -= y_mean;
  }
  Eigen::MatrixXd a = X.transpose() * X;
  a.diagonal().array() += lambda;
  const Eigen::MatrixXd w = a.ldlt().solve(X.transpose() * Y);
  RidgeModel m;
  m.lambda = lambda;
  m.weights = to_matrix(w);
  const Eigen::RowVectorXd c = y_mean - x_mean * w;
  m.intercept.assign(c.data(), c.data() + c.size());
  return m;
}

Matrix ridge_predict(const RidgeModel& model, const Matrix& x) {
  if (x.cols != model.weights.rows)
    throw ShapeError("ridge: input has " + std::to_string(x.cols) + " features, model expects " +
                     std::to_string(model.weights.rows));
  Eigen::MatrixXd out = view(x) * view(model.weights);
  for (Eigen::Index j = 0; j < out.cols(); ++j)
    out.col(j).array() += model.intercept[static_cast<std::size_t>(j)];
  return to_matrix(out);
}

double ridge_objective(const Matrix& x, const Matrix& y, const Matrix& weights, double lambda) {
  const Eigen::MatrixXd r = view(y) - view(x) * view(weights);
  return r.squaredNorm() + lambda * view(weights).squaredNorm();
}

FeatureSet window_features(const data::WindowSet& windows, const data::NormStats& stats) {
  if (windows.empty())
    throw InvalidArgument("window_features: no windows");
  const std::size_t d = windows.input_channels() * windows.window();
  const std::size_t m = windows.outputs();
  FeatureSet fs{Matrix(windows.size(), d), Matrix(windows.size(), m)};
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const Matrix in = windows.input(i);
    std::copy(in.data.begin(), in.data.end(), fs.x.row(i).begin());
    const auto c = windows.center_targets(i);
    for (std::size_t j = 0; j < m; ++j)
      fs.y(i, j) = (c[j] - stats.mean[j]) / stats.stddev[j];
  }
  return fs;
}

} // namespace msk::baselines
