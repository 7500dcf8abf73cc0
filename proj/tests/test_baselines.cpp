#include "msk/baselines.hpp"
#include "msk/error.hpp"
#include "testkit/testkit.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace msk;

namespace {

double max_abs(const Matrix& m) {
  double v = 0.0;
  for (double x : m.data)
    v = std::max(v, std::abs(x));
  return v;
}

Matrix sub(const Matrix& a, const Matrix& b) {
  Matrix d = a;
  for (std::size_t i = 0; i < d.data.size(); ++i)
    d.data[i] -= b.data[i];
  return d;
}

} // namespace

TEST(Elm, HiddenLayerMatchesLoop) {
  const auto x = testkit::random_matrix(8, 3, 71);
  const auto m = baselines::elm_init(3, 5, 72);
  const auto ref = testkit::loop_sigmoid_hidden(x, m.input_weights, m.hidden_bias);
  EXPECT_LT(testkit::max_abs_diff(baselines::elm_hidden(m, x).data, ref.data), 1e-14);
}

TEST(Elm, RandomLayerIsUniformInUnitInterval) {
  const auto m = baselines::elm_init(10, 50, 73);
  for (double w : m.input_weights.data) {
    EXPECT_GE(w, -1.0);
    EXPECT_LT(w, 1.0);
  }
}

TEST(Elm, WiderModelExtendsNarrowerOne) {
  const auto a = baselines::elm_init(4, 6, 74);
  const auto b = baselines::elm_init(4, 9, 74);
  for (std::size_t h = 0; h < 6; ++h) {
    EXPECT_EQ(a.hidden_bias[h], b.hidden_bias[h]);
    for (std::size_t j = 0; j < 4; ++j)
      EXPECT_EQ(a.input_weights(h, j), b.input_weights(h, j));
  }
}

TEST(Elm, ZeroTargetsGiveZeroWeights) {
  const auto x = testkit::random_matrix(15, 3, 75);
  const auto m = baselines::elm_train(x, Matrix(15, 2), 8, 0.1, 76);
  EXPECT_EQ(max_abs(m.output_weights), 0.0);
  EXPECT_EQ(max_abs(baselines::elm_predict(m, x)), 0.0);
}

TEST(Elm, InterpolatesWhenUnderdetermined) {
  const auto x = testkit::random_matrix(10, 3, 77);
  const auto y = testkit::random_matrix(10, 2, 78);
  const auto m = baselines::elm_train(x, y, 40, 0.0, 79);
  EXPECT_LT(max_abs(sub(baselines::elm_predict(m, x), y)), 1e-8);
}

TEST(Elm, MatchesNormalEquations) {
  const auto x = testkit::random_matrix(20, 3, 80);
  const auto y = testkit::random_matrix(20, 2, 81);
  const auto m = baselines::elm_train(x, y, 10, 0.1, 82);
  const auto g = testkit::loop_sigmoid_hidden(x, m.input_weights, m.hidden_bias);
  const auto beta = testkit::normal_equations(g, y, 0.1);
  EXPECT_LT(testkit::max_abs_diff(m.output_weights.data, beta.data), 1e-9);
}

TEST(Elm, SameSeedSamePredictions) {
  const auto x = testkit::random_matrix(20, 3, 83);
  const auto y = testkit::random_matrix(20, 1, 84);
  EXPECT_EQ(baselines::elm_predict(baselines::elm_train(x, y, 12, 1e-3, 85), x),
            baselines::elm_predict(baselines::elm_train(x, y, 12, 1e-3, 85), x));
}

TEST(Elm, SingularSystemAdvisesRegularization) {
  // Identical samples make G'G rank one.
  Matrix x(12, 2, 0.5);
  try {
    baselines::elm_train(x, testkit::random_matrix(12, 1, 86), 6, 0.0, 87);
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("lambda > 0"), std::string::npos);
  }
}

TEST(Ridge, RecoversRealizableMap) {
  const auto x = testkit::random_matrix(40, 4, 88);
  const auto a = testkit::random_matrix(4, 2, 89);
  Matrix y(40, 2);
  for (std::size_t s = 0; s < 40; ++s)
    for (std::size_t c = 0; c < 2; ++c)
      for (std::size_t j = 0; j < 4; ++j)
        y(s, c) += x(s, j) * a(j, c);
  const auto m = baselines::ridge_train(x, y, 1e-12, false);
  EXPECT_LT(testkit::max_abs_diff(m.weights.data, a.data), 1e-6);
}

TEST(Ridge, HeavyPenaltyShrinksWeights) {
  const auto x = testkit::random_matrix(30, 3, 90);
  const auto y = testkit::random_matrix(30, 2, 91);
  EXPECT_LT(max_abs(baselines::ridge_train(x, y, 1e12).weights), 1e-9);
}

TEST(Ridge, MatchesNormalEquations) {
  const auto x = testkit::random_matrix(25, 4, 92);
  const auto y = testkit::random_matrix(25, 3, 93);
  const auto m = baselines::ridge_train(x, y, 0.5, false);
  EXPECT_LT(testkit::max_abs_diff(m.weights.data, testkit::normal_equations(x, y, 0.5).data), 1e-9);
  for (double c : m.intercept)
    EXPECT_EQ(c, 0.0);
}

TEST(Ridge, InterceptIsNotPenalized) {
  const auto x = testkit::random_matrix(25, 4, 94);
  auto y = testkit::random_matrix(25, 2, 95);
  for (std::size_t s = 0; s < 25; ++s)
    y(s, 1) += 30.0;
  const auto m = baselines::ridge_train(x, y, 2.0, true);
  const auto ref = testkit::normal_equations_intercept(x, y, 2.0);
  for (std::size_t j = 0; j < 4; ++j)
    for (std::size_t c = 0; c < 2; ++c)
      EXPECT_NEAR(m.weights(j, c), ref(j, c), 1e-9);
  for (std::size_t c = 0; c < 2; ++c)
    EXPECT_NEAR(m.intercept[c], ref(4, c), 1e-9);
}

TEST(Ridge, SolutionMinimizesObjective) {
  const auto x = testkit::random_matrix(30, 3, 96);
  const auto y = testkit::random_matrix(30, 1, 97);
  const auto m = baselines::ridge_train(x, y, 0.3, false);
  const double best = baselines::ridge_objective(x, y, m.weights, 0.3);
  for (std::uint64_t s = 0; s < 10; ++s) {
    Matrix w = m.weights;
    for (auto& v : w.data)
      v += 1e-3 * testkit::random_values(1, 200 + s)[0];
    EXPECT_GT(baselines::ridge_objective(x, y, w, 0.3), best);
  }
}

TEST(Ridge, RejectsNonPositiveLambdaAndBadShapes) {
  const auto x = testkit::random_matrix(5, 2, 98);
  EXPECT_THROW(baselines::ridge_train(x, Matrix(5, 1), 0.0), InvalidArgument);
  EXPECT_THROW(baselines::ridge_train(x, Matrix(4, 1), 1.0), ShapeError);
  const auto m = baselines::ridge_train(x, Matrix(5, 1), 1.0);
  EXPECT_THROW(baselines::ridge_predict(m, Matrix(2, 3)), ShapeError);
}
