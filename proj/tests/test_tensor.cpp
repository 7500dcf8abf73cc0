#include "msk/error.hpp"
#include "msk/tensor.hpp"
#include "testkit/testkit.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace msk;
using ad::Tensor;

namespace {

std::vector<double> vals(const Tensor& t) { return {t.values().begin(), t.values().end()}; }

} // namespace

TEST(Conv1d, SummingKernel) {
  auto y = ad::conv1d(Tensor::constant({1, 3}, {1, 2, 3}), Tensor::constant({1, 1, 3}, {1, 1, 1}),
                      Tensor::constant({1}, {0}), 0, 1);
  ASSERT_EQ(y.shape(), (ad::Shape{1, 1}));
  EXPECT_DOUBLE_EQ(y[0], 6.0);
}

TEST(Conv1d, ZeroInputGivesBias) {
  auto k = Tensor::constant({2, 3, 3}, testkit::random_values(18, 1));
  auto y = ad::conv1d(Tensor::zeros({3, 7}), k, Tensor::constant({2}, {0.5, -2.0}), 3, 1);
  for (std::size_t t = 0; t < y.dim(1); ++t) {
    EXPECT_EQ(y.at(0, t), 0.5);
    EXPECT_EQ(y.at(1, t), -2.0);
  }
}

TEST(Conv1d, MatchesLoopOracle) {
  const auto in = testkit::random_values(2 * 10, 2);
  const auto k = testkit::random_values(4 * 2 * 3, 3);
  const auto b = testkit::random_values(4, 4);
  for (std::size_t stride : {1, 2, 3}) {
    auto y = ad::conv1d(Tensor::constant({2, 10}, in), Tensor::constant({4, 2, 3}, k), Tensor::constant({4}, b), 3,
                        stride);
    const auto ref = testkit::loop_conv1d(in, 2, 10, k, 4, 3, b, 3, stride);
    EXPECT_LT(testkit::max_abs_diff(vals(y), ref), 1e-12) << "stride " << stride;
  }
}

TEST(Conv1d, RejectsChannelMismatch) {
  EXPECT_THROW(ad::conv1d(Tensor::zeros({2, 5}), Tensor::zeros({1, 3, 3}), Tensor::zeros({1}), 0, 1), ShapeError);
  EXPECT_THROW(ad::conv1d(Tensor::zeros({2, 5}), Tensor::zeros({1, 2, 3}), Tensor::zeros({1}), 0, 0),
               InvalidArgument);
}

TEST(Dense, IdentityAndBias) {
  const std::vector<double> x{1.5, -2.0, 0.25};
  auto eye = Tensor::constant({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  EXPECT_EQ(vals(ad::dense(Tensor::constant({3}, x), eye, Tensor::zeros({3}))), x);
  auto y = ad::dense(Tensor::constant({3}, x), Tensor::zeros({2, 3}), Tensor::constant({2}, {4, -1}));
  EXPECT_EQ(vals(y), (std::vector<double>{4, -1}));
}

TEST(Dense, MatchesLoopOracle) {
  const auto w = testkit::random_values(6, 5);
  const auto x = testkit::random_values(2, 6);
  const auto b = testkit::random_values(3, 7);
  auto y = ad::dense(Tensor::constant({2}, x), Tensor::constant({3, 2}, w), Tensor::constant({3}, b));
  for (std::size_t h = 0; h < 3; ++h)
    EXPECT_NEAR(y[h], b[h] + w[2 * h] * x[0] + w[2 * h + 1] * x[1], 1e-15);
}

TEST(Dense, SequenceAppliesPerColumn) {
  const auto w = testkit::random_values(6, 8);
  const auto b = testkit::random_values(3, 9);
  const auto x = testkit::random_values(2 * 4, 10);
  auto seq = ad::dense(Tensor::constant({2, 4}, x), Tensor::constant({3, 2}, w), Tensor::constant({3}, b));
  for (std::size_t t = 0; t < 4; ++t) {
    auto col = ad::dense(Tensor::constant({2}, {x[t], x[4 + t]}), Tensor::constant({3, 2}, w),
                         Tensor::constant({3}, b));
    for (std::size_t h = 0; h < 3; ++h)
      EXPECT_NEAR(seq.at(h, t), col[h], 1e-15);
  }
}

TEST(Elementwise, Examples) {
  EXPECT_EQ(vals(ad::relu(Tensor::constant({3}, {-1, 0, 2}))), (std::vector<double>{0, 0, 2}));
  EXPECT_EQ(ad::sigmoid(Tensor::scalar(0.0)).item(), 0.5);
  EXPECT_EQ(ad::mean(ad::square(Tensor::constant({2}, {1, -1}))).item(), 1.0);
}

TEST(Elementwise, ReluDerivativeAtZeroIsZero) {
  auto x = Tensor::parameter({3}, {-1, 0, 2});
  auto g = ad::backward(ad::sum(ad::relu(x)));
  EXPECT_EQ(g.of(x), (std::vector<double>{0, 0, 1}));
}

TEST(Elementwise, ShapeMismatchThrows) {
  EXPECT_THROW(ad::add(Tensor::zeros({2}), Tensor::zeros({3})), ShapeError);
  EXPECT_THROW(ad::matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3})), ShapeError);
}

TEST(SeqNorm, ConstantChannelGivesShift) {
  auto y = ad::seq_norm(Tensor::constant({1, 4}, {3, 3, 3, 3}), Tensor::constant({1}, {2}),
                        Tensor::constant({1}, {0.5}));
  for (double v : y.values())
    EXPECT_DOUBLE_EQ(v, 0.5);
}

TEST(SeqNorm, AlreadyNormalized) {
  auto y = ad::seq_norm(Tensor::constant({1, 2}, {-1, 1}), Tensor::constant({1}, {1}), Tensor::constant({1}, {0}),
                        0.0);
  EXPECT_EQ(vals(y), (std::vector<double>{-1, 1}));
}

TEST(SeqNorm, ZeroVarianceWithoutEpsilonIsAnError) {
  EXPECT_THROW(ad::seq_norm(Tensor::constant({1, 2}, {1, 1}), Tensor::constant({1}, {1}),
                            Tensor::constant({1}, {0}), 0.0),
               NumericError);
}

TEST(SeqNorm, UnitMoments) {
  auto y = ad::seq_norm(Tensor::constant({3, 8}, testkit::random_values(24, 11, -5, 5)),
                        Tensor::constant({3}, {1, 1, 1}), Tensor::zeros({3}), 0.0);
  for (std::size_t c = 0; c < 3; ++c) {
    double m = 0, v = 0;
    for (std::size_t t = 0; t < 8; ++t)
      m += y.at(c, t) / 8;
    for (std::size_t t = 0; t < 8; ++t)
      v += (y.at(c, t) - m) * (y.at(c, t) - m) / 8;
    EXPECT_LT(std::abs(m), 1e-12);
    EXPECT_NEAR(v, 1.0, 1e-9);
  }
}

TEST(FeatureNorm, UnitMomentsPerPosition) {
  auto y = ad::feature_norm(Tensor::constant({5, 4}, testkit::random_values(20, 12, -3, 3)),
                            Tensor::constant({5}, {1, 1, 1, 1, 1}), Tensor::zeros({5}), 0.0);
  for (std::size_t t = 0; t < 4; ++t) {
    double m = 0, v = 0;
    for (std::size_t c = 0; c < 5; ++c)
      m += y.at(c, t) / 5;
    for (std::size_t c = 0; c < 5; ++c)
      v += (y.at(c, t) - m) * (y.at(c, t) - m) / 5;
    EXPECT_LT(std::abs(m), 1e-12);
    EXPECT_NEAR(v, 1.0, 1e-9);
  }
}

TEST(Dropout, RateZeroAndEvalAreIdentity) {
  const auto x = testkit::random_values(100, 13);
  ad::Rng rng(1);
  EXPECT_EQ(vals(ad::dropout(Tensor::constant({100}, x), 0.0, true, rng)), x);
  EXPECT_EQ(vals(ad::dropout(Tensor::constant({100}, x), 0.3, false, rng)), x);
}

TEST(Dropout, InvertedScalingKeepsMean) {
  // Elements are 0 or 1/(1-p); the sample mean of n such draws has standard
  // error sqrt(p/(1-p)/n).
  const std::size_t n = 100000;
  const double p = 0.3;
  ad::Rng rng(14);
  auto y = ad::dropout(Tensor::constant({n}, std::vector<double>(n, 1.0)), p, true, rng);
  double mean = 0.0;
  std::size_t zeros = 0;
  for (double v : y.values()) {
    mean += v / n;
    if (v == 0.0)
      ++zeros;
    else
      EXPECT_DOUBLE_EQ(v, 1.0 / (1.0 - p));
  }
  EXPECT_LT(std::abs(mean - 1.0), 3.0 * std::sqrt(p / (1.0 - p) / n));
  EXPECT_NEAR(static_cast<double>(zeros) / n, p, 3.0 * std::sqrt(p * (1 - p) / n));
}

TEST(Dropout, RejectsRateOne) {
  ad::Rng rng(1);
  EXPECT_THROW(ad::dropout(Tensor::zeros({2}), 1.0, true, rng), InvalidArgument);
}

TEST(Backward, SumGivesOnes) {
  auto x = Tensor::parameter({2, 3}, testkit::random_values(6, 15));
  EXPECT_EQ(ad::backward(ad::sum(x)).of(x), std::vector<double>(6, 1.0));
}

TEST(Backward, MeanOfSquare) {
  auto x = Tensor::parameter({1}, {3.0});
  EXPECT_EQ(ad::backward(ad::mean(ad::square(x))).of(x), std::vector<double>{6.0});
}

TEST(Backward, SharedSubexpressionAccumulates) {
  auto x = Tensor::parameter({}, {2.0});
  auto y = ad::mul(x, x);            // x^2
  auto loss = ad::add(y, ad::mul(y, x));  // x^2 + x^3
  EXPECT_DOUBLE_EQ(ad::backward(loss).of(x)[0], 2 * 2.0 + 3 * 4.0);
}

TEST(Backward, UnusedLeafGetsZeros) {
  auto x = Tensor::parameter({2}, {1, 2});
  auto unused = Tensor::parameter({3}, {1, 2, 3});
  EXPECT_EQ(ad::backward(ad::sum(x)).of(unused), std::vector<double>(3, 0.0));
}

TEST(Backward, NonScalarLossThrows) {
  EXPECT_THROW(ad::backward(Tensor::parameter({2}, {1, 2})), ShapeError);
}

TEST(Backward, NonFiniteForwardValuesAreRejected) {
  EXPECT_THROW(ad::mul(Tensor::scalar(1e200), Tensor::scalar(1e200)), NumericError);
}

class OpGradient : public ::testing::TestWithParam<testkit::GradCase> {};

TEST_P(OpGradient, MatchesCentralDifferences) {
  const auto& c = GetParam();
  const auto rep = testkit::grad_check(c.fn, c.leaves, 1e-5, 1e-6, c.per_leaf);
  EXPECT_GT(rep.checked, 0u);
  EXPECT_LT(rep.max_rel_error, 1e-4) << c.name << " worst at " << rep.worst;
}

INSTANTIATE_TEST_SUITE_P(AllOps, OpGradient, ::testing::ValuesIn(testkit::op_gradient_cases()),
                         [](const auto& info) {
                           std::string s = info.param.name;
                           for (auto& ch : s)
                             if (!std::isalnum(static_cast<unsigned char>(ch)))
                               ch = '_';
                           return s;
                         });
