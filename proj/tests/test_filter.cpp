#include "msk/error.hpp"
#include "msk/filter.hpp"
#include "msk/metrics.hpp"
#include "msk/simulator.hpp"
#include "testkit/testkit.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace msk;

namespace {

constexpr double kRate = 1000.0;

std::vector<double> sine(double hz, std::size_t n, double amp = 1.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i)
    x[i] = amp * std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(i) / kRate);
  return x;
}

double rms(const std::vector<double>& x, std::size_t from, std::size_t to) {
  double s = 0.0;
  for (std::size_t i = from; i < to; ++i)
    s += x[i] * x[i];
  return std::sqrt(s / static_cast<double>(to - from));
}

} // namespace

TEST(Butterworth, LowpassCornerAndDc) {
  const filter::Cascade lp{filter::butter_lowpass(6.0, kRate)};
  EXPECT_NEAR(filter::magnitude(lp, 0.0, kRate), 1.0, 1e-12);
  EXPECT_NEAR(filter::magnitude(lp, 6.0, kRate), 1.0 / std::sqrt(2.0), 1e-9);
  EXPECT_LT(filter::magnitude(lp, 60.0, kRate), 0.011);  // 40 dB per decade
}

TEST(Butterworth, HighpassBlocksDc) {
  const filter::Cascade hp{filter::butter_highpass(20.0, kRate)};
  EXPECT_NEAR(filter::magnitude(hp, 0.0, kRate), 0.0, 1e-12);
  EXPECT_NEAR(filter::magnitude(hp, 20.0, kRate), 1.0 / std::sqrt(2.0), 1e-9);
}

TEST(Butterworth, BandpassAttenuatesFiveHertz) {
  const auto band = filter::butter_bandpass(20.0, 450.0, kRate);
  const double db = 20.0 * std::log10(filter::magnitude(band, 5.0, kRate));
  EXPECT_LE(db, -20.0);
  EXPECT_GT(filter::magnitude(band, 100.0, kRate), 0.95);
}

TEST(Butterworth, BandpassMeasuredOnSinusoid) {
  const auto band = filter::butter_bandpass(20.0, 450.0, kRate);
  const auto x = sine(5.0, 4000);
  const auto y = filter::filtfilt(band, x);
  // Forward-backward filtering squares the magnitude; check the measured
  // single-pass-equivalent attenuation away from the edges.
  EXPECT_LE(20.0 * std::log10(rms(y, 1000, 3000) / rms(x, 1000, 3000)), -40.0);
}

TEST(Butterworth, InvalidCutoffThrows) {
  EXPECT_THROW(filter::butter_lowpass(600.0, kRate), InvalidArgument);
  EXPECT_THROW(filter::butter_highpass(0.0, kRate), InvalidArgument);
  EXPECT_THROW(filter::butter_bandpass(450.0, 20.0, kRate), InvalidArgument);
}

TEST(Lfilter, MatchesDifferenceEquation) {
  const auto s = filter::butter_lowpass(40.0, kRate);
  const auto x = testkit::random_values(200, 51);
  const auto y = filter::lfilter({s}, x);
  double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double out = s.b0 * x[i] + s.b1 * x1 + s.b2 * x2 - s.a1 * y1 - s.a2 * y2;
    EXPECT_NEAR(y[i], out, 1e-12);
    x2 = x1;
    x1 = x[i];
    y2 = y1;
    y1 = out;
  }
}

TEST(Lfilter, SteadyStartHasNoTransientOnConstant) {
  const auto y = filter::lfilter({filter::butter_lowpass(6.0, kRate)}, std::vector<double>(50, 2.5), true);
  for (double v : y)
    EXPECT_NEAR(v, 2.5, 1e-12);
}

TEST(Filtfilt, ZeroPhase) {
  const filter::Cascade lp{filter::butter_lowpass(6.0, kRate)};
  const auto x = sine(2.0, 4000);
  const auto y = filter::filtfilt(lp, x);
  const double g = std::pow(filter::magnitude(lp, 2.0, kRate), 2);
  for (std::size_t i = 1000; i < 3000; ++i)
    EXPECT_NEAR(y[i], g * x[i], 2e-3);
}

TEST(Filtfilt, EmptyAndShortInputs) {
  const filter::Cascade lp{filter::butter_lowpass(6.0, kRate)};
  EXPECT_TRUE(filter::filtfilt(lp, std::vector<double>{}).empty());
  EXPECT_EQ(filter::filtfilt(lp, std::vector<double>{3.0}).size(), 1u);
}

TEST(Envelope, ZeroInputGivesZeroEnvelope) {
  const auto env = sim::emg_envelope_unnormalized(Matrix(2000, 2), kRate);
  for (double v : env.data)
    EXPECT_EQ(v, 0.0);
}

TEST(Envelope, TracksAmplitudeModulation) {
  const std::size_t n = 6000;
  Matrix raw(n, 1);
  std::vector<double> mod(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / kRate;
    mod[i] = 1.0 + 0.8 * std::sin(2.0 * std::numbers::pi * 1.0 * t);
    raw(i, 0) = mod[i] * std::sin(2.0 * std::numbers::pi * 100.0 * t);
  }
  const auto env = sim::emg_envelope_unnormalized(raw, kRate).column(0);
  EXPECT_GT(metrics::pearson_cc(std::span(mod).subspan(500, n - 1000), std::span(env).subspan(500, n - 1000)), 0.95);
}

TEST(Envelope, NormalizedIntoUnitInterval) {
  Matrix raw(3000, 1);
  raw.set_column(0, sine(80.0, 3000, 5.0));
  const auto env = sim::emg_pipeline(raw, kRate, {0.5});
  for (double v : env.data) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_THROW(sim::emg_pipeline(raw, kRate, {0.0}), InvalidArgument);
  EXPECT_THROW(sim::emg_pipeline(raw, kRate, {1.0, 1.0}), ShapeError);
}
