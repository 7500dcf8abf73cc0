#include "msk/filter.hpp"

#include "msk/error.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

namespace msk::filter {

namespace {

constexpr double kQ = std::numbers::sqrt2 / 2.0;

void check_cutoff(const char* what, double cutoff, double rate) {
  if (!(rate > 0.0) || !(cutoff > 0.0) || !(cutoff < rate / 2.0))
    throw InvalidArgument(std::string(what) + ": cutoff " + std::to_string(cutoff) + " Hz must lie in (0, " +
                          std::to_string(rate / 2.0) + ") for rate " + std::to_string(rate) + " Hz");
}

} // namespace

Biquad butter_lowpass(double cutoff_hz, double rate_hz) {
  check_cutoff("butter_lowpass", cutoff_hz, rate_hz);
  const double k = std::tan(std::numbers::pi * cutoff_hz / rate_hz);
  const double norm = 1.0 / (1.0 + k / kQ + k * k);
  Biquad s;
  s.b0 = k * k * norm;
  s.b1 = 2.0 * s.b0;
  s.b2 = s.b0;
  s.a1 = 2.0 * (k * k - 1.0) * norm;
  s.a2 = (1.0 - k / kQ + k * k) * norm;
  return s;
}

Biquad butter_highpass(double cutoff_hz, double rate_hz) {
  check_cutoff("butter_highpass", cutoff_hz, rate_hz);
  const double k = std::tan(std::numbers::pi * cutoff_hz / rate_hz);
  const double norm = 1.0 / (1.0 + k / kQ + k * k);
  Biquad s;
  s.b0 = norm;
  s.b1 = -2.0 * norm;
  s.b2 = norm;
  s.a1 = 2.0 * (k * k - 1.0) * norm;
  s.a2 = (1.0 - k / kQ + k * k) * norm;
  return s;
}

Cascade butter_bandpass(double low_hz, double high_hz, double rate_hz) {
  if (!(low_hz < high_hz))
    throw InvalidArgument("butter_bandpass: low edge must be below high edge");
  return {butter_highpass(low_hz, rate_hz), butter_lowpass(high_hz, rate_hz)};
}

double magnitude(const Cascade& cascade, double freq_hz, double rate_hz) {
  const std::complex<double> z1 = std::polar(1.0, -2.0 * std::numbers::pi * freq_hz / rate_hz);
  const std::complex<double> z2 = z1 * z1;
  double mag = 1.0;
  for (const auto& s : cascade)
    mag *= std::abs((s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2));
  return mag;
}

std::vector<double> lfilter(const Cascade& cascade, std::span<const double> x, bool steady_start) {
  std::vector<double> y(x.begin(), x.end());
  for (const auto& s : cascade) {
    // Transposed direct form II.
    double z1 = 0.0;
    double z2 = 0.0;
    if (steady_start && !y.empty()) {
      const double x0 = y.front();
      const double y0 = s.dc_gain() * x0;
      z2 = s.b2 * x0 - s.a2 * y0;
      z1 = s.b1 * x0 - s.a1 * y0 + z2;
    }
    for (auto& v : y) {
      const double in = v;
      const double out = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * out + z2;
      z2 = s.b2 * in - s.a2 * out;
      v = out;
    }
  }
  return y;
}

std::vector<double> filtfilt(const Cascade& cascade, std::span<const double> x) {
  const std::size_t n = x.size();
  if (n == 0)
    return {};
  const std::size_t pad = std::min<std::size_t>(n - 1, 3 * (2 * cascade.size() + 1));
  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i)
    ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i)
    ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  auto fwd = lfilter(cascade, ext, true);
  std::reverse(fwd.begin(), fwd.end());
  auto bwd = lfilter(cascade, fwd, true);
  std::reverse(bwd.begin(), bwd.end());
  return {bwd.begin() + static_cast<std::ptrdiff_t>(pad), bwd.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

double noise_power_gain(const Cascade& cascade, std::size_t length) {
  std::vector<double> impulse(length, 0.0);
  impulse[0] = 1.0;
  auto h = lfilter(cascade, impulse, false);
  double e = 0.0;
  for (double v : h)
    e += v * v;
  return e;
}

} // namespace msk::filter
