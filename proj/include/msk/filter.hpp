#pragma once

// Second-order Butterworth sections (bilinear transform with pre-warping) and
// zero-phase forward-backward filtering.

#include <span>
#include <vector>

namespace msk::filter {

struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;  // a0 normalized to 1

  double dc_gain() const { return (b0 + b1 + b2) / (1.0 + a1 + a2); }
};

Biquad butter_lowpass(double cutoff_hz, double rate_hz);
Biquad butter_highpass(double cutoff_hz, double rate_hz);

/// Sections applied in sequence.
using Cascade = std::vector<Biquad>;

/// Second-order high-pass at `low_hz` followed by second-order low-pass at `high_hz`.
Cascade butter_bandpass(double low_hz, double high_hz, double rate_hz);

/// |H(e^{jw})| of the cascade at `freq_hz`.
double magnitude(const Cascade& cascade, double freq_hz, double rate_hz);

/// Causal filtering. With `steady_start` each section starts in the steady
/// state for a constant input equal to its first sample.
std::vector<double> lfilter(const Cascade& cascade, std::span<const double> x, bool steady_start = false);

/// Zero-phase forward-backward filtering with odd-extension padding at both ends.
std::vector<double> filtfilt(const Cascade& cascade, std::span<const double> x);

/// Sum of squared impulse-response samples (white-noise power gain).
double noise_power_gain(const Cascade& cascade, std::size_t length = 1 << 16);

} // namespace msk::filter
