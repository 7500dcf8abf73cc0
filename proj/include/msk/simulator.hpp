#pragma once

// Synthetic musculoskeletal trials: excitation -> activation -> force ->
// joint motion (RK4), plus raw surface EMG and its conditioned envelope.

#include "msk/matrix.hpp"
#include "msk/physics.hpp"

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace msk::sim {

enum class ExcitationKind { SinusoidBurst, SmoothedNoise };

std::string to_string(ExcitationKind kind);
ExcitationKind parse_excitation_kind(const std::string& text);

struct ExcitationSpec {
  ExcitationKind kind = ExcitationKind::SinusoidBurst;
  double amplitude = 0.08;       // peak excitation, in [0, 1]
  double base_frequency = 0.8;   // Hz at speed 1
  double speed = 1.0;            // multiplies the burst frequency
  double cocontraction = 0.15;   // tonic fraction of amplitude, in [0, 1]

  void validate() const;
};

struct SimConfig {
  physics::DynamicsParams dynamics;
  std::vector<double> max_force{200.0, 200.0, 200.0, 200.0, 200.0};  // N, per muscle
  double activation_tau = 0.05;  // s
  ExcitationSpec excitation;
  double duration = 8.0;         // s
  double rate = 1000.0;          // Hz; dynamics.dt must equal 1 / rate
  double noise_low = 30.0;       // Hz, EMG source band
  double noise_high = 300.0;     // Hz
  double snr_db = 20.0;          // +inf disables measurement noise

  std::size_t muscles() const { return dynamics.muscles(); }
  std::size_t samples() const;
  void validate() const;
  /// Human-readable key=value dump, used in error messages.
  std::string describe() const;
};

/// Wrist-like preset: five muscles.
SimConfig wrist_preset();
/// Knee-like preset: one flexor / extensor pair.
SimConfig knee_preset();

struct Trial {
  std::string id;
  double dt = 0.0;
  double speed = 1.0;
  std::uint64_t seed = 0;
  std::vector<double> time;  // s
  Matrix excitation;         // [T x N] in [0, 1]; empty when loaded from CSV
  Matrix activation;         // [T x N] in [0, 1]; empty when loaded from CSV
  Matrix emg_raw;            // [T x N]
  Matrix emg_env;            // [T x N] in [0, 1]
  Matrix forces;             // [T x N], N
  std::vector<double> theta; // rad
  std::vector<double> tau;   // N m

  std::size_t samples() const { return time.size(); }
  std::size_t muscles() const { return forces.cols; }
};

/// Excitation pattern [T x N]; agonists (r > 0) and antagonists (r < 0) are phase-opposed.
Matrix gen_excitation(const ExcitationSpec& spec, std::size_t samples, double dt,
                      const std::vector<double>& moment_arms, std::uint64_t seed);

/// First-order activation lag, exact exponential step, a_0 = u_0.
Matrix activation_dynamics(const Matrix& excitation, double tau_act, double dt);

struct Kinematics {
  Matrix forces;
  std::vector<double> theta;
  std::vector<double> omega;
  std::vector<double> tau;
};

/// Forces F = a * F_max, torque by moment arms, joint motion by RK4 from rest.
Kinematics integrate_trial(const Matrix& activation, const SimConfig& config);

/// Raw EMG: activation-modulated band-limited noise plus white measurement
/// noise at `snr_db` below each channel's RMS.
Matrix synth_emg(const Matrix& activation, double rate, double noise_low, double noise_high, double snr_db,
                 std::uint64_t seed);

/// Band-pass 20-450 Hz, full-wave rectification, 6 Hz low-pass; all zero-phase.
Matrix emg_envelope_unnormalized(const Matrix& emg_raw, double rate);

/// Envelope divided by the per-muscle MVC reference and clipped to [0, 1].
Matrix emg_pipeline(const Matrix& emg_raw, double rate, const std::vector<double>& mvc_reference);

/// Per-muscle MVC reference from a full-excitation calibration recording.
std::vector<double> calibrate_mvc(const SimConfig& config, std::uint64_t seed);

/// Largest interior |EOM residual| of a trial relative to max |tau|.
double relative_residual(const Trial& trial, const physics::DynamicsParams& params);

/// Residual tolerance: 1e-3 at dt = 1 ms, scaling with dt^2 above that.
double residual_tolerance(double dt);

/// Throws InvariantError naming the first violated trial invariant.
void check_trial(const Trial& trial, const physics::DynamicsParams& params);

Trial generate_trial(const SimConfig& config, double speed, std::uint64_t seed, const std::vector<double>& mvc,
                     std::string id);

struct Dataset {
  SimConfig config;
  std::uint64_t seed = 0;
  std::vector<double> speeds;
  std::size_t trials_per_speed = 0;
  std::vector<double> mvc;
  std::vector<Trial> trials;
};

/// `trials_per_speed` trials for each entry of `speeds`.
Dataset generate_dataset(const SimConfig& config, std::size_t trials_per_speed, const std::vector<double>& speeds,
                         std::uint64_t seed);

} // namespace msk::sim
