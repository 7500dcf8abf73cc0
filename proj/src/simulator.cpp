#include "msk/simulator.hpp"

#include "msk/error.hpp"
#include "msk/filter.hpp"
#include "msk/io.hpp"
#include "msk/random.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace msk::sim {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kInstabilityLimit = 1e3;  // rad
constexpr double kCalibrationSeconds = 2.0;

} // namespace

std::string to_string(ExcitationKind kind) {
  return kind == ExcitationKind::SinusoidBurst ? "sinusoid-burst" : "smoothed-noise";
}

ExcitationKind parse_excitation_kind(const std::string& text) {
  if (text == "sinusoid-burst")
    return ExcitationKind::SinusoidBurst;
  if (text == "smoothed-noise")
    return ExcitationKind::SmoothedNoise;
  throw InvalidArgument("unknown excitation kind '" + text + "' (expected sinusoid-burst or smoothed-noise)");
}

void ExcitationSpec::validate() const {
  if (!(amplitude >= 0.0 && amplitude <= 1.0))
    throw InvalidArgument("excitation: amplitude must lie in [0, 1]");
  if (!(base_frequency > 0.0 && std::isfinite(base_frequency)))
    throw InvalidArgument("excitation: base_frequency must be > 0");
  if (!(speed > 0.0 && std::isfinite(speed)))
    throw InvalidArgument("excitation: speed must be > 0");
  if (!(cocontraction >= 0.0 && cocontraction <= 1.0))
    throw InvalidArgument("excitation: cocontraction must lie in [0, 1]");
}

std::size_t SimConfig::samples() const {
  return static_cast<std::size_t>(std::llround(duration * rate));
}

void SimConfig::validate() const {
  dynamics.validate();
  excitation.validate();
  if (max_force.size() != muscles())
    throw InvalidArgument("simulator: max_force lists " + std::to_string(max_force.size()) + " muscles, moment_arms " +
                          std::to_string(muscles()));
  for (double f : max_force)
    if (!(f > 0.0 && std::isfinite(f)))
      throw InvalidArgument("simulator: max_force entries must be > 0");
  if (!(activation_tau > 0.0))
    throw InvalidArgument("simulator: activation_tau must be > 0");
  if (!(rate > 0.0 && duration > 0.0))
    throw InvalidArgument("simulator: rate and duration must be > 0");
  if (std::abs(dynamics.dt * rate - 1.0) > 1e-9)
    throw InvalidArgument("simulator: dynamics dt must equal 1 / rate");
  if (samples() < 3)
    throw InvalidArgument("simulator: duration * rate must give at least 3 samples");
}

std::string SimConfig::describe() const {
  const auto n = [](double v) { return io::format_number(v); };
  const auto list = [](const std::vector<double>& v) { return io::format_list(v); };
  std::ostringstream os;
  os << "inertia=" << n(dynamics.inertia) << " damping=" << n(dynamics.damping)
     << " gravity_coeff=" << n(dynamics.gravity_coeff) << " dt=" << n(dynamics.dt)
     << " moment_arms=" << list(dynamics.moment_arms) << " max_force=" << list(max_force)
     << " activation_tau=" << n(activation_tau) << " excitation=" << to_string(excitation.kind)
     << " amplitude=" << n(excitation.amplitude) << " base_frequency=" << n(excitation.base_frequency)
     << " speed=" << n(excitation.speed) << " cocontraction=" << n(excitation.cocontraction)
     << " duration=" << n(duration) << " rate=" << n(rate) << " noise_band=" << n(noise_low) << "-"
     << n(noise_high) << " snr_db=" << n(snr_db);
  return os.str();
}

SimConfig wrist_preset() { return SimConfig{}; }

SimConfig knee_preset() {
  SimConfig c;
  c.dynamics.moment_arms = {0.04, -0.04};
  c.max_force = {200.0, 200.0};
  return c;
}

// ---------------------------------------------------------------------------

Matrix gen_excitation(const ExcitationSpec& spec, std::size_t samples, double dt,
                      const std::vector<double>& moment_arms, std::uint64_t seed) {
  spec.validate();
  const std::size_t n = moment_arms.size();
  if (n < 2 || n > 5)
    throw InvalidArgument("gen_excitation: supports 2 to 5 muscles, got " + std::to_string(n));
  const bool has_agonist = std::any_of(moment_arms.begin(), moment_arms.end(), [](double r) { return r > 0; });
  const bool has_antagonist = std::any_of(moment_arms.begin(), moment_arms.end(), [](double r) { return r < 0; });
  if (!has_agonist || !has_antagonist)
    throw InvalidArgument("gen_excitation: needs at least one muscle of each moment-arm sign");

  ad::Rng rng(derive_seed(seed, {0x65786369ULL}));
  const double phase0 = uniform(rng, 0.0, kTwoPi);
  const double mod_freq = uniform(rng, 0.1, 0.25);
  const double mod_phase = uniform(rng, 0.0, kTwoPi);
  const double mod_depth = uniform(rng, 0.15, 0.35);
  std::vector<double> gain(n);
  std::vector<double> lag(n);
  for (std::size_t m = 0; m < n; ++m) {
    gain[m] = uniform(rng, 0.75, 1.0);
    lag[m] = uniform(rng, -0.3, 0.3);
  }
  // Smoothed-noise drive: a few random low-frequency sinusoids.
  constexpr std::size_t kComponents = 6;
  std::vector<double> comp_freq(kComponents);
  std::vector<double> comp_amp(kComponents);
  std::vector<double> comp_phase(kComponents);
  double amp_total = 0.0;
  for (std::size_t k = 0; k < kComponents; ++k) {
    comp_freq[k] = spec.base_frequency * uniform(rng, 0.3, 1.5);
    comp_amp[k] = uniform(rng, 0.2, 1.0);
    comp_phase[k] = uniform(rng, 0.0, kTwoPi);
    amp_total += comp_amp[k];
  }

  const double freq = spec.base_frequency * spec.speed;
  Matrix u(samples, n);
  for (std::size_t i = 0; i < samples; ++i) {
    const double t = static_cast<double>(i) * dt;
    const double envelope = 1.0 + mod_depth * std::sin(kTwoPi * mod_freq * t + mod_phase);
    for (std::size_t m = 0; m < n; ++m) {
      const double sign = moment_arms[m] > 0.0 ? 1.0 : -1.0;
      double drive = 0.0;
      if (spec.kind == ExcitationKind::SinusoidBurst) {
        drive = std::sin(kTwoPi * freq * t + phase0 + lag[m]);
      } else {
        for (std::size_t k = 0; k < kComponents; ++k)
          drive += comp_amp[k] * std::sin(kTwoPi * comp_freq[k] * spec.speed * t + comp_phase[k] + lag[m]);
        drive /= amp_total;
      }
      const double half = 0.5 * (1.0 + sign * drive);
      const double burst = half * half;
      const double value = spec.amplitude * gain[m] * envelope * (spec.cocontraction + (1.0 - spec.cocontraction) * burst);
      u(i, m) = std::clamp(value, 0.0, 1.0);
    }
  }
  return u;
}

Matrix activation_dynamics(const Matrix& excitation, double tau_act, double dt) {
  if (!(tau_act > dt))
    throw InvalidArgument("activation_dynamics: time constant must exceed dt");
  Matrix a(excitation.rows, excitation.cols);
  if (excitation.rows == 0)
    return a;
  const double decay = std::exp(-dt / tau_act);
  for (std::size_t m = 0; m < excitation.cols; ++m)
    a(0, m) = excitation(0, m);
  for (std::size_t i = 0; i + 1 < excitation.rows; ++i)
    for (std::size_t m = 0; m < excitation.cols; ++m) {
      const double u = excitation(i, m);
      a(i + 1, m) = std::clamp(u + (a(i, m) - u) * decay, 0.0, 1.0);
    }
  return a;
}

Kinematics integrate_trial(const Matrix& activation, const SimConfig& config) {
  config.validate();
  const auto& p = config.dynamics;
  const std::size_t n = config.muscles();
  if (activation.cols != n)
    throw ShapeError("integrate_trial: activation has " + std::to_string(activation.cols) + " columns, expected " +
                     std::to_string(n));
  const std::size_t steps = activation.rows;
  Kinematics k;
  k.forces = Matrix(steps, n);
  k.tau.assign(steps, 0.0);
  for (std::size_t i = 0; i < steps; ++i) {
    double tau = 0.0;
    for (std::size_t m = 0; m < n; ++m) {
      const double f = activation(i, m) * config.max_force[m];
      k.forces(i, m) = f;
      tau += p.moment_arms[m] * f;
    }
    k.tau[i] = tau;
  }

  k.theta.assign(steps, 0.0);
  k.omega.assign(steps, 0.0);
  physics::JointState s{0.0, 0.0};
  const double h = p.dt;
  for (std::size_t i = 0; i + 1 < steps; ++i) {
    // Torque is linear between samples.
    const double t0 = k.tau[i];
    const double t1 = k.tau[i + 1];
    const double th = 0.5 * (t0 + t1);
    const auto acc = [&](physics::JointState js, double tau) { return physics::acceleration(p, js, tau); };
    const double k1t = s.omega;
    const double k1w = acc(s, t0);
    const double k2t = s.omega + 0.5 * h * k1w;
    const double k2w = acc({s.theta + 0.5 * h * k1t, s.omega + 0.5 * h * k1w}, th);
    const double k3t = s.omega + 0.5 * h * k2w;
    const double k3w = acc({s.theta + 0.5 * h * k2t, s.omega + 0.5 * h * k2w}, th);
    const double k4t = s.omega + h * k3w;
    const double k4w = acc({s.theta + h * k3t, s.omega + h * k3w}, t1);
    s.theta += h / 6.0 * (k1t + 2.0 * k2t + 2.0 * k3t + k4t);
    s.omega += h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
    if (!std::isfinite(s.theta) || std::abs(s.theta) > kInstabilityLimit)
      throw NumericError("integrate_trial: unstable integration at step " + std::to_string(i + 1) +
                         " (theta=" + std::to_string(s.theta) + "); config: " + config.describe());
    k.theta[i + 1] = s.theta;
    k.omega[i + 1] = s.omega;
  }
  return k;
}

Matrix synth_emg(const Matrix& activation, double rate, double noise_low, double noise_high, double snr_db,
                 std::uint64_t seed) {
  if (!(noise_low > 0.0 && noise_low < noise_high))
    throw InvalidArgument("synth_emg: noise band must satisfy 0 < low < high");
  if (rate < 2.0 * noise_high)
    throw InvalidArgument("synth_emg: rate " + std::to_string(rate) + " Hz violates Nyquist for a " +
                          std::to_string(noise_high) + " Hz noise band");
  const auto band = filter::butter_bandpass(noise_low, noise_high, rate);
  const double unit = 1.0 / std::sqrt(filter::noise_power_gain(band));
  const double meas_sigma = std::isinf(snr_db) && snr_db > 0 ? 0.0 : std::pow(10.0, -snr_db / 20.0);
  const std::size_t warmup = static_cast<std::size_t>(rate);  // settle the shaping filter

  Matrix out(activation.rows, activation.cols);
  for (std::size_t m = 0; m < activation.cols; ++m) {
    ad::Rng source(derive_seed(seed, {0x656d67ULL, m, 0}));
    ad::Rng meas(derive_seed(seed, {0x656d67ULL, m, 1}));
    std::vector<double> white(warmup + activation.rows);
    for (auto& v : white)
      v = standard_normal(source);
    auto shaped = filter::lfilter(band, white, false);
    double power = 0.0;
    for (std::size_t i = 0; i < activation.rows; ++i) {
      out(i, m) = activation(i, m) * shaped[warmup + i] * unit;
      power += out(i, m) * out(i, m);
    }
    // Measurement noise relative to this channel's RMS over the recording.
    const double sigma = meas_sigma * std::sqrt(power / static_cast<double>(activation.rows));
    if (sigma > 0.0)
      for (std::size_t i = 0; i < activation.rows; ++i)
        out(i, m) += sigma * standard_normal(meas);
  }
  return out;
}

Matrix emg_envelope_unnormalized(const Matrix& emg_raw, double rate) {
  if (!(rate > 900.0))
    throw InvalidArgument("emg_pipeline: rate " + std::to_string(rate) + " Hz too low for a 450 Hz band edge");
  const auto band = filter::butter_bandpass(20.0, 450.0, rate);
  const filter::Cascade smooth{filter::butter_lowpass(6.0, rate)};
  Matrix env(emg_raw.rows, emg_raw.cols);
  for (std::size_t m = 0; m < emg_raw.cols; ++m) {
    auto x = filter::filtfilt(band, emg_raw.column(m));
    for (auto& v : x)
      v = std::abs(v);
    env.set_column(m, filter::filtfilt(smooth, x));
  }
  return env;
}

Matrix emg_pipeline(const Matrix& emg_raw, double rate, const std::vector<double>& mvc_reference) {
  if (mvc_reference.size() != emg_raw.cols)
    throw ShapeError("emg_pipeline: " + std::to_string(mvc_reference.size()) + " MVC references for " +
                     std::to_string(emg_raw.cols) + " channels");
  for (double r : mvc_reference)
    if (!(r > 0.0 && std::isfinite(r)))
      throw InvalidArgument("emg_pipeline: MVC reference must be > 0");
  Matrix env = emg_envelope_unnormalized(emg_raw, rate);
  for (std::size_t i = 0; i < env.rows; ++i)
    for (std::size_t m = 0; m < env.cols; ++m)
      env(i, m) = std::clamp(env(i, m) / mvc_reference[m], 0.0, 1.0);
  return env;
}

std::vector<double> calibrate_mvc(const SimConfig& config, std::uint64_t seed) {
  config.validate();
  const auto samples = static_cast<std::size_t>(std::llround(kCalibrationSeconds * config.rate));
  Matrix full(samples, config.muscles(), 1.0);
  auto raw = synth_emg(full, config.rate, config.noise_low, config.noise_high, config.snr_db,
                       derive_seed(seed, {0x6d7663ULL}));
  auto env = emg_envelope_unnormalized(raw, config.rate);
  std::vector<double> mvc(config.muscles(), 0.0);
  for (std::size_t m = 0; m < env.cols; ++m)
    for (std::size_t i = 0; i < env.rows; ++i)
      mvc[m] = std::max(mvc[m], env(i, m));
  return mvc;
}

double residual_tolerance(double dt) {
  const double ratio = dt / 1e-3;
  return 1e-3 * std::max(1.0, ratio * ratio);
}

double relative_residual(const Trial& trial, const physics::DynamicsParams& params) {
  auto p = params;
  p.dt = trial.dt;
  const std::size_t t = trial.samples();
  auto theta = ad::Tensor::constant({t}, trial.theta);
  auto forces = ad::Tensor::constant({t, trial.muscles()}, trial.forces.data);
  auto rho = physics::eom_residual(theta, forces, p);
  double max_rho = 0.0;
  for (double v : rho.values())
    max_rho = std::max(max_rho, std::abs(v));
  double max_tau = 0.0;
  for (double v : trial.tau)
    max_tau = std::max(max_tau, std::abs(v));
  if (max_tau == 0.0)
    return max_rho == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return max_rho / max_tau;
}

void check_trial(const Trial& trial, const physics::DynamicsParams& params) {
  const std::string where = "trial '" + trial.id + "': ";
  const std::size_t t = trial.samples();
  if (t < 3)
    throw InvariantError(where + "fewer than 3 samples");
  if (trial.theta.size() != t || trial.tau.size() != t || trial.forces.rows != t || trial.emg_env.rows != t ||
      trial.emg_raw.rows != t)
    throw InvariantError(where + "series lengths disagree");
  if (trial.forces.cols != params.muscles())
    throw InvariantError(where + "muscle count disagrees with moment arms");
  for (double f : trial.forces.data)
    if (!(std::isfinite(f) && f >= 0.0))
      throw InvariantError(where + "muscle forces must be finite and non-negative");
  for (std::size_t i = 0; i < t; ++i)
    if (!std::isfinite(trial.theta[i]) || !std::isfinite(trial.tau[i]))
      throw InvariantError(where + "non-finite angle or torque at sample " + std::to_string(i));
  for (double e : trial.emg_env.data)
    if (!(e >= 0.0 && e <= 1.0))
      throw InvariantError(where + "EMG envelope outside [0, 1]");
  const double rel = relative_residual(trial, params);
  if (!(rel < residual_tolerance(trial.dt))) {
    std::ostringstream os;
    os << where << "EOM residual " << rel << " x max|tau| exceeds tolerance " << residual_tolerance(trial.dt);
    throw InvariantError(os.str());
  }
}

Trial generate_trial(const SimConfig& config, double speed, std::uint64_t seed, const std::vector<double>& mvc,
                     std::string id) {
  config.validate();
  Trial trial;
  trial.id = std::move(id);
  trial.dt = config.dynamics.dt;
  trial.speed = speed;
  trial.seed = seed;
  const std::size_t t = config.samples();
  trial.time.resize(t);
  for (std::size_t i = 0; i < t; ++i)
    trial.time[i] = static_cast<double>(i) * trial.dt;

  auto spec = config.excitation;
  spec.speed = speed;
  trial.excitation = gen_excitation(spec, t, trial.dt, config.dynamics.moment_arms, derive_seed(seed, {1}));
  trial.activation = activation_dynamics(trial.excitation, config.activation_tau, trial.dt);
  auto kin = integrate_trial(trial.activation, config);
  trial.forces = std::move(kin.forces);
  trial.theta = std::move(kin.theta);
  trial.tau = std::move(kin.tau);
  trial.emg_raw = synth_emg(trial.activation, config.rate, config.noise_low, config.noise_high, config.snr_db,
                            derive_seed(seed, {2}));
  trial.emg_env = emg_pipeline(trial.emg_raw, config.rate, mvc);
  check_trial(trial, config.dynamics);
  return trial;
}

Dataset generate_dataset(const SimConfig& config, std::size_t trials_per_speed, const std::vector<double>& speeds,
                         std::uint64_t seed) {
  config.validate();
  if (trials_per_speed < 1)
    throw InvalidArgument("generate_dataset: need at least one trial per speed");
  if (speeds.empty())
    throw InvalidArgument("generate_dataset: speed list is empty");
  Dataset ds;
  ds.config = config;
  ds.seed = seed;
  ds.speeds = speeds;
  ds.trials_per_speed = trials_per_speed;
  ds.mvc = calibrate_mvc(config, derive_seed(seed, {0x63616cULL}));
  for (std::size_t s = 0; s < speeds.size(); ++s)
    for (std::size_t k = 0; k < trials_per_speed; ++k) {
      std::ostringstream id;
      id << "trial_s" << s << "_" << k;
      ds.trials.push_back(generate_trial(config, speeds[s], derive_seed(seed, {0x747269ULL, s, k}), ds.mvc, id.str()));
    }
  return ds;
}

} // namespace msk::sim
