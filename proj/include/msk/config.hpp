#pragma once

// Experiment configuration: INI file with one section per concern. Unknown
// sections or keys are rejected so typos cannot silently fall back to defaults.

#include "msk/datasets.hpp"
#include "msk/metrics.hpp"
#include "msk/network.hpp"
#include "msk/simulator.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace msk::config {

enum class Method { Pinn, MseOnly, PinnDeep, Elm, Ridge };

/// Physics-loss weight of the presets. The residual is in N*m and its
/// curvature grows like (inertia / dt^2)^2, so weights much above this
/// destabilise SGDM at the default learning rate.
inline constexpr double kDefaultPhysicsWeight = 1e-5;

std::string to_string(Method m);
Method parse_method(const std::string& text);

struct DatasetConfig {
  std::uint64_t seed = 42;
  std::size_t trials_per_speed = 3;
  std::vector<double> speeds{0.5, 0.75, 1.0, 1.25};
  std::size_t decimation = 25;  // simulator samples per learning-grid step (40 Hz at 1 kHz)
  std::size_t window = 100;
  std::size_t stride = 10;
};

struct ModelConfig {
  Method method = Method::Pinn;
  std::size_t elm_hidden = 512;
  double elm_lambda = 1e-3;
  double ridge_lambda = 1e-3;
  bool ridge_intercept = true;
};

struct SweepConfig {
  std::vector<double> fractions{0.1, 0.25, 0.5, 0.75, 1.0};
  std::vector<Method> methods{Method::Pinn, Method::MseOnly, Method::Elm, Method::Ridge};
  std::size_t seeds = 5;  // run seeds seed, seed+1, ...
};

struct ExperimentConfig {
  sim::SimConfig simulator;
  DatasetConfig dataset;
  ModelConfig model;
  metrics::LossWeights loss;
  net::Schedule schedule;  // schedule.seed is overwritten by `seed`
  data::SplitSpec split;   // split.seed is overwritten by `seed`
  double train_fraction_subsample = 1.0;
  SweepConfig sweep;
  std::uint64_t seed = 1;
  std::string output_dir = "runs";

  /// Throws InvalidArgument naming the first bad field.
  void validate() const;
  /// The schedule / split with the run seed applied.
  net::Schedule run_schedule(std::uint64_t run_seed) const;
  data::SplitSpec run_split(std::uint64_t run_seed) const;
  std::vector<std::uint64_t> sweep_seeds() const;
};

/// Wrist-like defaults ("wrist") or the two-muscle knee-like plant ("knee").
ExperimentConfig preset(const std::string& name);

/// Parse INI text on top of the defaults (optionally `[experiment] preset`).
/// Throws IoError naming the offending section/key.
ExperimentConfig parse(const std::string& ini_text, const std::string& source = "config");
ExperimentConfig load(const std::string& path);

/// Fully resolved configuration as INI; parse(to_ini(c)) reproduces c.
std::string to_ini(const ExperimentConfig& c);

} // namespace msk::config
