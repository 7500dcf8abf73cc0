#pragma once

// Experiment driver behind the CLI: dataset generation, training, evaluation,
// data-size sweeps and the physics-loss ablation. Every output file is a pure
// function of (configuration, seed).

#include "msk/baselines.hpp"
#include "msk/config.hpp"
#include "msk/datasets.hpp"
#include "msk/metrics.hpp"
#include "msk/network.hpp"
#include "msk/simulator.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace msk::exp {

namespace fs = std::filesystem;

using Logger = std::function<void(const std::string&)>;

/// Fitted model of any method plus everything needed to apply it to new windows.
struct TrainedModel {
  config::Method method = config::Method::Pinn;
  std::uint64_t seed = 0;
  std::size_t window = 0;
  std::size_t stride = 0;
  std::size_t decimation = 1;
  data::NormStats stats;
  net::NetworkModel network;  // CNN methods
  baselines::ElmModel elm;
  baselines::RidgeModel ridge;

  bool is_network() const;
};

/// Output names: force_1..force_N, theta.
std::vector<std::string> output_names(std::size_t muscles);

/// Physical-unit predictions at each window's center sample, [S x (N+1)].
Matrix predict_centers(const TrainedModel& model, const data::WindowSet& windows);

/// Metrics over the center samples of every window.
metrics::EvalReport evaluate(const TrainedModel& model, const data::WindowSet& windows, const std::string& split);

void save_checkpoint(const TrainedModel& model, const fs::path& dir);
/// Throws IoError naming the missing or malformed field.
TrainedModel load_checkpoint(const fs::path& dir);

// --- datasets -----------------------------------------------------------------

/// Writes trials/<id>.csv and dataset.ini; logs one residual audit line per trial.
sim::Dataset generate(const config::ExperimentConfig& cfg, const fs::path& out, const Logger& log = {});
/// Reads a directory written by generate(); trials are re-audited.
sim::Dataset load_dataset(const fs::path& dir);
/// Windows over all trials on the learning grid.
data::WindowSet windows_for(const config::ExperimentConfig& cfg, const sim::Dataset& dataset);

// --- single runs ----------------------------------------------------------------

struct RunResult {
  TrainedModel model;
  data::Split split;
  data::WindowSet train;  // after subsampling
  std::vector<metrics::LossBreakdown> history;
  metrics::EvalReport report;
};

/// Split, subsample the training side to `fraction`, fit `method` with seed
/// `seed` and evaluate on the test side.
RunResult run(const config::ExperimentConfig& cfg, config::Method method, const data::WindowSet& all,
              const data::SplitSpec& split, double fraction, std::uint64_t seed,
              const net::TrainObserver& observer = {});

/// `train` command: checkpoint/, history.csv, loss.svg, split.csv, config.ini.
RunResult train(const config::ExperimentConfig& cfg, const sim::Dataset& dataset, const fs::path& out,
                const Logger& log = {});

/// `eval` command: report.csv and one overlay SVG per output.
metrics::EvalReport eval(const TrainedModel& model, const sim::Dataset& dataset, const std::string& split_manifest,
                         const fs::path& out, const Logger& log = {});

// --- suites ---------------------------------------------------------------------

struct SweepRow {
  config::Method method;
  double fraction = 0.0;
  std::uint64_t seed = 0;
  double nrmse = 0.0;  // NaN when the run failed
  std::string error;
};

/// Training-set-size sweep. Writes sweep.csv, summary.csv, sweep.svg. Failed
/// runs are recorded and the sweep continues; the return value counts them.
std::size_t sweep_datasize(const config::ExperimentConfig& cfg, const sim::Dataset& dataset, const fs::path& out,
                           std::size_t jobs, const Logger& log = {}, std::vector<SweepRow>* rows = nullptr);

struct AblationRow {
  data::SplitKind split;
  std::uint64_t seed = 0;
  double pinn = 0.0;
  double mse_only = 0.0;
  double delta() const { return pinn - mse_only; }
  std::string error;
};

/// Physics-informed vs MSE-only with identical seeds, on the configured split
/// and on the intrasession split. Writes ablation.csv and per-arm reports.
std::size_t ablate(const config::ExperimentConfig& cfg, const sim::Dataset& dataset, const fs::path& out,
                   std::size_t jobs, const Logger& log = {}, std::vector<AblationRow>* rows = nullptr);

/// Runs fn(0..n-1) on up to `jobs` threads; the first exception is rethrown
/// after all workers finish.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn);

} // namespace msk::exp
