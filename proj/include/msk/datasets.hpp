#pragma once

// Sliding windows over trials, target normalization and train/test splits.

#include "msk/matrix.hpp"
#include "msk/simulator.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace msk::data {

/// One trial resampled onto the learning grid.
struct TrialSeries {
  std::string id;
  double speed = 1.0;
  Matrix inputs;   // [T x (1+N)]: normalized position in trial, then EMG envelopes
  Matrix targets;  // [T x (N+1)]: muscle forces (N), joint angle (rad)
};

struct WindowRef {
  std::size_t trial = 0;
  std::size_t offset = 0;
  bool operator==(const WindowRef&) const = default;
};

/// Windows referencing shared, read-only trial series.
class WindowSet {
public:
  WindowSet() = default;
  WindowSet(std::shared_ptr<const std::vector<TrialSeries>> series, std::vector<WindowRef> refs, std::size_t window,
            double dt);

  std::size_t size() const { return refs_.size(); }
  bool empty() const { return refs_.empty(); }
  std::size_t window() const { return window_; }
  double dt() const { return dt_; }
  std::size_t input_channels() const;
  std::size_t outputs() const;
  std::size_t muscles() const { return outputs() - 1; }

  const WindowRef& ref(std::size_t i) const { return refs_.at(i); }
  const std::vector<WindowRef>& refs() const { return refs_; }
  const std::vector<TrialSeries>& series() const { return *series_; }
  std::size_t trial_count() const { return series_ ? series_->size() : 0; }

  /// Network input, channel-major [(1+N) x W].
  Matrix input(std::size_t i) const;
  /// Physical targets [W x (N+1)].
  Matrix targets(std::size_t i) const;
  /// Targets of the window's center sample.
  std::vector<double> center_targets(std::size_t i) const;

  WindowSet subset(const std::vector<std::size_t>& indices) const;
  /// Same trial series, different windows.
  WindowSet with_refs(std::vector<WindowRef> refs) const;

private:
  std::shared_ptr<const std::vector<TrialSeries>> series_;
  std::vector<WindowRef> refs_;
  std::size_t window_ = 0;
  double dt_ = 0.0;
};

/// Keep every `decimation`-th sample of a trial.
TrialSeries to_series(const sim::Trial& trial, std::size_t decimation);

/// Windows of length `window` every `stride` samples, never straddling trials.
WindowSet make_windows(const std::vector<sim::Trial>& trials, std::size_t window, std::size_t stride,
                       std::size_t decimation = 1);

struct NormStats {
  std::vector<double> mean;
  std::vector<double> stddev;
  bool operator==(const NormStats&) const = default;
};

/// Per-target mean / population std over every sample of every window.
NormStats compute_stats(const WindowSet& windows);

/// z-score each column of [W x (N+1)] targets.
Matrix normalize(const Matrix& targets, const NormStats& stats);
Matrix denormalize(const Matrix& targets, const NormStats& stats);

enum class SplitKind { ByTrial, Intrasession };

std::string to_string(SplitKind kind);
SplitKind parse_split_kind(const std::string& text);

struct SplitSpec {
  SplitKind kind = SplitKind::ByTrial;
  double train_fraction = 0.8;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Split {
  WindowSet train;
  WindowSet test;
};

/// by-trial: hold out whole trials. intrasession: pool windows from every
/// trial and split them by a seeded shuffle.
Split split(const WindowSet& all, const SplitSpec& spec);

/// The first ceil(fraction * size) windows of a seeded shuffle (at least one).
WindowSet subsample(const WindowSet& windows, double fraction, std::uint64_t seed);

/// Split manifest: one `side,trial_id,offset` row per window.
std::string split_manifest(const Split& s, const SplitSpec& spec);
/// Rebuild a split from a manifest against windows over the same trials.
Split load_split_manifest(const std::string& text, const WindowSet& all);

} // namespace msk::data
