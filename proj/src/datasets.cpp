#include "msk/datasets.hpp"

#include "msk/error.hpp"
#include "msk/random.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace msk::data {

WindowSet::WindowSet(std::shared_ptr<const std::vector<TrialSeries>> series, std::vector<WindowRef> refs,
                     std::size_t window, double dt)
    : series_(std::move(series)), refs_(std::move(refs)), window_(window), dt_(dt) {}

std::size_t WindowSet::input_channels() const {
  return series_ && !series_->empty() ? series_->front().inputs.cols : 0;
}

std::size_t WindowSet::outputs() const { return series_ && !series_->empty() ? series_->front().targets.cols : 0; }

Matrix WindowSet::input(std::size_t i) const {
  const auto& r = refs_.at(i);
  const auto& s = (*series_)[r.trial];
  Matrix m(s.inputs.cols, window_);
  for (std::size_t c = 0; c < s.inputs.cols; ++c)
    for (std::size_t t = 0; t < window_; ++t)
      m(c, t) = s.inputs(r.offset + t, c);
  return m;
}

Matrix WindowSet::targets(std::size_t i) const {
  const auto& r = refs_.at(i);
  const auto& s = (*series_)[r.trial];
  Matrix m(window_, s.targets.cols);
  for (std::size_t t = 0; t < window_; ++t)
    for (std::size_t c = 0; c < s.targets.cols; ++c)
      m(t, c) = s.targets(r.offset + t, c);
  return m;
}

std::vector<double> WindowSet::center_targets(std::size_t i) const {
  const auto& r = refs_.at(i);
  const auto& s = (*series_)[r.trial];
  auto row = s.targets.row(r.offset + window_ / 2);
  return {row.begin(), row.end()};
}

WindowSet WindowSet::with_refs(std::vector<WindowRef> refs) const {
  return WindowSet(series_, std::move(refs), window_, dt_);
}

WindowSet WindowSet::subset(const std::vector<std::size_t>& indices) const {
  std::vector<WindowRef> refs;
  refs.reserve(indices.size());
  for (auto i : indices)
    refs.push_back(refs_.at(i));
  return WindowSet(series_, std::move(refs), window_, dt_);
}

TrialSeries to_series(const sim::Trial& trial, std::size_t decimation) {
  if (decimation < 1)
    throw InvalidArgument("decimation must be >= 1");
  const std::size_t n = trial.muscles();
  const std::size_t t_full = trial.samples();
  const std::size_t t = (t_full + decimation - 1) / decimation;
  TrialSeries s;
  s.id = trial.id;
  s.speed = trial.speed;
  s.inputs = Matrix(t, 1 + n);
  s.targets = Matrix(t, n + 1);
  for (std::size_t i = 0; i < t; ++i) {
    const std::size_t src = i * decimation;
    s.inputs(i, 0) = t > 1 ? static_cast<double>(i) / static_cast<double>(t - 1) : 0.0;
    for (std::size_t m = 0; m < n; ++m) {
      s.inputs(i, 1 + m) = trial.emg_env(src, m);
      s.targets(i, m) = trial.forces(src, m);
    }
    s.targets(i, n) = trial.theta[src];
  }
  return s;
}

WindowSet make_windows(const std::vector<sim::Trial>& trials, std::size_t window, std::size_t stride,
                       std::size_t decimation) {
  if (window < 3)
    throw InvalidArgument("make_windows: window length must be >= 3");
  if (stride < 1)
    throw InvalidArgument("make_windows: stride must be >= 1");
  if (trials.empty())
    throw InvalidArgument("make_windows: no trials");
  auto series = std::make_shared<std::vector<TrialSeries>>();
  std::vector<WindowRef> refs;
  double dt = 0.0;
  for (std::size_t k = 0; k < trials.size(); ++k) {
    const auto& trial = trials[k];
    if (k == 0)
      dt = trial.dt * static_cast<double>(decimation);
    else if (std::abs(trial.dt * static_cast<double>(decimation) - dt) > 1e-12 * dt)
      throw InvalidArgument("make_windows: trials have different sampling intervals");
    if (k > 0 && trial.muscles() != trials.front().muscles())
      throw InvalidArgument("make_windows: trials have different muscle counts");
    series->push_back(to_series(trial, decimation));
    const std::size_t t = series->back().inputs.rows;
    if (t < window)
      throw InvalidArgument("make_windows: trial '" + trial.id + "' has " + std::to_string(t) +
                            " samples, shorter than window " + std::to_string(window));
    for (std::size_t off = 0; off + window <= t; off += stride)
      refs.push_back({k, off});
  }
  return WindowSet(std::move(series), std::move(refs), window, dt);
}

NormStats compute_stats(const WindowSet& windows) {
  if (windows.empty())
    throw InvalidArgument("compute_stats: no windows");
  const std::size_t k = windows.outputs();
  NormStats st{std::vector<double>(k, 0.0), std::vector<double>(k, 0.0)};
  double count = 0.0;
  for (const auto& r : windows.refs()) {
    const auto& s = windows.series()[r.trial];
    for (std::size_t t = 0; t < windows.window(); ++t)
      for (std::size_t c = 0; c < k; ++c)
        st.mean[c] += s.targets(r.offset + t, c);
    count += static_cast<double>(windows.window());
  }
  for (auto& m : st.mean)
    m /= count;
  for (const auto& r : windows.refs()) {
    const auto& s = windows.series()[r.trial];
    for (std::size_t t = 0; t < windows.window(); ++t)
      for (std::size_t c = 0; c < k; ++c) {
        const double d = s.targets(r.offset + t, c) - st.mean[c];
        st.stddev[c] += d * d;
      }
  }
  for (std::size_t c = 0; c < k; ++c) {
    st.stddev[c] = std::sqrt(st.stddev[c] / count);
    // Roundoff in the mean leaves ~1e-17 spread on a constant column.
    if (!(st.stddev[c] > 1e-12 * std::max(1.0, std::abs(st.mean[c]))))
      throw NumericError("compute_stats: target " + std::to_string(c) + " has zero variance");
  }
  return st;
}

namespace {

void check_stats(const Matrix& targets, const NormStats& stats) {
  if (stats.mean.size() != targets.cols || stats.stddev.size() != targets.cols)
    throw ShapeError("normalize: stats cover " + std::to_string(stats.mean.size()) + " targets, matrix has " +
                     std::to_string(targets.cols));
  for (std::size_t c = 0; c < stats.stddev.size(); ++c)
    if (!(stats.stddev[c] > 0.0))
      throw NumericError("normalize: target " + std::to_string(c) + " has zero variance");
}

} // namespace

Matrix normalize(const Matrix& targets, const NormStats& stats) {
  check_stats(targets, stats);
  Matrix out = targets;
  for (std::size_t r = 0; r < out.rows; ++r)
    for (std::size_t c = 0; c < out.cols; ++c)
      out(r, c) = (out(r, c) - stats.mean[c]) / stats.stddev[c];
  return out;
}

Matrix denormalize(const Matrix& targets, const NormStats& stats) {
  check_stats(targets, stats);
  Matrix out = targets;
  for (std::size_t r = 0; r < out.rows; ++r)
    for (std::size_t c = 0; c < out.cols; ++c)
      out(r, c) = out(r, c) * stats.stddev[c] + stats.mean[c];
  return out;
}

std::string to_string(SplitKind kind) { return kind == SplitKind::ByTrial ? "by-trial" : "intrasession"; }

SplitKind parse_split_kind(const std::string& text) {
  if (text == "by-trial")
    return SplitKind::ByTrial;
  if (text == "intrasession")
    return SplitKind::Intrasession;
  throw InvalidArgument("unknown split kind '" + text + "' (expected by-trial or intrasession)");
}

void SplitSpec::validate() const {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw InvalidArgument("split: train_fraction must lie in (0, 1)");
}

Split split(const WindowSet& all, const SplitSpec& spec) {
  spec.validate();
  ad::Rng rng(derive_seed(spec.seed, {0x73706cULL}));
  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> test_idx;
  if (spec.kind == SplitKind::ByTrial) {
    const std::size_t n = all.trial_count();
    if (n < 2)
      throw InvalidArgument("split: by-trial split needs at least 2 trials, got " + std::to_string(n));
    const auto n_test = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround((1.0 - spec.train_fraction) * static_cast<double>(n))));
    if (n_test >= n)
      throw InvalidArgument("split: by-trial split leaves no training trials");
    auto order = shuffled_indices(n, rng);
    std::vector<bool> is_test(n, false);
    for (std::size_t i = 0; i < n_test; ++i)
      is_test[order[i]] = true;
    for (std::size_t i = 0; i < all.size(); ++i)
      (is_test[all.ref(i).trial] ? test_idx : train_idx).push_back(i);
  } else {
    const std::size_t n = all.size();
    if (n < 5)
      throw InvalidArgument("split: intrasession split needs at least 5 windows, got " + std::to_string(n));
    const auto n_train = static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(n)));
    auto order = shuffled_indices(n, rng);
    train_idx.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    test_idx.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(test_idx.begin(), test_idx.end());
  }
  if (train_idx.empty() || test_idx.empty())
    throw InvalidArgument("split: one side of the split is empty");
  return {all.subset(train_idx), all.subset(test_idx)};
}

WindowSet subsample(const WindowSet& windows, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw InvalidArgument("subsample: fraction must lie in (0, 1]");
  if (fraction == 1.0)
    return windows;
  ad::Rng rng(derive_seed(seed, {0x737562ULL}));
  auto order = shuffled_indices(windows.size(), rng);
  const auto keep = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(windows.size()))));
  order.resize(std::min(keep, order.size()));
  std::sort(order.begin(), order.end());
  return windows.subset(order);
}

std::string split_manifest(const Split& s, const SplitSpec& spec) {
  std::ostringstream os;
  os << "# kind=" << to_string(spec.kind) << "\n";
  os << "# train_fraction=" << spec.train_fraction << "\n";
  os << "# seed=" << spec.seed << "\n";
  os << "# window=" << s.train.window() << "\n";
  os << "side,trial_id,offset\n";
  for (const auto* side : {&s.train, &s.test})
    for (const auto& r : side->refs())
      os << (side == &s.train ? "train" : "test") << ',' << side->series()[r.trial].id << ',' << r.offset << '\n';
  return os.str();
}

Split load_split_manifest(const std::string& text, const WindowSet& all) {
  std::map<std::string, std::size_t> trial_index;
  for (std::size_t k = 0; k < all.trial_count(); ++k)
    trial_index[all.series()[k].id] = k;
  std::vector<WindowRef> train;
  std::vector<WindowRef> test;
  std::istringstream is(text);
  std::string line;
  bool header = false;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#')
      continue;
    if (!header) {
      if (line != "side,trial_id,offset")
        throw IoError("split manifest: bad header '" + line + "'");
      header = true;
      continue;
    }
    std::istringstream row(line);
    std::string side, id, offset;
    if (!std::getline(row, side, ',') || !std::getline(row, id, ',') || !std::getline(row, offset))
      throw IoError("split manifest: malformed row at line " + std::to_string(line_no));
    auto it = trial_index.find(id);
    if (it == trial_index.end())
      throw IoError("split manifest: unknown trial_id '" + id + "' at line " + std::to_string(line_no));
    WindowRef r{it->second, 0};
    try {
      r.offset = std::stoull(offset);
    } catch (const std::exception&) {
      throw IoError("split manifest: bad offset at line " + std::to_string(line_no));
    }
    if (r.offset + all.window() > all.series()[r.trial].inputs.rows)
      throw IoError("split manifest: window at line " + std::to_string(line_no) + " exceeds its trial");
    if (side == "train")
      train.push_back(r);
    else if (side == "test")
      test.push_back(r);
    else
      throw IoError("split manifest: side must be train or test at line " + std::to_string(line_no));
  }
  if (!header)
    throw IoError("split manifest: missing header");
  if (train.empty() || test.empty())
    throw IoError("split manifest: one side of the split is empty");
  return {all.with_refs(std::move(train)), all.with_refs(std::move(test))};
}

} // namespace msk::data
