#include "msk/datasets.hpp"
#include "msk/error.hpp"
#include "testkit/testkit.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

using namespace msk;

namespace {

// Deterministic fake trial with N muscles; values depend on (seed, sample).
sim::Trial fake_trial(const std::string& id, std::size_t samples, std::size_t muscles, std::uint64_t seed,
                      double shift = 0.0) {
  sim::Trial t;
  t.id = id;
  t.dt = 1e-3;
  t.time.resize(samples);
  t.emg_env = testkit::random_matrix(samples, muscles, seed, 0.0, 1.0);
  t.emg_raw = Matrix(samples, muscles);
  t.forces = testkit::random_matrix(samples, muscles, seed + 1, 0.0 + shift, 100.0 + shift);
  t.theta = testkit::random_values(samples, seed + 2, -1.0 + shift, 1.0 + shift);
  t.tau.assign(samples, 0.0);
  for (std::size_t i = 0; i < samples; ++i)
    t.time[i] = static_cast<double>(i) * t.dt;
  return t;
}

std::vector<sim::Trial> fake_trials(std::size_t count, std::size_t samples) {
  std::vector<sim::Trial> v;
  for (std::size_t k = 0; k < count; ++k)
    v.push_back(fake_trial("t" + std::to_string(k), samples, 3, 100 * k + 1));
  return v;
}

std::set<std::pair<std::size_t, std::size_t>> keys(const data::WindowSet& w) {
  std::set<std::pair<std::size_t, std::size_t>> s;
  for (const auto& r : w.refs())
    s.insert({r.trial, r.offset});
  return s;
}

} // namespace

TEST(Windows, Counts) {
  EXPECT_EQ(data::make_windows(fake_trials(2, 100), 100, 10).size(), 2u);
  EXPECT_EQ(data::make_windows(fake_trials(1, 100), 100, 1).size(), 1u);
  EXPECT_EQ(data::make_windows(fake_trials(1, 150), 100, 25).size(), 3u);
}

TEST(Windows, NeverStraddleTrials) {
  std::vector<sim::Trial> trials{fake_trial("a", 130, 2, 1), fake_trial("b", 177, 2, 2), fake_trial("c", 100, 2, 3)};
  const auto w = data::make_windows(trials, 50, 7);
  for (const auto& r : w.refs())
    EXPECT_LE(r.offset + 50, w.series()[r.trial].inputs.rows);
  EXPECT_EQ(w.size(), (130 - 50) / 7 + 1 + (177 - 50) / 7 + 1 + (100 - 50) / 7 + 1);
}

TEST(Windows, ShortTrialIsRejected) {
  EXPECT_THROW(data::make_windows(fake_trials(1, 99), 100, 10), InvalidArgument);
}

TEST(Windows, InputLayoutAndTimeChannel) {
  const auto trials = fake_trials(1, 40);
  const auto w = data::make_windows(trials, 10, 5);
  const Matrix in = w.input(2);  // offset 10
  ASSERT_EQ(in.rows, 4u);
  ASSERT_EQ(in.cols, 10u);
  for (std::size_t t = 0; t < 10; ++t) {
    EXPECT_DOUBLE_EQ(in(0, t), static_cast<double>(10 + t) / 39.0);
    for (std::size_t m = 0; m < 3; ++m)
      EXPECT_EQ(in(1 + m, t), trials[0].emg_env(10 + t, m));
  }
  const auto c = w.center_targets(2);
  EXPECT_EQ(c[3], trials[0].theta[15]);
}

TEST(Windows, DecimationKeepsEveryKthSample) {
  const auto trials = fake_trials(1, 1000);
  const auto s = data::to_series(trials[0], 25);
  ASSERT_EQ(s.targets.rows, 40u);
  for (std::size_t i = 0; i < s.targets.rows; ++i)
    EXPECT_EQ(s.targets(i, 3), trials[0].theta[25 * i]);
  EXPECT_EQ(s.inputs(0, 0), 0.0);
  EXPECT_EQ(s.inputs(39, 0), 1.0);
  EXPECT_DOUBLE_EQ(data::make_windows(trials, 20, 5, 25).dt(), 0.025);
}

TEST(Normalization, RoundTrip) {
  const auto w = data::make_windows(fake_trials(3, 120), 20, 10);
  const auto stats = data::compute_stats(w);
  for (std::size_t i = 0; i < w.size(); ++i) {
    const Matrix t = w.targets(i);
    EXPECT_LT(testkit::max_abs_diff(data::denormalize(data::normalize(t, stats), stats).data, t.data), 1e-10);
  }
}

TEST(Normalization, TrainingTargetsAreStandardized) {
  const auto all = data::make_windows(fake_trials(5, 200), 25, 25);  // non-overlapping windows
  const auto s = data::split(all, {data::SplitKind::ByTrial, 0.8, 3});
  const auto stats = data::compute_stats(s.train);
  std::vector<double> sum(4, 0.0), sq(4, 0.0);
  double n = 0;
  for (std::size_t i = 0; i < s.train.size(); ++i) {
    const Matrix z = data::normalize(s.train.targets(i), stats);
    for (std::size_t r = 0; r < z.rows; ++r, ++n)
      for (std::size_t c = 0; c < 4; ++c) {
        sum[c] += z(r, c);
        sq[c] += z(r, c) * z(r, c);
      }
  }
  for (std::size_t c = 0; c < 4; ++c) {
    EXPECT_LT(std::abs(sum[c] / n), 1e-10);
    EXPECT_NEAR(std::sqrt(sq[c] / n), 1.0, 1e-9);
  }
}

TEST(Normalization, StatsComeFromTheGivenWindowsOnly) {
  // The test trial is shifted; statistics over the training side must not see it.
  std::vector<sim::Trial> trials{fake_trial("a", 100, 2, 1), fake_trial("b", 100, 2, 2),
                                 fake_trial("shifted", 100, 2, 3, 500.0)};
  const auto all = data::make_windows(trials, 100, 100);
  const auto train = all.subset({0, 1});
  const auto test = all.subset({2});
  const auto stats = data::compute_stats(train);
  EXPECT_EQ(stats, data::compute_stats(data::make_windows({trials[0], trials[1]}, 100, 100)));
  const Matrix z = data::normalize(test.targets(0), stats);
  double mean = 0.0;
  for (std::size_t r = 0; r < z.rows; ++r)
    mean += z(r, 0) / static_cast<double>(z.rows);
  EXPECT_GT(mean, 1.0);
}

TEST(Normalization, ConstantTargetIsAnError) {
  auto t = fake_trial("a", 50, 2, 1);
  std::fill(t.theta.begin(), t.theta.end(), 0.2);
  EXPECT_THROW(data::compute_stats(data::make_windows({t}, 10, 10)), NumericError);
}

TEST(Split, ByTrialHoldsOutWholeTrials) {
  const auto all = data::make_windows(fake_trials(5, 120), 20, 10);
  const auto s = data::split(all, {data::SplitKind::ByTrial, 0.8, 7});
  std::set<std::size_t> train_trials, test_trials;
  for (const auto& r : s.train.refs())
    train_trials.insert(r.trial);
  for (const auto& r : s.test.refs())
    test_trials.insert(r.trial);
  EXPECT_EQ(train_trials.size(), 4u);
  EXPECT_EQ(test_trials.size(), 1u);
  for (auto t : test_trials)
    EXPECT_FALSE(train_trials.count(t));
  EXPECT_EQ(s.train.size() + s.test.size(), all.size());
}

TEST(Split, IntrasessionFractions) {
  const auto all = data::make_windows(fake_trials(4, 34), 10, 1);  // 25 windows per trial
  ASSERT_EQ(all.size(), 100u);
  const auto s = data::split(all, {data::SplitKind::Intrasession, 0.8, 8});
  EXPECT_EQ(s.train.size(), 80u);
  EXPECT_EQ(s.test.size(), 20u);
  const auto a = keys(s.train), b = keys(s.test);
  for (const auto& k : b)
    EXPECT_FALSE(a.count(k));
  std::set<std::size_t> trials;
  for (const auto& r : s.test.refs())
    trials.insert(r.trial);
  EXPECT_GT(trials.size(), 1u);  // pooled across conditions
}

TEST(Split, SeededAndValidated) {
  const auto all = data::make_windows(fake_trials(5, 60), 20, 10);
  const data::SplitSpec spec{data::SplitKind::ByTrial, 0.8, 9};
  EXPECT_EQ(data::split(all, spec).test.refs(), data::split(all, spec).test.refs());
  EXPECT_THROW(data::split(all, {data::SplitKind::ByTrial, 1.0, 9}), InvalidArgument);
  EXPECT_THROW(data::split(data::make_windows(fake_trials(1, 60), 20, 10), spec), InvalidArgument);
}

TEST(Subsample, FractionAndNesting) {
  const auto all = data::make_windows(fake_trials(3, 200), 20, 5);
  const auto half = data::subsample(all, 0.5, 10);
  EXPECT_EQ(half.size(), (all.size() + 1) / 2);
  const auto tenth = data::subsample(all, 0.1, 10);
  const auto hk = keys(half);
  for (const auto& k : keys(tenth))
    EXPECT_TRUE(hk.count(k));  // prefixes of one shuffle
  EXPECT_EQ(data::subsample(all, 1.0, 10).refs(), all.refs());
  EXPECT_EQ(data::subsample(all, 1e-9, 10).size(), 1u);
  EXPECT_THROW(data::subsample(all, 0.0, 10), InvalidArgument);
}

TEST(Manifest, RoundTrip) {
  const auto all = data::make_windows(fake_trials(5, 80), 20, 10);
  const data::SplitSpec spec{data::SplitKind::Intrasession, 0.8, 11};
  const auto s = data::split(all, spec);
  const auto back = data::load_split_manifest(data::split_manifest(s, spec), all);
  EXPECT_EQ(back.train.refs(), s.train.refs());
  EXPECT_EQ(back.test.refs(), s.test.refs());
}

TEST(Manifest, CorruptRowsNameTheProblem) {
  const auto all = data::make_windows(fake_trials(2, 40), 20, 10);
  auto expect_io = [&](const std::string& text, const std::string& needle) {
    try {
      data::load_split_manifest(text, all);
      FAIL() << "accepted: " << text;
    } catch (const IoError& e) {
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
  };
  expect_io("side,trial_id,offset\ntrain,t0,0\ntest,nope,0\n", "unknown trial_id");
  expect_io("side,trial_id,offset\ntrain,t0,0\ntest,t1,35\n", "exceeds");
  expect_io("side,trial_id,offset\ntrain,t0,0\nboth,t1,0\n", "side");
  expect_io("train,t0,0\n", "header");
}
