#include "msk/experiment.hpp"

#include "msk/error.hpp"
#include "msk/io.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace msk::exp {

namespace pt = boost::property_tree;
using config::Method;

namespace {

constexpr int kCheckpointVersion = 1;
constexpr int kDatasetVersion = 1;

void say(const Logger& log, const std::string& line) {
  if (log)
    log(line);
}

std::vector<net::LayerSpec> architecture(Method m) {
  return m == Method::PinnDeep ? net::deep_architecture() : net::default_architecture();
}

std::string layer_text(const net::LayerSpec& s) {
  return net::to_string(s.kind) + "," + std::to_string(s.units) + "," + std::to_string(s.kernel) + "," +
         std::to_string(s.padding) + "," + std::to_string(s.stride) + "," + io::format_number(s.dropout);
}

net::LayerSpec parse_layer(const std::string& text, const std::string& where) {
  std::vector<std::string> f;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ','))
    f.push_back(item);
  if (f.size() != 6)
    throw IoError(where + ": expected kind,units,kernel,padding,stride,dropout");
  net::LayerSpec s;
  try {
    s.kind = net::parse_layer_kind(f[0]);
  } catch (const Error& e) {
    throw IoError(where + ": " + e.what());
  }
  auto whole = [&](const std::string& v) {
    const double d = io::parse_number(v, where);
    if (!(d >= 0.0) || d != std::floor(d))
      throw IoError(where + ": '" + v + "' is not a non-negative integer");
    return static_cast<std::size_t>(d);
  };
  s.units = whole(f[1]);
  s.kernel = whole(f[2]);
  s.padding = whole(f[3]);
  s.stride = whole(f[4]);
  s.dropout = io::parse_number(f[5], where);
  return s;
}

// Flattened row-major parameter dump: parameter,index,value.
void append_params(std::string& out, const std::string& name, const std::vector<double>& values) {
  for (std::size_t i = 0; i < values.size(); ++i)
    out += name + "," + std::to_string(i) + "," + io::format_number(values[i]) + "\n";
}

template <class T>
T required(const pt::ptree& tree, const std::string& key, const std::string& where) {
  auto v = tree.get_optional<std::string>(key);
  if (!v)
    throw IoError(where + ": missing field '" + key + "'");
  if constexpr (std::is_same_v<T, std::string>) {
    return *v;
  } else {
    const double d = io::parse_number(*v, where + " field '" + key + "'");
    if constexpr (std::is_integral_v<T>) {
      if (!(d >= 0.0) || d != std::floor(d))
        throw IoError(where + ": field '" + key + "' must be a non-negative integer");
      return static_cast<T>(d);
    } else {
      return d;
    }
  }
}

std::uint64_t required_seed(const pt::ptree& tree, const std::string& key, const std::string& where) {
  const auto text = required<std::string>(tree, key, where);
  std::istringstream in(text);
  std::uint64_t v = 0;
  if (!(in >> v) || !in.eof())
    throw IoError(where + ": field '" + key + "' must be an unsigned integer");
  return v;
}

pt::ptree read_ini_file(const fs::path& path) {
  pt::ptree tree;
  std::istringstream in(io::read_file(path));
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw IoError(path.string() + ": line " + std::to_string(e.line()) + ": " + e.message());
  }
  return tree;
}

const pt::ptree& section(const pt::ptree& tree, const std::string& name, const std::string& where) {
  auto s = tree.get_child_optional(name);
  if (!s)
    throw IoError(where + ": missing section [" + name + "]");
  return *s;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v)
    s += x;
  return v.empty() ? std::numeric_limits<double>::quiet_NaN() : s / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2)
    return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v)
    s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

} // namespace

bool TrainedModel::is_network() const {
  return method == Method::Pinn || method == Method::MseOnly || method == Method::PinnDeep;
}

std::vector<std::string> output_names(std::size_t muscles) {
  std::vector<std::string> names;
  for (std::size_t m = 1; m <= muscles; ++m)
    names.push_back("force_" + std::to_string(m));
  names.push_back("theta");
  return names;
}

Matrix predict_centers(const TrainedModel& model, const data::WindowSet& windows) {
  if (windows.window() != model.window)
    throw ShapeError("predict: model was trained on windows of " + std::to_string(model.window) + ", got " +
                     std::to_string(windows.window()));
  const std::size_t k = windows.outputs();
  if (model.stats.mean.size() != k)
    throw ShapeError("predict: model predicts " + std::to_string(model.stats.mean.size()) + " outputs, dataset has " +
                     std::to_string(k));
  Matrix out(windows.size(), k);
  if (model.is_network()) {
    for (std::size_t i = 0; i < windows.size(); ++i) {
      const Matrix z = model.network.predict(windows.input(i));
      for (std::size_t j = 0; j < k; ++j)
        out(i, j) = z(model.window / 2, j) * model.stats.stddev[j] + model.stats.mean[j];
    }
    return out;
  }
  const auto features = baselines::window_features(windows, model.stats);
  const Matrix z = model.method == Method::Elm ? baselines::elm_predict(model.elm, features.x)
                                               : baselines::ridge_predict(model.ridge, features.x);
  for (std::size_t i = 0; i < windows.size(); ++i)
    for (std::size_t j = 0; j < k; ++j)
      out(i, j) = z(i, j) * model.stats.stddev[j] + model.stats.mean[j];
  return out;
}

metrics::EvalReport evaluate(const TrainedModel& model, const data::WindowSet& windows, const std::string& split) {
  if (windows.empty())
    throw InvalidArgument("evaluate: no windows");
  const Matrix pred = predict_centers(model, windows);
  const std::size_t k = windows.outputs();
  std::vector<std::vector<double>> truth(k), guess(k);
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const auto c = windows.center_targets(i);
    for (std::size_t j = 0; j < k; ++j) {
      truth[j].push_back(c[j]);
      guess[j].push_back(pred(i, j));
    }
  }
  return metrics::evaluate(output_names(k - 1), truth, guess, model.seed, split);
}

// ---------------------------------------------------------------------------

void save_checkpoint(const TrainedModel& model, const fs::path& dir) {
  std::ostringstream ini;
  ini << "[checkpoint]\n"
      << "format_version = " << kCheckpointVersion << "\n"
      << "method = " << config::to_string(model.method) << "\n"
      << "seed = " << model.seed << "\n\n"
      << "[data]\n"
      << "window = " << model.window << "\n"
      << "stride = " << model.stride << "\n"
      << "decimation = " << model.decimation << "\n"
      << "outputs = " << model.stats.mean.size() << "\n\n"
      << "[norm]\n"
      << "mean = " << io::format_list(model.stats.mean) << "\n"
      << "stddev = " << io::format_list(model.stats.stddev) << "\n\n";
  std::string params = "parameter,index,value\n";
  if (model.is_network()) {
    const auto& n = model.network;
    ini << "[network]\n"
        << "input_channels = " << n.input_channels() << "\n"
        << "layers = " << n.specs().size() << "\n";
    for (std::size_t i = 0; i < n.specs().size(); ++i)
      ini << "layer" << i << " = " << layer_text(n.specs()[i]) << "\n";
    for (const auto& p : n.parameters())
      append_params(params, p.name, p.values);
  } else if (model.method == Method::Elm) {
    ini << "[elm]\n"
        << "hidden = " << model.elm.hidden() << "\n"
        << "features = " << model.elm.features() << "\n"
        << "lambda = " << io::format_number(model.elm.lambda) << "\n"
        << "seed = " << model.elm.seed << "\n";
    append_params(params, "input_weights", model.elm.input_weights.data);
    append_params(params, "hidden_bias", model.elm.hidden_bias);
    append_params(params, "output_weights", model.elm.output_weights.data);
  } else {
    ini << "[ridge]\n"
        << "features = " << model.ridge.weights.rows << "\n"
        << "lambda = " << io::format_number(model.ridge.lambda) << "\n";
    append_params(params, "weights", model.ridge.weights.data);
    append_params(params, "intercept", model.ridge.intercept);
  }
  io::write_file(dir / "model.ini", ini.str());
  io::write_file(dir / "params.csv", params);
}

TrainedModel load_checkpoint(const fs::path& dir) {
  const auto manifest = dir / "model.ini";
  const std::string where = manifest.string();
  const auto tree = read_ini_file(manifest);
  const auto& ck = section(tree, "checkpoint", where);
  const auto version = required<int>(ck, "format_version", where);
  if (version != kCheckpointVersion)
    throw IoError(where + ": unsupported format_version " + std::to_string(version));
  TrainedModel m;
  try {
    m.method = config::parse_method(required<std::string>(ck, "method", where));
  } catch (const InvalidArgument& e) {
    throw IoError(where + ": " + e.what());
  }
  m.seed = required_seed(ck, "seed", where);
  const auto& d = section(tree, "data", where);
  m.window = required<std::size_t>(d, "window", where);
  m.stride = required<std::size_t>(d, "stride", where);
  m.decimation = required<std::size_t>(d, "decimation", where);
  const auto outputs = required<std::size_t>(d, "outputs", where);
  const auto& nm = section(tree, "norm", where);
  m.stats.mean = io::parse_list(required<std::string>(nm, "mean", where), where + " [norm] mean");
  m.stats.stddev = io::parse_list(required<std::string>(nm, "stddev", where), where + " [norm] stddev");
  if (m.stats.mean.size() != outputs || m.stats.stddev.size() != outputs)
    throw IoError(where + ": [norm] lists must have " + std::to_string(outputs) + " entries");

  std::map<std::string, std::vector<double>> values;
  const auto csv = io::parse_csv(io::read_file(dir / "params.csv"), (dir / "params.csv").string());
  if (csv.header != std::vector<std::string>{"parameter", "index", "value"})
    throw IoError((dir / "params.csv").string() + ": header must be parameter,index,value");
  for (const auto& row : csv.rows) {
    auto& v = values[row[0]];
    const auto idx = static_cast<std::size_t>(io::parse_number(row[1], "params.csv index"));
    if (idx != v.size())
      throw IoError((dir / "params.csv").string() + ": parameter '" + row[0] + "' indices out of order");
    v.push_back(io::parse_number(row[2], "params.csv value of " + row[0]));
  }
  auto take = [&](const std::string& name, std::size_t expected) {
    auto it = values.find(name);
    if (it == values.end())
      throw IoError((dir / "params.csv").string() + ": missing parameter '" + name + "'");
    if (it->second.size() != expected)
      throw IoError((dir / "params.csv").string() + ": parameter '" + name + "' has " +
                    std::to_string(it->second.size()) + " values, expected " + std::to_string(expected));
    return it->second;
  };

  if (m.is_network()) {
    const auto& n = section(tree, "network", where);
    const auto channels = required<std::size_t>(n, "input_channels", where);
    const auto count = required<std::size_t>(n, "layers", where);
    std::vector<net::LayerSpec> specs;
    for (std::size_t i = 0; i < count; ++i) {
      const auto key = "layer" + std::to_string(i);
      specs.push_back(parse_layer(required<std::string>(n, key, where), where + " [network] " + key));
    }
    try {
      m.network = net::NetworkModel(specs, channels, m.window, outputs, m.seed);
    } catch (const InvalidArgument& e) {
      throw IoError(where + ": " + e.what());
    }
    for (auto& p : m.network.parameters())
      p.values = take(p.name, p.values.size());
  } else if (m.method == Method::Elm) {
    const auto& e = section(tree, "elm", where);
    const auto hidden = required<std::size_t>(e, "hidden", where);
    const auto features = required<std::size_t>(e, "features", where);
    m.elm.lambda = required<double>(e, "lambda", where);
    m.elm.seed = required_seed(e, "seed", where);
    m.elm.input_weights = Matrix(hidden, features);
    m.elm.input_weights.data = take("input_weights", hidden * features);
    m.elm.hidden_bias = take("hidden_bias", hidden);
    m.elm.output_weights = Matrix(hidden, outputs);
    m.elm.output_weights.data = take("output_weights", hidden * outputs);
  } else {
    const auto& r = section(tree, "ridge", where);
    const auto features = required<std::size_t>(r, "features", where);
    m.ridge.lambda = required<double>(r, "lambda", where);
    m.ridge.weights = Matrix(features, outputs);
    m.ridge.weights.data = take("weights", features * outputs);
    m.ridge.intercept = take("intercept", outputs);
  }
  return m;
}

// ---------------------------------------------------------------------------

sim::Dataset generate(const config::ExperimentConfig& cfg, const fs::path& out, const Logger& log) {
  cfg.validate();
  auto ds = sim::generate_dataset(cfg.simulator, cfg.dataset.trials_per_speed, cfg.dataset.speeds, cfg.dataset.seed);
  std::ostringstream manifest;
  manifest << "[manifest]\n"
           << "format_version = " << kDatasetVersion << "\n"
           << "seed = " << ds.seed << "\n"
           << "trials_per_speed = " << ds.trials_per_speed << "\n"
           << "speeds = " << io::format_list(ds.speeds) << "\n"
           << "mvc = " << io::format_list(ds.mvc) << "\n"
           << "trials = " << ds.trials.size() << "\n\n";
  for (std::size_t k = 0; k < ds.trials.size(); ++k) {
    const auto& t = ds.trials[k];
    const std::string file = "trials/" + t.id + ".csv";
    io::write_file(out / file, io::trial_csv(t));
    manifest << "[trial_" << k << "]\n"
             << "id = " << t.id << "\n"
             << "speed = " << io::format_number(t.speed) << "\n"
             << "seed = " << t.seed << "\n"
             << "file = " << file << "\n\n";
    const double r = sim::relative_residual(t, cfg.simulator.dynamics);
    std::ostringstream line;
    line << t.id << " speed=" << t.speed << " samples=" << t.samples() << " max|residual|/max|tau|=" << r
         << " (tolerance " << sim::residual_tolerance(t.dt) << ")";
    say(log, line.str());
  }
  // Simulator sections in the experiment-config syntax.
  const auto full = config::to_ini(cfg);
  const auto a = full.find("[simulator]");
  const auto b = full.find("[dataset]");
  manifest << full.substr(a, b - a);
  io::write_file(out / "dataset.ini", manifest.str());
  return ds;
}

sim::Dataset load_dataset(const fs::path& dir) {
  const auto path = dir / "dataset.ini";
  const std::string where = path.string();
  const auto tree = read_ini_file(path);
  const auto& m = section(tree, "manifest", where);
  const auto version = required<int>(m, "format_version", where);
  if (version != kDatasetVersion)
    throw IoError(where + ": unsupported format_version " + std::to_string(version));

  // Re-parse the simulator sections through the config schema for named errors.
  std::string sim_ini;
  for (const char* name : {"simulator", "dynamics"}) {
    const auto& s = section(tree, name, where);
    sim_ini += "[" + std::string(name) + "]\n";
    for (const auto& [k, v] : s)
      sim_ini += k + " = " + v.data() + "\n";
  }
  const auto cfg = config::parse(sim_ini, where);

  sim::Dataset ds;
  ds.config = cfg.simulator;
  ds.seed = required_seed(m, "seed", where);
  ds.trials_per_speed = required<std::size_t>(m, "trials_per_speed", where);
  ds.speeds = io::parse_list(required<std::string>(m, "speeds", where), where + " [manifest] speeds");
  ds.mvc = io::parse_list(required<std::string>(m, "mvc", where), where + " [manifest] mvc");
  if (ds.mvc.size() != ds.config.muscles())
    throw IoError(where + ": [manifest] mvc must list " + std::to_string(ds.config.muscles()) + " values");
  const auto count = required<std::size_t>(m, "trials", where);
  for (std::size_t k = 0; k < count; ++k) {
    const std::string name = "trial_" + std::to_string(k);
    const auto& t = section(tree, name, where);
    const auto id = required<std::string>(t, "id", where + " [" + name + "]");
    auto trial = io::parse_trial_csv(io::read_file(dir / required<std::string>(t, "file", where + " [" + name + "]")), id);
    trial.speed = required<double>(t, "speed", where + " [" + name + "]");
    trial.seed = required_seed(t, "seed", where + " [" + name + "]");
    if (trial.muscles() != ds.config.muscles())
      throw IoError(where + ": trial '" + id + "' has " + std::to_string(trial.muscles()) + " muscles, config " +
                    std::to_string(ds.config.muscles()));
    if (std::abs(trial.dt - ds.config.dynamics.dt) > 1e-9 * ds.config.dynamics.dt)
      throw IoError(where + ": trial '" + id + "' sampling interval does not match [dynamics] dt");
    trial.dt = ds.config.dynamics.dt;
    sim::check_trial(trial, ds.config.dynamics);
    ds.trials.push_back(std::move(trial));
  }
  return ds;
}

data::WindowSet windows_for(const config::ExperimentConfig& cfg, const sim::Dataset& dataset) {
  return data::make_windows(dataset.trials, cfg.dataset.window, cfg.dataset.stride, cfg.dataset.decimation);
}

// ---------------------------------------------------------------------------

RunResult run(const config::ExperimentConfig& cfg, Method method, const data::WindowSet& all,
              const data::SplitSpec& split, double fraction, std::uint64_t seed, const net::TrainObserver& observer) {
  RunResult r;
  r.split = data::split(all, split);
  r.train = data::subsample(r.split.train, fraction, seed);
  auto& m = r.model;
  m.method = method;
  m.seed = seed;
  m.window = cfg.dataset.window;
  m.stride = cfg.dataset.stride;
  m.decimation = cfg.dataset.decimation;
  m.stats = data::compute_stats(r.train);
  if (m.is_network()) {
    m.network = net::NetworkModel(architecture(method), r.train.input_channels(), r.train.window(),
                                  r.train.outputs(), seed);
    net::LossConfig loss{cfg.loss, cfg.simulator.dynamics};
    if (method == Method::MseOnly)
      loss.weights.physics = 0.0;
    r.history = net::train(m.network, r.train, m.stats, loss, cfg.run_schedule(seed), observer).history;
  } else {
    const auto f = baselines::window_features(r.train, m.stats);
    if (method == Method::Elm)
      m.elm = baselines::elm_train(f.x, f.y, cfg.model.elm_hidden, cfg.model.elm_lambda, seed);
    else
      m.ridge = baselines::ridge_train(f.x, f.y, cfg.model.ridge_lambda, cfg.model.ridge_intercept);
  }
  r.report = evaluate(m, r.split.test, data::to_string(split.kind));
  return r;
}

RunResult train(const config::ExperimentConfig& cfg, const sim::Dataset& dataset, const fs::path& out,
                const Logger& log) {
  cfg.validate();
  const auto all = windows_for(cfg, dataset);
  const auto spec = cfg.run_split(cfg.seed);
  const std::size_t every = std::max<std::size_t>(1, cfg.schedule.max_iter / 10);
  auto observer = [&](std::size_t it, const metrics::LossBreakdown& b) {
    if (it % every == 0 || it == 1) {
      std::ostringstream os;
      os << "iteration " << it << " L_F=" << b.force << " L_theta=" << b.angle << " L_P=" << b.physics
         << " L_total=" << b.total;
      say(log, os.str());
    }
  };
  auto r = run(cfg, cfg.model.method, all, spec, cfg.train_fraction_subsample, cfg.seed, observer);
  save_checkpoint(r.model, out / "checkpoint");
  io::write_file(out / "config.ini", config::to_ini(cfg));
  io::write_file(out / "split.csv", data::split_manifest(r.split, spec));
  if (r.model.is_network()) {
    io::write_file(out / "history.csv", io::history_csv(r.history));
    io::Series s{"L_total", {}, {}};
    for (std::size_t i = 0; i < r.history.size(); ++i) {
      s.x.push_back(static_cast<double>(i + 1));
      s.y.push_back(r.history[i].total);
    }
    io::write_file(out / "loss.svg", io::line_plot({"Training loss", "iteration", "L_total", true}, {s}));
  }
  std::ostringstream os;
  os << config::to_string(r.model.method) << ": " << r.train.size() << " training windows, test mean nRMSE "
     << (r.report.mean_nrmse ? *r.report.mean_nrmse : std::numeric_limits<double>::quiet_NaN());
  say(log, os.str());
  return r;
}

metrics::EvalReport eval(const TrainedModel& model, const sim::Dataset& dataset, const std::string& split_manifest,
                         const fs::path& out, const Logger& log) {
  const auto all = data::make_windows(dataset.trials, model.window, model.stride, model.decimation);
  const auto split = data::load_split_manifest(split_manifest, all);
  if (split.test.empty())
    throw IoError("split manifest lists no test windows");
  if (all.outputs() != model.stats.mean.size())
    throw IoError("checkpoint predicts " + std::to_string(model.stats.mean.size()) + " outputs, dataset has " +
                  std::to_string(all.outputs()));
  auto report = evaluate(model, split.test, "manifest");
  io::write_file(out / "report.csv", io::report_csv(report));
  say(log, io::report_table(report));

  // Overlays along the first test trial, one point per window center.
  const Matrix pred = predict_centers(model, split.test);
  const std::size_t first = split.test.ref(0).trial;
  const auto names = output_names(all.muscles());
  const double step = all.dt();
  for (std::size_t j = 0; j < names.size(); ++j) {
    io::Series truth{"ground truth", {}, {}};
    io::Series guess{"prediction", {}, {}};
    for (std::size_t i = 0; i < split.test.size(); ++i) {
      if (split.test.ref(i).trial != first)
        continue;
      const double t = static_cast<double>(split.test.ref(i).offset + model.window / 2) * step;
      truth.x.push_back(t);
      truth.y.push_back(split.test.center_targets(i)[j]);
      guess.x.push_back(t);
      guess.y.push_back(pred(i, j));
    }
    const std::string unit = j + 1 == names.size() ? "rad" : "N";
    io::write_file(out / ("overlay_" + names[j] + ".svg"),
                   io::line_plot({names[j] + " on " + all.series()[first].id, "time (s)", names[j] + " (" + unit + ")"},
                                 {truth, guess}));
  }
  return report;
}

// ---------------------------------------------------------------------------

void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i)
      fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex mu;
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < jobs; ++w)
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!first_error)
            first_error = std::current_exception();
        }
      }
    });
  for (auto& t : workers)
    t.join();
  if (first_error)
    std::rethrow_exception(first_error);
}

std::size_t sweep_datasize(const config::ExperimentConfig& cfg, const sim::Dataset& dataset, const fs::path& out,
                           std::size_t jobs, const Logger& log, std::vector<SweepRow>* rows_out) {
  cfg.validate();
  const auto all = windows_for(cfg, dataset);
  std::vector<SweepRow> rows;
  for (auto method : cfg.sweep.methods)
    for (double f : cfg.sweep.fractions)
      for (auto seed : cfg.sweep_seeds())
        rows.push_back({method, f, seed, std::numeric_limits<double>::quiet_NaN(), ""});
  std::mutex log_mu;
  parallel_for(rows.size(), jobs, [&](std::size_t i) {
    auto& row = rows[i];
    try {
      const auto r = run(cfg, row.method, all, cfg.run_split(row.seed), row.fraction, row.seed);
      row.nrmse = r.report.mean_nrmse ? *r.report.mean_nrmse : std::numeric_limits<double>::quiet_NaN();
    } catch (const Error& e) {
      row.error = e.what();
    }
    std::ostringstream os;
    os << config::to_string(row.method) << " fraction=" << row.fraction << " seed=" << row.seed << " nrmse=" << row.nrmse
       << (row.error.empty() ? "" : " FAILED: " + row.error);
    std::lock_guard lock(log_mu);
    say(log, os.str());
  });

  std::string csv = "method,fraction,seed,nrmse,error\n";
  std::size_t failures = 0;
  for (const auto& r : rows) {
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    csv += config::to_string(r.method) + "," + io::format_number(r.fraction) + "," + std::to_string(r.seed) + "," +
           io::format_number(r.nrmse) + "," + err + "\n";
    failures += r.error.empty() ? 0 : 1;
  }
  io::write_file(out / "sweep.csv", csv);

  std::string summary = "method,fraction,mean_nrmse,std_nrmse,runs,failures\n";
  std::vector<io::Series> plot;
  std::ostringstream trends;
  for (auto method : cfg.sweep.methods) {
    io::Series s{config::to_string(method), {}, {}};
    for (double f : cfg.sweep.fractions) {
      std::vector<double> ok;
      std::size_t failed = 0;
      for (const auto& r : rows)
        if (r.method == method && r.fraction == f) {
          if (r.error.empty() && std::isfinite(r.nrmse))
            ok.push_back(r.nrmse);
          else
            ++failed;
        }
      const double m = mean_of(ok);
      summary += config::to_string(method) + "," + io::format_number(f) + "," + io::format_number(m) + "," +
                 io::format_number(sample_std(ok)) + "," + std::to_string(ok.size()) + "," + std::to_string(failed) +
                 "\n";
      s.x.push_back(f);
      s.y.push_back(m);
    }
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < s.x.size(); ++i)
      if (std::isfinite(s.y[i])) {
        xs.push_back(s.x[i]);
        ys.push_back(s.y[i]);
      }
    double rho = std::numeric_limits<double>::quiet_NaN();
    try {
      if (xs.size() >= 2)
        rho = metrics::spearman(xs, ys);
    } catch (const NumericError&) {
    }
    trends << "# spearman(fraction, mean_nrmse) " << config::to_string(method) << "=" << io::format_number(rho) << "\n";
    plot.push_back(std::move(s));
  }
  io::write_file(out / "summary.csv", trends.str() + summary);
  io::write_file(out / "sweep.svg",
                 io::line_plot({"Test nRMSE vs training fraction", "training fraction", "mean nRMSE"}, plot));
  io::write_file(out / "config.ini", config::to_ini(cfg));
  say(log, trends.str() + summary);
  if (rows_out)
    *rows_out = rows;
  return failures;
}

std::size_t ablate(const config::ExperimentConfig& cfg, const sim::Dataset& dataset, const fs::path& out,
                   std::size_t jobs, const Logger& log, std::vector<AblationRow>* rows_out) {
  cfg.validate();
  const auto all = windows_for(cfg, dataset);
  std::vector<data::SplitKind> kinds{cfg.split.kind};
  const auto other = cfg.split.kind == data::SplitKind::ByTrial ? data::SplitKind::Intrasession
                                                                 : data::SplitKind::ByTrial;
  kinds.push_back(other);

  struct Task {
    std::size_t row;
    bool physics;
  };
  std::vector<AblationRow> rows;
  std::vector<Task> tasks;
  for (auto kind : kinds)
    for (auto seed : cfg.sweep_seeds()) {
      tasks.push_back({rows.size(), true});
      tasks.push_back({rows.size(), false});
      rows.push_back({kind, seed, std::numeric_limits<double>::quiet_NaN(),
                      std::numeric_limits<double>::quiet_NaN(), ""});
    }
  std::vector<std::string> errors(tasks.size());
  std::mutex mu;
  parallel_for(tasks.size(), jobs, [&](std::size_t i) {
    const auto& task = tasks[i];
    auto& row = rows[task.row];
    auto spec = cfg.split;
    spec.kind = row.split;
    spec.seed = row.seed;
    const auto method = task.physics ? Method::Pinn : Method::MseOnly;
    try {
      const auto r = run(cfg, method, all, spec, cfg.train_fraction_subsample, row.seed);
      const fs::path dir = out / data::to_string(row.split) / ("seed_" + std::to_string(row.seed)) /
                           config::to_string(method);
      io::write_file(dir / "report.csv", io::report_csv(r.report));
      const double v = r.report.mean_nrmse ? *r.report.mean_nrmse : std::numeric_limits<double>::quiet_NaN();
      std::lock_guard lock(mu);
      (task.physics ? row.pinn : row.mse_only) = v;
    } catch (const Error& e) {
      std::lock_guard lock(mu);
      errors[i] = config::to_string(method) + ": " + e.what();
    }
  });
  for (std::size_t i = 0; i < tasks.size(); ++i)
    if (!errors[i].empty()) {
      auto& e = rows[tasks[i].row].error;
      e += (e.empty() ? "" : " | ") + errors[i];
    }

  std::string csv = "split,seed,physics_informed_nrmse,mse_only_nrmse,delta,error\n";
  std::size_t failures = 0;
  std::ostringstream summary;
  for (auto kind : kinds) {
    std::vector<double> deltas;
    for (const auto& r : rows) {
      if (r.split != kind)
        continue;
      std::string err = r.error;
      std::replace(err.begin(), err.end(), ',', ';');
      std::replace(err.begin(), err.end(), '\n', ' ');
      csv += data::to_string(kind) + "," + std::to_string(r.seed) + "," + io::format_number(r.pinn) + "," +
             io::format_number(r.mse_only) + "," + io::format_number(r.delta()) + "," + err + "\n";
      if (r.error.empty())
        deltas.push_back(r.delta());
      else
        ++failures;
    }
    summary << data::to_string(kind) << ": paired mean delta (physics-informed - mse-only) nRMSE = "
            << io::format_number(mean_of(deltas)) << " over " << deltas.size() << " seeds\n";
  }
  io::write_file(out / "ablation.csv", csv);
  io::write_file(out / "config.ini", config::to_ini(cfg));
  say(log, summary.str());
  if (rows_out)
    *rows_out = rows;
  return failures;
}

} // namespace msk::exp
