#include "msk/config.hpp"

#include "msk/error.hpp"
#include "msk/io.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

namespace msk::config {

namespace pt = boost::property_tree;

std::string to_string(Method m) {
  switch (m) {
  case Method::Pinn:
    return "physics-informed";
  case Method::MseOnly:
    return "mse-only";
  case Method::PinnDeep:
    return "physics-informed-deep";
  case Method::Elm:
    return "elm";
  case Method::Ridge:
    return "ridge";
  }
  return "?";
}

Method parse_method(const std::string& text) {
  for (auto m : {Method::Pinn, Method::MseOnly, Method::PinnDeep, Method::Elm, Method::Ridge})
    if (text == to_string(m))
      return m;
  throw InvalidArgument("unknown method '" + text +
                        "' (expected physics-informed, mse-only, physics-informed-deep, elm or ridge)");
}

void ExperimentConfig::validate() const {
  simulator.validate();
  loss.validate();
  split.validate();
  if (dataset.trials_per_speed == 0 || dataset.speeds.empty())
    throw InvalidArgument("dataset: need at least one speed and one trial per speed");
  for (double s : dataset.speeds)
    if (!(s > 0.0 && std::isfinite(s)))
      throw InvalidArgument("dataset: speeds must be > 0");
  if (dataset.decimation == 0 || dataset.stride == 0)
    throw InvalidArgument("dataset: decimation and stride must be >= 1");
  if (dataset.window < 3)
    throw InvalidArgument("dataset: window must be >= 3");
  if ((simulator.samples() - 1) / dataset.decimation + 1 < dataset.window)
    throw InvalidArgument("dataset: trials of " + std::to_string(simulator.samples()) + " samples decimated by " +
                          std::to_string(dataset.decimation) + " are shorter than the window of " +
                          std::to_string(dataset.window));
  if (model.elm_hidden == 0)
    throw InvalidArgument("model: elm_hidden must be >= 1");
  if (!(model.elm_lambda >= 0.0))
    throw InvalidArgument("model: elm_lambda must be >= 0");
  if (!(model.ridge_lambda > 0.0))
    throw InvalidArgument("model: ridge_lambda must be > 0");
  if (schedule.max_iter == 0 || schedule.batch == 0)
    throw InvalidArgument("schedule: max_iter and batch must be >= 1");
  if (!(schedule.learning_rate > 0.0) || !(schedule.momentum >= 0.0 && schedule.momentum < 1.0))
    throw InvalidArgument("schedule: learning_rate must be > 0 and momentum in [0, 1)");
  if (!(train_fraction_subsample > 0.0 && train_fraction_subsample <= 1.0))
    throw InvalidArgument("split: subsample must lie in (0, 1]");
  for (double f : sweep.fractions)
    if (!(f > 0.0 && f <= 1.0))
      throw InvalidArgument("sweep: fractions must lie in (0, 1]");
  if (sweep.fractions.empty() || sweep.methods.empty() || sweep.seeds == 0)
    throw InvalidArgument("sweep: fractions, methods and seeds must be non-empty");
}

net::Schedule ExperimentConfig::run_schedule(std::uint64_t run_seed) const {
  auto s = schedule;
  s.seed = run_seed;
  return s;
}

data::SplitSpec ExperimentConfig::run_split(std::uint64_t run_seed) const {
  auto s = split;
  s.seed = run_seed;
  return s;
}

std::vector<std::uint64_t> ExperimentConfig::sweep_seeds() const {
  std::vector<std::uint64_t> out;
  for (std::size_t i = 0; i < sweep.seeds; ++i)
    out.push_back(seed + i);
  return out;
}

ExperimentConfig preset(const std::string& name) {
  ExperimentConfig c;
  if (name == "wrist") {
    c.simulator = sim::wrist_preset();
  } else if (name == "knee") {
    c.simulator = sim::knee_preset();
  } else {
    throw InvalidArgument("unknown preset '" + name + "' (expected wrist or knee)");
  }
  c.loss.physics = kDefaultPhysicsWeight;
  return c;
}

namespace {

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

double num(const std::string& v, const std::string& where) { return io::parse_number(v, where); }

std::size_t count(const std::string& v, const std::string& where) {
  const double d = num(v, where);
  if (!(d >= 0.0) || d != std::floor(d) || d > 1e15)
    throw IoError(where + ": '" + v + "' is not a non-negative integer");
  return static_cast<std::size_t>(d);
}

std::uint64_t seed_value(const std::string& v, const std::string& where) {
  std::uint64_t out = 0;
  std::istringstream in(v);
  if (!(in >> out) || !in.eof())
    throw IoError(where + ": '" + v + "' is not an unsigned integer");
  return out;
}

bool boolean(const std::string& v, const std::string& where) {
  if (v == "true" || v == "1" || v == "yes")
    return true;
  if (v == "false" || v == "0" || v == "no")
    return false;
  throw IoError(where + ": '" + v + "' is not a boolean");
}

template <class F>
Setter wrap(F f) {
  return [f](ExperimentConfig& c, const std::string& v, const std::string& where) {
    try {
      f(c, v, where);
    } catch (const IoError&) {
      throw;
    } catch (const Error& e) {
      throw IoError(where + ": " + e.what());
    }
  };
}

const std::map<std::string, std::map<std::string, Setter>>& schema() {
  static const std::map<std::string, std::map<std::string, Setter>> s = {
      {"experiment",
       {
           {"preset", wrap([](auto&, auto&, auto&) {})},  // applied before everything else
           {"seed", wrap([](ExperimentConfig& c, auto& v, auto& w) { c.seed = seed_value(v, w); })},
           {"output_dir", wrap([](ExperimentConfig& c, auto& v, auto&) { c.output_dir = v; })},
       }},
      {"simulator",
       {
           {"max_force", wrap([](ExperimentConfig& c, auto& v, auto& w) { c.simulator.max_force = io::parse_list(v, w); })},
           {"activation_tau", wrap([](ExperimentConfig& c, auto& v, auto& w) { c.simulator.activation_tau = num(v, w); })},
           {"duration", wrap([](ExperimentConfig& c, auto& v, auto& w) { c.simulator.duration = num(v, w); })},
           {"rate", wrap([](ExperimentConfig& c, auto& v, auto& w) { c.simulator.rate = num(v, w); })},
           {"noise_low", wrap([](ExperimentConfig& c, auto& v, auto& w) { c.simulator.noise_low = num(v, w); })},
           {"noise_high", wrap([](ExperimentConfig& c, auto& v, auto& w) { c.simulator.noise_high = num(v, w); })},
           {"snr_db", wrap([](ExperimentConfig& c, auto& v, auto& w) { c.simulator.snr_db = num(v, w); })},
           {"excitation", wrap([](ExperimentConfig& c, auto& v, auto&) {
              c.simulator.excitation.kind = sim::parse_excitation_kind(v);
            })},
           {"amplitude", wrap([](ExperimentConfig& c, auto& v, auto& w) { c.simulator.excitation.amplitude = num(v, w); })},
           {"base_frequency",
            wrap([](ExperimentConfig& c, auto& v, auto& w) { c.simulator.excitation.base_frequency = num(v, w); })},
           {"cocontraction",
            wrap([](ExperimentConfig& c, auto& v, auto& w) { c.simulator.excitation.cocontraction = num(v, w); })},
       }},
      {"dynamics",
       {
           {"inertia", wrap([](ExperimentConfig& c, auto& v, auto& w) { c.simulator.dynamics.inertia = num(v, w); })},
           {"damping", wrap([](ExperimentConfig& c, auto& v, auto& w) { c.simulator.dynamics.damping = num(v, w); })},
           {"gravity_coeff",
            wrap([](ExperimentConfig& c, auto& v, auto& w) { c.simulator.dynamics.gravity_coeff = num(v, w); })},
           {"moment_arms",
            wrap([](ExperimentConfig& c, auto& v, auto& w) { c.simulator.dynamics.moment_arms = io::parse_list(v, w); })},
           {"dt", wrap([](ExperimentConfig& c, auto& v, auto& w) { c.simulator.dynamics.dt = num(v, w); })},
       }},
      {"dataset",
       {
           {"seed", wrap([](ExperimentConfig& c, auto& v, auto& w) { c.dataset.seed = seed_value(v, w); })},
           {"trials_per_speed",
            wrap([](ExperimentConfig& c, auto& v, auto& w) { c.dataset.trials_per_speed = count(v, w); })},
           {"speeds", wrap([](ExperimentConfig& c, auto& v, auto& w) { c.dataset.speeds = io::parse_list(v, w); })},
           {"decimation", wrap([](ExperimentConfig& c, auto& v, auto& w) { c.dataset.decimation = count(v, w); })},
           {"window", wrap([](ExperimentConfig& c, auto& v, auto& w) { c.dataset.window = count(v, w); })},
           {"stride", wrap([](ExperimentConfig& c, auto& v, auto& w) { c.dataset.stride = count(v, w); })},
       }},
      {"model",
       {
           {"method", wrap([](ExperimentConfig& c, auto& v, auto&) { c.model.method = parse_method(v); })},
           {"elm_hidden", wrap([](ExperimentConfig& c, auto& v, auto& w) { c.model.elm_hidden = count(v, w); })},
           {"elm_lambda", wrap([](ExperimentConfig& c, auto& v, auto& w) { c.model.elm_lambda = num(v, w); })},
           {"ridge_lambda", wrap([](ExperimentConfig& c, auto& v, auto& w) { c.model.ridge_lambda = num(v, w); })},
           {"ridge_intercept",
            wrap([](ExperimentConfig& c, auto& v, auto& w) { c.model.ridge_intercept = boolean(v, w); })},
       }},
      {"loss",
       {
           {"force", wrap([](ExperimentConfig& c, auto& v, auto& w) { c.loss.force = num(v, w); })},
           {"angle", wrap([](ExperimentConfig& c, auto& v, auto& w) { c.loss.angle = num(v, w); })},
           {"physics", wrap([](ExperimentConfig& c, auto& v, auto& w) { c.loss.physics = num(v, w); })},
       }},
      {"schedule",
       {
           {"max_iter", wrap([](ExperimentConfig& c, auto& v, auto& w) { c.schedule.max_iter = count(v, w); })},
           {"learning_rate", wrap([](ExperimentConfig& c, auto& v, auto& w) { c.schedule.learning_rate = num(v, w); })},
           {"momentum", wrap([](ExperimentConfig& c, auto& v, auto& w) { c.schedule.momentum = num(v, w); })},
           {"batch", wrap([](ExperimentConfig& c, auto& v, auto& w) { c.schedule.batch = count(v, w); })},
       }},
      {"split",
       {
           {"kind", wrap([](ExperimentConfig& c, auto& v, auto&) { c.split.kind = data::parse_split_kind(v); })},
           {"train_fraction", wrap([](ExperimentConfig& c, auto& v, auto& w) { c.split.train_fraction = num(v, w); })},
           {"subsample", wrap([](ExperimentConfig& c, auto& v, auto& w) { c.train_fraction_subsample = num(v, w); })},
       }},
      {"sweep",
       {
           {"fractions", wrap([](ExperimentConfig& c, auto& v, auto& w) { c.sweep.fractions = io::parse_list(v, w); })},
           {"methods", wrap([](ExperimentConfig& c, auto& v, auto&) {
              c.sweep.methods.clear();
              std::istringstream in(v);
              std::string item;
              while (std::getline(in, item, ','))
                c.sweep.methods.push_back(parse_method(item));
            })},
           {"seeds", wrap([](ExperimentConfig& c, auto& v, auto& w) { c.sweep.seeds = count(v, w); })},
       }},
  };
  return s;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos)
    return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

} // namespace

ExperimentConfig parse(const std::string& ini_text, const std::string& source) {
  pt::ptree tree;
  try {
    std::istringstream in(ini_text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw IoError(source + ": line " + std::to_string(e.line()) + ": " + e.message());
  }
  for (const auto& [key, node] : tree)
    if (node.empty())
      throw IoError(source + ": key '" + key + "' must appear inside a [section]");

  std::string preset_name = "wrist";
  if (auto exp = tree.get_child_optional("experiment"))
    if (auto p = exp->get_optional<std::string>("preset"))
      preset_name = trim(*p);
  ExperimentConfig c;
  try {
    c = preset(preset_name);
  } catch (const Error& e) {
    throw IoError(source + ": [experiment] preset: " + e.what());
  }

  const auto& sch = schema();
  bool dt_given = false;
  for (const auto& [section, node] : tree) {
    auto sit = sch.find(section);
    if (sit == sch.end())
      throw IoError(source + ": unknown section [" + section + "]");
    for (const auto& [key, value] : node) {
      auto kit = sit->second.find(key);
      if (kit == sit->second.end())
        throw IoError(source + ": unknown key '" + key + "' in [" + section + "]");
      if (section == "dynamics" && key == "dt")
        dt_given = true;
      kit->second(c, trim(value.data()), source + ": [" + section + "] " + key);
    }
  }
  if (!dt_given)
    c.simulator.dynamics.dt = 1.0 / c.simulator.rate;
  try {
    c.validate();
  } catch (const Error& e) {
    throw IoError(source + ": " + e.what());
  }
  return c;
}

ExperimentConfig load(const std::string& path) { return parse(io::read_file(path), path); }

std::string to_ini(const ExperimentConfig& c) {
  using io::format_list;
  using io::format_number;
  std::ostringstream os;
  const auto& s = c.simulator;
  os << "[experiment]\n"
     << "seed = " << c.seed << "\n"
     << "output_dir = " << c.output_dir << "\n\n";
  os << "[simulator]\n"
     << "max_force = " << format_list(s.max_force) << "\n"
     << "activation_tau = " << format_number(s.activation_tau) << "\n"
     << "duration = " << format_number(s.duration) << "\n"
     << "rate = " << format_number(s.rate) << "\n"
     << "noise_low = " << format_number(s.noise_low) << "\n"
     << "noise_high = " << format_number(s.noise_high) << "\n"
     << "snr_db = " << format_number(s.snr_db) << "\n"
     << "excitation = " << sim::to_string(s.excitation.kind) << "\n"
     << "amplitude = " << format_number(s.excitation.amplitude) << "\n"
     << "base_frequency = " << format_number(s.excitation.base_frequency) << "\n"
     << "cocontraction = " << format_number(s.excitation.cocontraction) << "\n\n";
  os << "[dynamics]\n"
     << "inertia = " << format_number(s.dynamics.inertia) << "\n"
     << "damping = " << format_number(s.dynamics.damping) << "\n"
     << "gravity_coeff = " << format_number(s.dynamics.gravity_coeff) << "\n"
     << "moment_arms = " << format_list(s.dynamics.moment_arms) << "\n"
     << "dt = " << format_number(s.dynamics.dt) << "\n\n";
  os << "[dataset]\n"
     << "seed = " << c.dataset.seed << "\n"
     << "trials_per_speed = " << c.dataset.trials_per_speed << "\n"
     << "speeds = " << format_list(c.dataset.speeds) << "\n"
     << "decimation = " << c.dataset.decimation << "\n"
     << "window = " << c.dataset.window << "\n"
     << "stride = " << c.dataset.stride << "\n\n";
  os << "[model]\n"
     << "method = " << to_string(c.model.method) << "\n"
     << "elm_hidden = " << c.model.elm_hidden << "\n"
     << "elm_lambda = " << format_number(c.model.elm_lambda) << "\n"
     << "ridge_lambda = " << format_number(c.model.ridge_lambda) << "\n"
     << "ridge_intercept = " << (c.model.ridge_intercept ? "true" : "false") << "\n\n";
  os << "[loss]\n"
     << "force = " << format_number(c.loss.force) << "\n"
     << "angle = " << format_number(c.loss.angle) << "\n"
     << "physics = " << format_number(c.loss.physics) << "\n\n";
  os << "[schedule]\n"
     << "max_iter = " << c.schedule.max_iter << "\n"
     << "learning_rate = " << format_number(c.schedule.learning_rate) << "\n"
     << "momentum = " << format_number(c.schedule.momentum) << "\n"
     << "batch = " << c.schedule.batch << "\n\n";
  os << "[split]\n"
     << "kind = " << data::to_string(c.split.kind) << "\n"
     << "train_fraction = " << format_number(c.split.train_fraction) << "\n"
     << "subsample = " << format_number(c.train_fraction_subsample) << "\n\n";
  os << "[sweep]\n"
     << "fractions = " << format_list(c.sweep.fractions) << "\n"
     << "methods = ";
  for (std::size_t i = 0; i < c.sweep.methods.size(); ++i)
    os << (i ? "," : "") << to_string(c.sweep.methods[i]);
  os << "\n"
     << "seeds = " << c.sweep.seeds << "\n";
  return os.str();
}

} // namespace msk::config
