#include "msk/io.hpp"

#include "msk/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace msk::io {

std::string format_number(double v) {
  if (std::isnan(v))
    return "nan";
  if (std::isinf(v))
    return v > 0 ? "inf" : "-inf";
  if (v == 0.0)
    return "0";  // also folds -0
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_number(std::string_view text, const std::string& what) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t'))
    text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
    text.remove_suffix(1);
  if (text == "nan")
    return std::numeric_limits<double>::quiet_NaN();
  if (text == "inf")
    return std::numeric_limits<double>::infinity();
  if (text == "-inf")
    return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw IoError(what + ": '" + std::string(text) + "' is not a number");
  return v;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec)
      throw IoError("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw IoError("cannot open '" + path.string() + "' for writing");
  out << content;
  out.flush();
  if (!out)
    throw IoError("write to '" + path.string() + "' failed");
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

} // namespace

CsvText parse_csv(const std::string& text, const std::string& what) {
  CsvText csv;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.empty() || line[0] == '#')
      continue;
    auto fields = split_fields(line);
    if (!have_header) {
      csv.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != csv.header.size())
      throw IoError(what + ": line " + std::to_string(lineno) + " has " + std::to_string(fields.size()) +
                    " fields, header has " + std::to_string(csv.header.size()));
    csv.rows.push_back(std::move(fields));
  }
  if (!have_header)
    throw IoError(what + ": missing header row");
  return csv;
}

std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  if (text.find_first_not_of(" \t") == std::string::npos)
    return out;
  for (const auto& f : split_fields(text))
    out.push_back(parse_number(f, what));
  return out;
}

std::string format_list(const std::vector<double>& values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i)
    s += (i ? "," : "") + format_number(values[i]);
  return s;
}

// ---------------------------------------------------------------------------

std::string trial_csv(const sim::Trial& trial) {
  const std::size_t n = trial.muscles();
  std::string s;
  s += "# trial=" + trial.id + " speed=" + format_number(trial.speed) + " seed=" + std::to_string(trial.seed) + "\n";
  s += "# units: time s, emg_raw a.u., emg_env fraction of MVC, force N, theta rad, tau N*m\n";
  s += "time";
  for (const char* p : {"emg_raw_", "emg_env_", "force_"})
    for (std::size_t m = 1; m <= n; ++m)
      s += "," + std::string(p) + std::to_string(m);
  s += ",theta,tau\n";
  for (std::size_t t = 0; t < trial.samples(); ++t) {
    s += format_number(trial.time[t]);
    for (const Matrix* mat : {&trial.emg_raw, &trial.emg_env, &trial.forces})
      for (std::size_t m = 0; m < n; ++m)
        s += "," + format_number((*mat)(t, m));
    s += "," + format_number(trial.theta[t]) + "," + format_number(trial.tau[t]) + "\n";
  }
  return s;
}

sim::Trial parse_trial_csv(const std::string& text, const std::string& id) {
  const std::string what = "trial '" + id + "'";
  auto csv = parse_csv(text, what);
  const auto& h = csv.header;
  if (h.size() < 6 || (h.size() - 3) % 3 != 0 || h.front() != "time" || h[h.size() - 2] != "theta" ||
      h.back() != "tau")
    throw IoError(what + ": header must be time,emg_raw_1..N,emg_env_1..N,force_1..N,theta,tau");
  const std::size_t n = (h.size() - 3) / 3;
  for (std::size_t m = 0; m < n; ++m) {
    const auto k = std::to_string(m + 1);
    if (h[1 + m] != "emg_raw_" + k || h[1 + n + m] != "emg_env_" + k || h[1 + 2 * n + m] != "force_" + k)
      throw IoError(what + ": unexpected column order near muscle " + k);
  }
  const std::size_t t = csv.rows.size();
  if (t < 3)
    throw IoError(what + ": needs at least 3 samples");
  sim::Trial tr;
  tr.id = id;
  tr.time.resize(t);
  tr.emg_raw = Matrix(t, n);
  tr.emg_env = Matrix(t, n);
  tr.forces = Matrix(t, n);
  tr.theta.resize(t);
  tr.tau.resize(t);
  for (std::size_t r = 0; r < t; ++r) {
    const auto& row = csv.rows[r];
    auto num = [&](std::size_t c) {
      return parse_number(row[c], what + " row " + std::to_string(r + 1) + " column " + h[c]);
    };
    tr.time[r] = num(0);
    for (std::size_t m = 0; m < n; ++m) {
      tr.emg_raw(r, m) = num(1 + m);
      tr.emg_env(r, m) = num(1 + n + m);
      tr.forces(r, m) = num(1 + 2 * n + m);
    }
    tr.theta[r] = num(1 + 3 * n);
    tr.tau[r] = num(2 + 3 * n);
  }
  tr.dt = (tr.time.back() - tr.time.front()) / static_cast<double>(t - 1);
  if (!(tr.dt > 0.0))
    throw IoError(what + ": time column must be increasing");
  return tr;
}

// ---------------------------------------------------------------------------

std::string history_csv(const std::vector<metrics::LossBreakdown>& history) {
  std::string s = "iteration,L_F,L_theta,L_P,L_total\n";
  for (std::size_t i = 0; i < history.size(); ++i) {
    const auto& h = history[i];
    s += std::to_string(i + 1) + "," + format_number(h.force) + "," + format_number(h.angle) + "," +
         format_number(h.physics) + "," + format_number(h.total) + "\n";
  }
  return s;
}

namespace {

double or_nan(const std::optional<double>& v) { return v ? *v : std::numeric_limits<double>::quiet_NaN(); }

} // namespace

std::string report_csv(const metrics::EvalReport& report) {
  std::string s = "# split=" + report.split + " seed=" + std::to_string(report.seed) + "\n";
  s += "variable,rmse,cc,nrmse\n";
  for (const auto& o : report.outputs)
    s += o.variable + "," + format_number(o.rmse) + "," + format_number(or_nan(o.cc)) + "," +
         format_number(or_nan(o.nrmse)) + "\n";
  s += "mean," + format_number(report.mean_rmse) + "," + format_number(or_nan(report.mean_cc)) + "," +
       format_number(or_nan(report.mean_nrmse)) + "\n";
  return s;
}

std::string report_table(const metrics::EvalReport& report) {
  std::ostringstream os;
  auto cell = [](const std::optional<double>& v) {
    std::ostringstream c;
    if (v)
      c << std::fixed << std::setprecision(4) << *v;
    else
      c << "n/a";
    return c.str();
  };
  os << std::left << std::setw(10) << "variable" << std::right << std::setw(12) << "rmse" << std::setw(10) << "cc"
     << std::setw(10) << "nrmse" << "\n";
  for (const auto& o : report.outputs)
    os << std::left << std::setw(10) << o.variable << std::right << std::setw(12) << cell(o.rmse) << std::setw(10)
       << cell(o.cc) << std::setw(10) << cell(o.nrmse) << "\n";
  os << std::left << std::setw(10) << "mean" << std::right << std::setw(12) << cell(report.mean_rmse)
     << std::setw(10) << cell(report.mean_cc) << std::setw(10) << cell(report.mean_nrmse) << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
    case '&':
      out += "&amp;";
      break;
    case '<':
      out += "&lt;";
      break;
    case '>':
      out += "&gt;";
      break;
    case '"':
      out += "&quot;";
      break;
    default:
      out += c;
    }
  }
  return out;
}

std::string fixed(double v, int digits = 1) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

std::string tick_label(double v) {
  std::ostringstream os;
  os << std::setprecision(3) << v;
  return os.str();
}

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2"};

} // namespace

std::string line_plot(const PlotSpec& spec, const std::vector<Series>& series) {
  constexpr double width = 720, height = 440, left = 70, right = 170, top = 40, bottom = 55;
  const double pw = width - left - right;
  const double ph = height - top - bottom;

  auto ty = [&](double y) { return spec.log_y ? std::log10(y) : y; };
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size())
      throw InvalidArgument("line_plot: series '" + s.name + "' has mismatched x/y lengths");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]) || (spec.log_y && s.y[i] <= 0.0))
        continue;
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, ty(s.y[i]));
      ymax = std::max(ymax, ty(s.y[i]));
    }
  }
  if (!std::isfinite(xmin)) {
    xmin = 0;
    xmax = 1;
    ymin = 0;
    ymax = 1;
  }
  if (xmax == xmin)
    xmax = xmin + 1;
  if (ymax == ymin) {
    ymin -= 0.5;
    ymax += 0.5;
  }
  const double pad = 0.05 * (ymax - ymin);
  ymin -= pad;
  ymax += pad;
  auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) { return top + ph - (ty(y) - ymin) / (ymax - ymin) * ph; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << " " << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<!-- data\nseries,x,y\n";
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i)
      os << s.name << "," << format_number(s.x[i]) << "," << format_number(s.y[i]) << "\n";
  os << "-->\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << xml_escape(spec.title)
     << "</text>\n";
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"#333\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double fx = xmin + (xmax - xmin) * k / 5.0;
    const double fy = ymin + (ymax - ymin) * k / 5.0;
    const double gx = left + pw * k / 5.0;
    const double gy = top + ph - ph * k / 5.0;
    os << "<line x1=\"" << fixed(gx) << "\" y1=\"" << top + ph << "\" x2=\"" << fixed(gx) << "\" y2=\"" << top + ph + 5
       << "\" stroke=\"#333\"/>\n";
    os << "<text x=\"" << fixed(gx) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">" << tick_label(fx)
       << "</text>\n";
    os << "<line x1=\"" << left - 5 << "\" y1=\"" << fixed(gy) << "\" x2=\"" << left << "\" y2=\"" << fixed(gy)
       << "\" stroke=\"#333\"/>\n";
    os << "<text x=\"" << left - 8 << "\" y=\"" << fixed(gy + 4) << "\" text-anchor=\"end\">"
       << tick_label(spec.log_y ? std::pow(10.0, fy) : fy) << "</text>\n";
  }
  os << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 12 << "\" text-anchor=\"middle\">"
     << xml_escape(spec.x_label) << "</text>\n";
  os << "<text x=\"16\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
     << top + ph / 2 << ")\">" << xml_escape(spec.y_label + (spec.log_y ? " (log)" : "")) << "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kPalette[si % std::size(kPalette)];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    bool first = true;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]) || (spec.log_y && s.y[i] <= 0.0))
        continue;
      os << (first ? "" : " ") << fixed(px(s.x[i]), 2) << "," << fixed(py(s.y[i]), 2);
      first = false;
    }
    os << "\"/>\n";
    const double ly = top + 14 + 18 * static_cast<double>(si);
    os << "<line x1=\"" << left + pw + 12 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 36 << "\" y2=\"" << ly
       << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << left + pw + 42 << "\" y=\"" << ly + 4 << "\">" << xml_escape(s.name) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

} // namespace msk::io
