#pragma once

// On-disk formats: trial CSVs, loss history, evaluation reports, SVG plots.
// Numbers are written in shortest round-trip form so reruns are byte-identical.

#include "msk/matrix.hpp"
#include "msk/metrics.hpp"
#include "msk/simulator.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace msk::io {

namespace fs = std::filesystem;

std::string format_number(double v);
/// Parses a decimal number, "nan", "inf" or "-inf". Throws IoError naming `what`.
double parse_number(std::string_view text, const std::string& what);

std::string read_file(const fs::path& path);
/// Creates parent directories as needed.
void write_file(const fs::path& path, const std::string& content);

/// Comma-separated rows with `#` comment lines and blank lines skipped.
/// Throws IoError when a row's field count differs from the header's.
struct CsvText {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};
CsvText parse_csv(const std::string& text, const std::string& what);

std::vector<double> parse_list(const std::string& text, const std::string& what);
std::string format_list(const std::vector<double>& values);

// --- trials -----------------------------------------------------------------

/// Columns time,emg_raw_1..N,emg_env_1..N,force_1..N,theta,tau with unit comments.
std::string trial_csv(const sim::Trial& trial);
/// Excitation and activation are not stored and come back empty.
sim::Trial parse_trial_csv(const std::string& text, const std::string& id);

// --- training and evaluation records ------------------------------------------

/// iteration,L_F,L_theta,L_P,L_total with one row per iteration.
std::string history_csv(const std::vector<metrics::LossBreakdown>& history);

/// variable,rmse,cc,nrmse; undefined values are written as "nan".
std::string report_csv(const metrics::EvalReport& report);
/// Aligned console rendering of a report.
std::string report_table(const metrics::EvalReport& report);

// --- plots --------------------------------------------------------------------

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;
};

/// Standalone SVG line chart. The plotted values are embedded in a comment
/// block so the figure can be regenerated without the run.
std::string line_plot(const PlotSpec& spec, const std::vector<Series>& series);

} // namespace msk::io
