#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tunnel/dynamics.hpp"
#include "tunnel/trajectories.hpp"

namespace tunnel {

/// Shortest round-trip decimal form ("%.17g"), '.' decimal separator.
std::string format_number(double value);

/// CSV with header t,sx,sy,sz,p_left,purity; trajectory ensembles append
/// sx_stderr,sy_stderr,sz_stderr. Rows are newline-terminated.
std::string series_csv(const TimeSeries& series, const EnsembleSeries* ensemble = nullptr);

/// Parses a file produced by series_csv (extra columns are ignored).
TimeSeries parse_series_csv(std::string_view text, Backend provenance);

/// Writes to a sibling temporary file and renames it into place.
void atomic_write(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

std::string sha256_hex(std::string_view content);

struct PlotLine {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Minimal SVG line chart; convenience output only.
std::string svg_line_plot(const std::string& title, const std::vector<PlotLine>& lines);

}  // namespace tunnel
