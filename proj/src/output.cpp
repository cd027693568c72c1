#include "tunnel/output.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

#include "tunnel/errors.hpp"
#include "tunnel/qstate.hpp"

namespace tunnel {

std::string format_number(double value) {
  std::array<char, 40> buf{};
  std::snprintf(buf.data(), buf.size(), "%.17g", value);
  return buf.data();
}

std::string series_csv(const TimeSeries& series, const EnsembleSeries* ensemble) {
  std::string out = "t,sx,sy,sz,p_left,purity";
  if (ensemble) out += ",sx_stderr,sy_stderr,sz_stderr";
  out += '\n';
  for (std::size_t i = 0; i < series.size(); ++i) {
    const BlochVector& s = series.states[i];
    out += format_number(series.times[i]) + ',' + format_number(s.sx) + ',' +
           format_number(s.sy) + ',' + format_number(s.sz) + ',' +
           format_number(left_probability(s)) + ',' + format_number(purity(s));
    if (ensemble) {
      const BlochVector& e = ensemble->std_error[i];
      out += ',' + format_number(e.sx) + ',' + format_number(e.sy) + ',' + format_number(e.sz);
    }
    out += '\n';
  }
  return out;
}

TimeSeries parse_series_csv(std::string_view text, Backend provenance) {
  TimeSeries series;
  series.provenance = provenance;
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line.rfind("t,sx,sy,sz", 0) != 0) {
    throw ConfigError("CSV is missing the t,sx,sy,sz header");
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::array<double, 4> v{};
    std::istringstream fields(line);
    std::string field;
    for (double& x : v) {
      if (!std::getline(fields, field, ',')) {
        throw ConfigError("CSV line " + std::to_string(line_no) + ": too few columns");
      }
      try {
        x = std::stod(field);
      } catch (const std::exception&) {
        throw ConfigError("CSV line " + std::to_string(line_no) + ": bad number '" + field + "'");
      }
    }
    series.times.push_back(v[0]);
    series.states.push_back({v[1], v[2], v[3]});
  }
  return series;
}

void atomic_write(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string sha256_hex(std::string_view content) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  if (EVP_Digest(content.data(), content.size(), digest.data(), &length, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  hex.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) {
    hex += kHex[digest[i] >> 4];
    hex += kHex[digest[i] & 0xf];
  }
  return hex;
}

std::string svg_line_plot(const std::string& title, const std::vector<PlotLine>& lines) {
  constexpr double width = 720.0;
  constexpr double height = 400.0;
  constexpr double margin = 50.0;
  static constexpr std::array<const char*, 8> kColors = {
      "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};

  double x_lo = 0.0, x_hi = 1.0, y_lo = 0.0, y_hi = 1.0;
  bool first = true;
  for (const auto& line : lines) {
    for (std::size_t i = 0; i < line.x.size(); ++i) {
      if (!std::isfinite(line.x[i]) || !std::isfinite(line.y[i])) continue;
      if (first) {
        x_lo = x_hi = line.x[i];
        y_lo = y_hi = line.y[i];
        first = false;
      }
      x_lo = std::min(x_lo, line.x[i]);
      x_hi = std::max(x_hi, line.x[i]);
      y_lo = std::min(y_lo, line.y[i]);
      y_hi = std::max(y_hi, line.y[i]);
    }
  }
  if (x_hi == x_lo) x_hi = x_lo + 1.0;
  if (y_hi == y_lo) y_hi = y_lo + 1.0;
  const auto px = [&](double x) { return margin + (x - x_lo) / (x_hi - x_lo) * (width - 2 * margin); };
  const auto py = [&](double y) { return height - margin - (y - y_lo) / (y_hi - y_lo) * (height - 2 * margin); };

  std::ostringstream svg;
  svg.precision(6);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\">" << title << "</text>\n";
  svg << "<line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\"" << width - margin
      << "\" y2=\"" << height - margin << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin << "\" y2=\""
      << height - margin << "\" stroke=\"black\"/>\n";
  svg << "<text x=\"" << margin << "\" y=\"" << height - margin + 16 << "\">" << x_lo << "</text>\n";
  svg << "<text x=\"" << width - margin << "\" y=\"" << height - margin + 16
      << "\" text-anchor=\"end\">" << x_hi << "</text>\n";
  svg << "<text x=\"" << margin - 4 << "\" y=\"" << height - margin << "\" text-anchor=\"end\">" << y_lo
      << "</text>\n";
  svg << "<text x=\"" << margin - 4 << "\" y=\"" << margin + 4 << "\" text-anchor=\"end\">" << y_hi
      << "</text>\n";
  for (std::size_t k = 0; k < lines.size(); ++k) {
    const char* color = kColors[k % kColors.size()];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < lines[k].x.size(); ++i) {
      if (!std::isfinite(lines[k].y[i])) continue;
      svg << px(lines[k].x[i]) << ',' << py(lines[k].y[i]) << ' ';
    }
    svg << "\"/>\n";
    svg << "<text x=\"" << width - margin - 4 << "\" y=\"" << margin + 16 * (k + 1)
        << "\" text-anchor=\"end\" fill=\"" << color << "\">" << lines[k].label << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace tunnel
