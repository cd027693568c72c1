#include "tunnel/observables.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tunnel/errors.hpp"

namespace tunnel {

namespace {

constexpr double kFlatRate = 1e-9;
constexpr double kMinSamplesPerPeriod = 20.0;
constexpr double kPlateauDepth = 1.5;

std::vector<double> finite_difference(const std::vector<double>& t, const std::vector<double>& f) {
  const std::size_t n = t.size();
  std::vector<double> d(n);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h1 = t[i] - t[i - 1];
    const double h2 = t[i + 1] - t[i];
    d[i] = -h2 / (h1 * (h1 + h2)) * f[i - 1] + (h2 - h1) / (h1 * h2) * f[i] +
           h1 / (h2 * (h1 + h2)) * f[i + 1];
  }
  {
    const double h1 = t[1] - t[0];
    const double h2 = t[2] - t[1];
    d[0] = -(2.0 * h1 + h2) / (h1 * (h1 + h2)) * f[0] + (h1 + h2) / (h1 * h2) * f[1] -
           h1 / (h2 * (h1 + h2)) * f[2];
  }
  {
    const double h1 = t[n - 2] - t[n - 3];
    const double h2 = t[n - 1] - t[n - 2];
    d[n - 1] = h2 / (h1 * (h1 + h2)) * f[n - 3] - (h1 + h2) / (h1 * h2) * f[n - 2] +
               (2.0 * h2 + h1) / (h2 * (h1 + h2)) * f[n - 1];
  }
  return d;
}

// Samples per left/right oscillation period, from crossings of P_l = 1/2.
// Returns +infinity when fewer than two crossings are present.
double samples_per_period(const DerivedSeries& derived) {
  std::vector<double> crossings;
  for (std::size_t i = 1; i < derived.times.size(); ++i) {
    const double a = derived.p_left[i - 1] - 0.5;
    const double b = derived.p_left[i] - 0.5;
    if ((a < 0.0 && b >= 0.0) || (a >= 0.0 && b < 0.0)) {
      crossings.push_back(derived.times[i - 1] + (derived.times[i] - derived.times[i - 1]) * a / (a - b));
    }
  }
  if (crossings.size() < 2) return std::numeric_limits<double>::infinity();
  const double half_period = (crossings.back() - crossings.front()) / static_cast<double>(crossings.size() - 1);
  const double mean_dt = (derived.times.back() - derived.times.front()) /
                         static_cast<double>(derived.times.size() - 1);
  return 2.0 * half_period / mean_dt;
}

}  // namespace

DerivedSeries derive(const TimeSeries& series) {
  if (series.size() < 3 || series.states.size() != series.size()) {
    throw DomainError("derive needs at least 3 samples with matching states");
  }
  DerivedSeries out;
  out.times = series.times;
  out.source = series;
  out.p_left.reserve(series.size());
  out.purity.reserve(series.size());
  for (const auto& s : series.states) {
    out.p_left.push_back(left_probability(s));
    out.purity.push_back(purity(s));
  }
  out.purity_rate = finite_difference(out.times, out.purity);
  return out;
}

std::vector<double> detect_plateaux(const DerivedSeries& derived) {
  const std::size_t n = derived.times.size();
  std::vector<double> magnitude(n);
  double largest = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    magnitude[i] = std::abs(derived.purity_rate[i]);
    largest = std::max(largest, magnitude[i]);
  }
  if (largest < kFlatRate || n < 5) return {};
  if (samples_per_period(derived) < kMinSamplesPerPeriod) {
    throw ResolutionError("fewer than 20 samples per oscillation period; refine the time grid");
  }

  std::vector<double> plateaux;
  for (std::size_t i = 2; i + 2 < n; ++i) {
    const double a = magnitude[i];
    const bool minimum = a < magnitude[i - 1] && a < magnitude[i - 2] && a <= magnitude[i + 1] &&
                         a <= magnitude[i + 2];
    const double window_max = std::max({magnitude[i - 2], magnitude[i - 1], magnitude[i + 1], magnitude[i + 2]});
    if (minimum && window_max > kPlateauDepth * a + kFlatRate) {
      plateaux.push_back(derived.times[i]);
    }
  }
  return plateaux;
}

std::vector<double> purity_rate_contrast(const DerivedSeries& derived, double period,
                                         std::size_t n_periods) {
  if (!(period > 0.0)) throw DomainError("period must be > 0");
  std::vector<double> ratios;
  for (std::size_t j = 0; j < n_periods; ++j) {
    const double start = static_cast<double>(j) * period;
    const double stop = start + period;
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < derived.times.size(); ++i) {
      if (derived.times[i] >= start && derived.times[i] < stop) {
        const double a = std::abs(derived.purity_rate[i]);
        lo = std::min(lo, a);
        hi = std::max(hi, a);
        ++count;
      }
    }
    if (count == 0) throw DomainError("series does not cover the requested periods");
    ratios.push_back(lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity());
  }
  return ratios;
}

double asymptotic_horizon(const ModelSpec& model) {
  double min_rate = std::numeric_limits<double>::infinity();
  for (const auto& c : model.channels) {
    if (c.rate > 0.0) min_rate = std::min(min_rate, c.rate);
  }
  return std::isinf(min_rate) ? min_rate : 10.0 / min_rate;
}

AsymptoteReport asymptote_check(const DerivedSeries& derived, const DensityMatrix& expected,
                                double horizon) {
  AsymptoteReport report;
  if (!std::isfinite(horizon)) {
    report.non_dissipative = true;
    return report;
  }
  const BlochVector target = to_bloch(expected);
  for (std::size_t i = 0; i < derived.times.size(); ++i) {
    if (derived.times[i] + 1e-12 * std::max(1.0, horizon) < horizon) continue;
    const BlochVector& s = derived.source.states[i];
    const double d = std::sqrt((s.sx - target.sx) * (s.sx - target.sx) +
                               (s.sy - target.sy) * (s.sy - target.sy) +
                               (s.sz - target.sz) * (s.sz - target.sz));
    report.max_distance = std::max(report.max_distance, d);
    ++report.samples;
  }
  report.insufficient_horizon = report.samples == 0;
  report.pass = !report.insufficient_horizon && report.max_distance < kAsymptoteTolerance;
  return report;
}

}  // namespace tunnel
