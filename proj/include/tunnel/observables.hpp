#pragma once

#include <vector>

#include "tunnel/dynamics.hpp"
#include "tunnel/qstate.hpp"

namespace tunnel {

struct DerivedSeries {
  std::vector<double> times;
  std::vector<double> p_left;
  std::vector<double> purity;
  /// d(zeta)/dt by second-order finite differences (one-sided at the ends).
  std::vector<double> purity_rate;
  TimeSeries source;
};

/// Pointwise P_l and zeta plus the purity rate. Needs at least 3 samples.
DerivedSeries derive(const TimeSeries& series);

/// Times of local minima of |d zeta/dt| over a centered 5-point window.
/// Flat input (|d zeta/dt| < 1e-9 everywhere) yields no plateaux. Throws
/// ResolutionError when the left/right oscillation is sampled with fewer than
/// 20 points per period.
std::vector<double> detect_plateaux(const DerivedSeries& derived);

/// For each of the first n_periods windows [j T, (j+1) T), the ratio
/// max |d zeta/dt| / min |d zeta/dt| (infinite when the minimum is zero).
std::vector<double> purity_rate_contrast(const DerivedSeries& derived, double period,
                                         std::size_t n_periods);

struct AsymptoteReport {
  double max_distance = 0.0;  // max Bloch distance to the expected state beyond the horizon
  std::size_t samples = 0;    // samples at or beyond the horizon
  bool pass = false;
  bool non_dissipative = false;
  bool insufficient_horizon = false;
};

inline constexpr double kAsymptoteTolerance = 1e-3;

/// 10 / (smallest positive channel rate); +infinity for a model without dissipation.
double asymptotic_horizon(const ModelSpec& model);

AsymptoteReport asymptote_check(const DerivedSeries& derived, const DensityMatrix& expected,
                                double horizon);

}  // namespace tunnel
