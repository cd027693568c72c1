#include "tunnel/analytic.hpp"

#include <cmath>
#include <numbers>

#include "tunnel/errors.hpp"

namespace tunnel {

namespace {

constexpr Complex kI{0.0, 1.0};
constexpr double kSeriesThreshold = 1e-4;

void check_rate_time(double rate, double t) {
  if (!(rate >= 0.0) || !(t >= 0.0)) {
    throw DomainError("rates and times must be >= 0");
  }
}

// e^{-k2 t} C(t) and e^{-k2 t} S(t), with S = sin(eps t)/eps and its continuations.
struct DampedPair {
  double c;
  double s;
};

DampedPair damped_pair(double k2, double omega, double t) {
  const EpsilonValue eps = epsilon(omega, k2);
  const double x = eps.value * t;
  switch (eps.regime) {
    case DampingRegime::underdamped: {
      const double envelope = std::exp(-k2 * t);
      const double s = x < kSeriesThreshold ? t * (1.0 - x * x / 6.0) : std::sin(x) / eps.value;
      return {envelope * std::cos(x), envelope * s};
    }
    case DampingRegime::critical: {
      const double envelope = std::exp(-k2 * t);
      return {envelope, envelope * t};
    }
    case DampingRegime::overdamped: {
      // Combine the envelope with cosh/sinh to avoid overflow at large t.
      const double slow = std::exp((eps.value - k2) * t);
      const double fast = std::exp(-(eps.value + k2) * t);
      const double s = x < kSeriesThreshold ? std::exp(-k2 * t) * t * (1.0 + x * x / 6.0)
                                            : 0.5 * (slow - fast) / eps.value;
      return {0.5 * (slow + fast), s};
    }
  }
  return {0.0, 0.0};
}

}  // namespace

EpsilonValue epsilon(double omega, double k2) {
  if (!(omega >= 0.0) || !(k2 >= 0.0)) {
    throw DomainError("epsilon requires omega >= 0 and k2 >= 0");
  }
  const double magnitude = std::sqrt(std::abs(omega - k2) * (omega + k2));
  if (omega > k2) return {DampingRegime::underdamped, magnitude};
  if (omega < k2) return {DampingRegime::overdamped, magnitude};
  return {DampingRegime::critical, 0.0};
}

DensityMatrix dephasing_solution(const PureStateAngles& angles, double k1, double omega, double t) {
  check_rate_time(k1, t);
  const DensityMatrix rho0 = make_initial_state(angles);
  const Complex decay = std::exp(Complex(-2.0 * k1 * t, omega * t));
  Matrix2c m = rho0.elements();
  m(0, 1) *= decay;
  m(1, 0) = std::conj(m(0, 1));
  return DensityMatrix(m);
}

double dephasing_left_prob(double k1, double omega, double t) {
  check_rate_time(k1, t);
  return 0.5 * (1.0 + std::exp(-2.0 * k1 * t) * std::cos(omega * t));
}

double dephasing_purity(double theta, double k1, double t) {
  check_rate_time(k1, t);
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return c * c + std::exp(-4.0 * k1 * t) * s * s;
}

Complex spinflip_coherence(const PureStateAngles& angles, double k2, double omega, double t) {
  check_rate_time(k2, t);
  make_initial_state(angles);
  const DampedPair p = damped_pair(k2, omega, t);
  const Complex forward = std::polar(1.0, angles.phi);
  const Complex backward = std::conj(forward);
  return std::sin(angles.theta) * (forward * p.c + (k2 * backward - kI * omega * forward) * p.s);
}

DensityMatrix spinflip_solution(const PureStateAngles& angles, double k2, double omega, double t) {
  const Complex c = spinflip_coherence(angles, k2, omega, t);
  const double sz = std::exp(-2.0 * k2 * t) * std::cos(angles.theta);
  Matrix2c m;
  m << 0.5 * (1.0 + sz), 0.5 * std::conj(c), 0.5 * c, 0.5 * (1.0 - sz);
  return DensityMatrix(m);
}

double spinflip_left_prob(double k2, double omega, double t) {
  check_rate_time(k2, t);
  const DampedPair p = damped_pair(k2, omega, t);
  return 0.5 * (1.0 + p.c + k2 * p.s);
}

double spinflip_purity(const PureStateAngles& angles, double k2, double omega, double t) {
  const Complex c = spinflip_coherence(angles, k2, omega, t);
  const double cz = std::cos(angles.theta);
  return std::norm(c) + std::exp(-4.0 * k2 * t) * cz * cz;
}

TimeSeries analytic_series(const PureStateAngles& angles, const ModelSpec& model,
                           const std::vector<double>& t_grid) {
  model.validate();
  check_time_grid(t_grid);
  if (model.channels.size() != 1 || model.channels.front().kind == ChannelKind::custom) {
    throw ConfigError("analytic backend needs exactly one dephasing or spinflip channel");
  }
  const ChannelSpec& channel = model.channels.front();
  TimeSeries series;
  series.provenance = Backend::analytic;
  series.times = t_grid;
  series.states.reserve(t_grid.size());
  for (const double t : t_grid) {
    const DensityMatrix rho = channel.kind == ChannelKind::dephasing
                                  ? dephasing_solution(angles, channel.rate, model.omega, t)
                                  : spinflip_solution(angles, channel.rate, model.omega, t);
    series.states.push_back(to_bloch(rho));
  }
  return series;
}

namespace literal {

Complex dephasing_coherence(const PureStateAngles& angles, double k1, double omega, double t) {
  return 0.5 * std::sin(angles.theta) * std::polar(1.0, -angles.phi) *
         std::exp(-2.0 * Complex(k1, omega) * t);
}

Complex spinflip_coherence(const PureStateAngles& angles, double k2, double omega, double t) {
  const PureStateAngles mirrored{angles.theta, angles.phi == 0.0 ? 0.0 : 2.0 * std::numbers::pi - angles.phi};
  return tunnel::spinflip_coherence(mirrored, k2, omega, t);
}

double spinflip_left_prob(double k2, double omega, double t) {
  const EpsilonValue eps = epsilon(omega, k2);
  double c = 1.0;
  double s = t;
  if (eps.regime == DampingRegime::underdamped) {
    c = std::cos(eps.value * t);
    s = std::sin(eps.value * t) / eps.value;
  } else if (eps.regime == DampingRegime::overdamped) {
    c = std::cosh(eps.value * t);
    s = std::sinh(eps.value * t) / eps.value;
  }
  return 0.5 * (1.0 + std::exp(-k2 * t)) * (c + k2 * s);
}

}  // namespace literal

}  // namespace tunnel
