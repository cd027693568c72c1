#include "tunnel/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "tunnel/errors.hpp"
#include "tunnel/expm.hpp"

namespace tunnel {

namespace {

constexpr Complex kI{0.0, 1.0};

// Validates a propagated state at time t, removes the sub-tolerance
// anti-Hermitian residue, and returns its Bloch vector.
Matrix2c checked_state(const Matrix2c& m, double t) {
  if (auto why = DensityMatrix::violation(m); !why.empty()) {
    std::ostringstream out;
    out.precision(17);
    out << "state invariant violated at t=" << t << ": " << why;
    throw NumericalFailure(out.str(), t);
  }
  Matrix2c sym = m;
  sym(0, 0) = m(0, 0).real();
  sym(1, 1) = m(1, 1).real();
  sym(1, 0) = 0.5 * (m(1, 0) + std::conj(m(0, 1)));
  sym(0, 1) = std::conj(sym(1, 0));
  return sym;
}

Matrix2c rk4_step(const Matrix2c& rho, const ModelSpec& model, double h) {
  const Matrix2c k1 = lindblad_rhs(rho, model);
  const Matrix2c k2 = lindblad_rhs(rho + (0.5 * h) * k1, model);
  const Matrix2c k3 = lindblad_rhs(rho + (0.5 * h) * k2, model);
  const Matrix2c k4 = lindblad_rhs(rho + h * k3, model);
  return rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace

std::string_view to_string(ChannelKind kind) {
  switch (kind) {
    case ChannelKind::dephasing:
      return "dephasing";
    case ChannelKind::spinflip:
      return "spinflip";
    case ChannelKind::custom:
      return "custom";
  }
  return "unknown";
}

ChannelKind channel_kind_from_string(std::string_view name) {
  if (name == "dephasing") return ChannelKind::dephasing;
  if (name == "spinflip") return ChannelKind::spinflip;
  if (name == "custom") return ChannelKind::custom;
  throw ConfigError("unknown channel kind '" + std::string(name) + "'");
}

Matrix2c ChannelSpec::jump_operator() const {
  const double amplitude = std::sqrt(rate);
  switch (kind) {
    case ChannelKind::dephasing:
      return amplitude * pauli_z();
    case ChannelKind::spinflip:
      return amplitude * pauli_x();
    case ChannelKind::custom:
      return amplitude * custom_operator.value();
  }
  return Matrix2c::Zero();
}

void ChannelSpec::validate() const {
  if (!(rate >= 0.0) || !std::isfinite(rate)) {
    throw ConfigError("channel rate must be finite and >= 0");
  }
  if ((kind == ChannelKind::custom) != custom_operator.has_value()) {
    throw ConfigError("custom_operator must be present exactly when kind is custom");
  }
  if (custom_operator && !custom_operator->allFinite()) {
    throw ConfigError("custom_operator has non-finite entries");
  }
}

Matrix2c ModelSpec::hamiltonian() const { return (-0.5 * omega) * pauli_z(); }

double ModelSpec::total_rate() const {
  double sum = 0.0;
  for (const auto& c : channels) sum += c.rate;
  return sum;
}

void ModelSpec::validate() const {
  if (!std::isfinite(omega) || omega < 0.0) {
    throw ConfigError("omega must be finite and >= 0");
  }
  for (const auto& c : channels) c.validate();
}

Vector4c stack(const Matrix2c& rho) {
  Vector4c v;
  v << rho(0, 0), rho(1, 0), rho(0, 1), rho(1, 1);
  return v;
}

Matrix2c unstack(const Vector4c& v) {
  Matrix2c m;
  m << v(0), v(2), v(1), v(3);
  return m;
}

Matrix2c Superoperator::apply(const Matrix2c& rho) const { return unstack(matrix * stack(rho)); }

std::string_view to_string(Backend backend) {
  switch (backend) {
    case Backend::analytic:
      return "analytic";
    case Backend::rk4:
      return "rk4";
    case Backend::exact:
      return "exact";
    case Backend::trajectories:
      return "trajectories";
  }
  return "unknown";
}

Backend backend_from_string(std::string_view name) {
  if (name == "analytic") return Backend::analytic;
  if (name == "rk4") return Backend::rk4;
  if (name == "exact") return Backend::exact;
  if (name == "trajectories") return Backend::trajectories;
  throw ConfigError("unknown backend '" + std::string(name) + "'");
}

Matrix2c lindblad_rhs(const Matrix2c& rho, const ModelSpec& model) {
  const Matrix2c h = model.hamiltonian();
  Matrix2c out = -kI * (h * rho - rho * h);
  for (const auto& channel : model.channels) {
    const Matrix2c g = channel.jump_operator();
    const Matrix2c gd = g.adjoint();
    const Matrix2c gdg = gd * g;
    out += g * rho * gd - 0.5 * (gdg * rho + rho * gdg);
  }
  return out;
}

Superoperator build_liouvillian(const ModelSpec& model) {
  // vec(A rho B) = (B^T kron A) vec(rho) for column stacking.
  const auto kron = [](const Matrix2c& a, const Matrix2c& b) {
    Matrix4c k;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) k.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
    return k;
  };
  const Matrix2c id = Matrix2c::Identity();
  const Matrix2c h = model.hamiltonian();

  Superoperator l;
  l.matrix = -kI * (kron(id, h) - kron(h.transpose(), id));
  for (const auto& channel : model.channels) {
    const Matrix2c g = channel.jump_operator();
    const Matrix2c gdg = g.adjoint() * g;
    l.matrix += kron(g.conjugate(), g) - 0.5 * kron(id, gdg) - 0.5 * kron(gdg.transpose(), id);
  }
  return l;
}

double default_step(const ModelSpec& model) {
  const double fastest = std::max({model.omega, 2.0 * model.total_rate(), 1.0});
  return 2.0 * std::numbers::pi / (1000.0 * fastest);
}

std::vector<double> uniform_grid(double t_end, std::size_t n_samples) {
  if (!(t_end > 0.0) || n_samples < 2) {
    throw ConfigError("uniform grid needs t_end > 0 and n_samples >= 2");
  }
  std::vector<double> grid(n_samples);
  const double denom = static_cast<double>(n_samples - 1);
  for (std::size_t i = 0; i < n_samples; ++i) {
    grid[i] = t_end * (static_cast<double>(i) / denom);
  }
  grid.back() = t_end;
  return grid;
}

void check_time_grid(const std::vector<double>& t_grid) {
  if (t_grid.empty()) throw ConfigError("time grid is empty");
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    if (!std::isfinite(t_grid[i]) || t_grid[i] < 0.0) {
      throw ConfigError("time grid entries must be finite and >= 0");
    }
    if (i > 0 && !(t_grid[i] > t_grid[i - 1])) {
      throw ConfigError("time grid must be strictly increasing");
    }
  }
}

TimeSeries evolve_rk4(const DensityMatrix& rho0, const ModelSpec& model,
                      const std::vector<double>& t_grid, std::optional<double> step) {
  model.validate();
  check_time_grid(t_grid);
  const double h = step.value_or(default_step(model));
  if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("step must be > 0");

  TimeSeries series;
  series.provenance = Backend::rk4;
  series.times = t_grid;
  series.states.reserve(t_grid.size());

  Matrix2c rho = rho0.elements();
  double t = 0.0;
  for (const double target : t_grid) {
    const double gap = target - t;
    if (gap > 0.0) {
      const double ratio = gap / h;
      const double nearest = std::round(ratio);
      if (nearest >= 1.0 && std::abs(ratio - nearest) <= 1e-9 * std::max(1.0, ratio)) {
        // Grid spacing is a whole number of steps: spread the rounding residue.
        const auto n = static_cast<long long>(nearest);
        const double sub = gap / static_cast<double>(n);
        for (long long k = 0; k < n; ++k) {
          rho = checked_state(rk4_step(rho, model, sub), t + static_cast<double>(k + 1) * sub);
        }
      } else {
        const auto n = static_cast<long long>(std::floor(ratio));
        for (long long k = 0; k < n; ++k) {
          rho = checked_state(rk4_step(rho, model, h), t + static_cast<double>(k + 1) * h);
        }
        const double rest = gap - static_cast<double>(n) * h;
        if (rest > 0.0) rho = checked_state(rk4_step(rho, model, rest), target);
      }
    }
    t = target;
    series.states.push_back(to_bloch(checked_state(rho, t)));
  }
  return series;
}

Matrix4c exact_propagator(const ModelSpec& model, double t) {
  const Superoperator l = build_liouvillian(model);
  return expm((l.matrix * Complex(t)).eval());
}

TimeSeries evolve_exact(const DensityMatrix& rho0, const ModelSpec& model,
                        const std::vector<double>& t_grid) {
  model.validate();
  check_time_grid(t_grid);
  const Superoperator l = build_liouvillian(model);
  const Vector4c v0 = stack(rho0.elements());

  TimeSeries series;
  series.provenance = Backend::exact;
  series.times = t_grid;
  series.states.reserve(t_grid.size());
  for (const double t : t_grid) {
    const Matrix4c propagator = expm((l.matrix * Complex(t)).eval());
    series.states.push_back(to_bloch(checked_state(unstack(propagator * v0), t)));
  }
  return series;
}

}  // namespace tunnel
