#include "tunnel/doublewell.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "tunnel/errors.hpp"

namespace tunnel {

namespace {

constexpr std::size_t kMaxLevels = 12;
constexpr std::size_t kMinGrid = 64;
constexpr int kMaxInverseIterations = 20;
constexpr double kResidualTolerance = 1e-8;
constexpr double kParityThreshold = 0.5;

// Number of eigenvalues strictly below lambda (Sturm count via LDL^T pivots).
std::size_t sturm_count(const TridiagonalOperator& op, double lambda, double pivot_floor) {
  std::size_t count = 0;
  double q = op.diagonal[0] - lambda;
  for (std::size_t i = 0;; ++i) {
    if (q == 0.0) q = -pivot_floor;
    if (q < 0.0) ++count;
    if (i + 1 == op.size()) break;
    const double e = op.off_diagonal[i];
    q = op.diagonal[i + 1] - lambda - e * e / q;
  }
  return count;
}

double bisect_eigenvalue(const TridiagonalOperator& op, std::size_t index, double lo, double hi,
                         double pivot_floor) {
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (sturm_count(op, mid, pivot_floor) > index) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// LU factorization with partial pivoting of (op - shift I), as in LAPACK gttrf/gttrs.
class ShiftedTridiagonalSolver {
 public:
  ShiftedTridiagonalSolver(const TridiagonalOperator& op, double shift, double pivot_floor)
      : lower_(op.off_diagonal),
        diag_(op.diagonal),
        upper_(op.off_diagonal),
        upper2_(op.size() > 2 ? op.size() - 2 : 0, 0.0),
        swapped_(op.size() > 1 ? op.size() - 1 : 0, false) {
    const std::size_t n = diag_.size();
    for (double& d : diag_) d -= shift;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (std::abs(diag_[i]) >= std::abs(lower_[i])) {
        if (diag_[i] == 0.0) diag_[i] = pivot_floor;
        const double fact = lower_[i] / diag_[i];
        lower_[i] = fact;
        diag_[i + 1] -= fact * upper_[i];
      } else {
        const double fact = diag_[i] / lower_[i];
        diag_[i] = lower_[i];
        lower_[i] = fact;
        const double temp = upper_[i];
        upper_[i] = diag_[i + 1];
        diag_[i + 1] = temp - fact * diag_[i + 1];
        if (i + 2 < n) {
          upper2_[i] = upper_[i + 1];
          upper_[i + 1] = -fact * upper_[i + 1];
        }
        swapped_[i] = true;
      }
    }
    if (diag_[n - 1] == 0.0) diag_[n - 1] = pivot_floor;
  }

  void solve(std::vector<double>& b) const {
    const std::size_t n = diag_.size();
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (!swapped_[i]) {
        b[i + 1] -= lower_[i] * b[i];
      } else {
        const double temp = b[i];
        b[i] = b[i + 1];
        b[i + 1] = temp - lower_[i] * b[i];
      }
    }
    b[n - 1] /= diag_[n - 1];
    if (n > 1) b[n - 2] = (b[n - 2] - upper_[n - 2] * b[n - 1]) / diag_[n - 2];
    for (std::size_t i = n - 2; i-- > 0;) {
      b[i] = (b[i] - upper_[i] * b[i + 1] - upper2_[i] * b[i + 2]) / diag_[i];
    }
  }

 private:
  std::vector<double> lower_;
  std::vector<double> diag_;
  std::vector<double> upper_;
  std::vector<double> upper2_;
  std::vector<bool> swapped_;
};

double euclidean_norm(const std::vector<double>& v) {
  double sum = 0.0;
  for (double x : v) sum += x * x;
  return std::sqrt(sum);
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

}  // namespace

std::string_view to_string(BarrierShape shape) {
  return shape == BarrierShape::rectangular ? "rectangular" : "gaussian";
}

BarrierShape barrier_shape_from_string(std::string_view name) {
  if (name == "rectangular") return BarrierShape::rectangular;
  if (name == "gaussian") return BarrierShape::gaussian;
  throw ConfigError("unknown barrier shape '" + std::string(name) + "'");
}

std::string_view to_string(Parity parity) {
  return parity == Parity::symmetric ? "symmetric" : "antisymmetric";
}

double PotentialSpec::value(double x) const {
  const double ax = std::abs(x);
  if (barrier_shape == BarrierShape::rectangular) {
    return ax <= barrier_half_width ? v0 : 0.0;
  }
  const double u = ax / barrier_half_width;
  return v0 * std::exp(-std::numbers::ln2 * u * u);
}

void PotentialSpec::validate() const {
  if (!(x_max > 0.0) || !std::isfinite(x_max)) throw ConfigError("x_max must be > 0");
  if (!(v0 >= 0.0) || !std::isfinite(v0)) throw ConfigError("v0 must be >= 0");
  if (!(barrier_half_width > 0.0 && barrier_half_width < x_max)) {
    throw ConfigError("barrier_half_width must lie in (0, x_max)");
  }
  if (!(mass > 0.0) || !std::isfinite(mass)) throw ConfigError("mass must be > 0");
  if (!(hbar > 0.0) || !std::isfinite(hbar)) throw ConfigError("hbar must be > 0");
}

std::vector<double> TridiagonalOperator::apply(const std::vector<double>& v) const {
  const std::size_t n = size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = diagonal[i] * v[i];
    if (i > 0) acc += off_diagonal[i - 1] * v[i - 1];
    if (i + 1 < n) acc += off_diagonal[i] * v[i + 1];
    out[i] = acc;
  }
  return out;
}

TridiagonalOperator build_hamiltonian(const PotentialSpec& potential, std::size_t n_grid) {
  potential.validate();
  if (n_grid < kMinGrid) {
    throw DomainError("n_grid must be at least " + std::to_string(kMinGrid));
  }
  TridiagonalOperator op;
  op.spacing = 2.0 * potential.x_max / static_cast<double>(n_grid + 1);
  const double kinetic = potential.hbar * potential.hbar / (potential.mass * op.spacing * op.spacing);
  op.grid.resize(n_grid);
  op.diagonal.resize(n_grid);
  op.off_diagonal.assign(n_grid - 1, -0.5 * kinetic);
  const double center = 0.5 * static_cast<double>(n_grid - 1);
  for (std::size_t i = 0; i < n_grid; ++i) {
    // Measured from the center so x_i = -x_{n-1-i} exactly.
    op.grid[i] = (static_cast<double>(i) - center) * op.spacing;
    op.diagonal[i] = kinetic + potential.value(op.grid[i]);
  }
  return op;
}

SpectrumResult solve_spectrum(const PotentialSpec& potential, std::size_t n_grid,
                              std::size_t n_levels) {
  if (n_levels == 0 || n_levels > kMaxLevels) {
    throw DomainError("n_levels must be in [1, " + std::to_string(kMaxLevels) + "]");
  }
  const TridiagonalOperator op = build_hamiltonian(potential, n_grid);
  const std::size_t n = op.size();

  // Gershgorin bounds.
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < n; ++i) {
    double radius = 0.0;
    if (i > 0) radius += std::abs(op.off_diagonal[i - 1]);
    if (i + 1 < n) radius += std::abs(op.off_diagonal[i]);
    lo = std::min(lo, op.diagonal[i] - radius);
    hi = std::max(hi, op.diagonal[i] + radius);
  }
  const double scale = std::max(std::abs(lo), std::abs(hi));
  const double pivot_floor = std::numeric_limits<double>::epsilon() * scale;

  SpectrumResult result;
  result.grid = op.grid;
  result.spacing = op.spacing;

  std::mt19937_64 start_rng(0x5eed);
  std::uniform_real_distribution<double> start_dist(-1.0, 1.0);

  for (std::size_t level = 0; level < n_levels; ++level) {
    const double lambda = bisect_eigenvalue(op, level, lo, hi, pivot_floor);
    const ShiftedTridiagonalSolver solver(op, lambda, pivot_floor);

    std::vector<double> v(n);
    for (double& x : v) x = start_dist(start_rng);
    double energy = lambda;
    double residual = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < kMaxInverseIterations && residual > kResidualTolerance; ++iter) {
      solver.solve(v);
      const double norm = euclidean_norm(v);
      if (!std::isfinite(norm) || norm == 0.0) break;
      for (double& x : v) x /= norm;
      const std::vector<double> hv = op.apply(v);
      energy = dot(v, hv);
      double r2 = 0.0;
      for (std::size_t i = 0; i < n; ++i) r2 += (hv[i] - energy * v[i]) * (hv[i] - energy * v[i]);
      residual = std::sqrt(r2);
    }
    if (!(residual <= kResidualTolerance)) {
      std::ostringstream out;
      out << "inverse iteration did not converge for level " << level << " (residual "
          << residual << ")";
      throw NumericalFailure(out.str());
    }

    // Trapezoid normalization (walls contribute zero) and sign convention.
    const double trapezoid_norm = std::sqrt(op.spacing * dot(v, v));
    double left_sum = 0.0;
    for (std::size_t i = 0; i < n / 2; ++i) left_sum += v[i];
    const double sign = left_sum < 0.0 ? -1.0 : 1.0;
    for (double& x : v) x *= sign / trapezoid_norm;

    double mirror_overlap = 0.0;
    for (std::size_t i = 0; i < n; ++i) mirror_overlap += v[i] * v[n - 1 - i];
    mirror_overlap *= op.spacing;
    if (std::abs(mirror_overlap) <= kParityThreshold) {
      std::ostringstream out;
      out << "parity of level " << level << " undetermined (mirror overlap " << mirror_overlap
          << ")";
      throw NumericalFailure(out.str());
    }

    if (!result.energies.empty() && !(energy > result.energies.back())) {
      throw NumericalFailure("eigenvalues not strictly increasing at level " +
                             std::to_string(level));
    }
    result.energies.push_back(energy);
    result.parities.push_back(mirror_overlap > 0.0 ? Parity::symmetric : Parity::antisymmetric);
    result.wavefunctions.push_back(std::move(v));
  }
  return result;
}

DoubletMap extract_doublet(const SpectrumResult& spectrum, double hbar) {
  if (spectrum.energies.size() < 3 || spectrum.parities.size() < 3) {
    throw StructuralError("doublet extraction needs at least three levels");
  }
  if (spectrum.parities[0] != Parity::symmetric || spectrum.parities[1] != Parity::antisymmetric ||
      spectrum.parities[2] != Parity::symmetric) {
    throw StructuralError("lowest levels do not have parity ordering (s, a, s)");
  }
  if (!(hbar > 0.0)) throw DomainError("hbar must be > 0");
  DoubletMap map;
  map.splitting = spectrum.energies[1] - spectrum.energies[0];
  map.gap = spectrum.energies[2] - spectrum.energies[0];
  map.omega = map.splitting / hbar;
  map.validity_ratio = map.splitting / map.gap;
  map.two_level_suspect = map.validity_ratio > kValidityThreshold;
  return map;
}

std::pair<std::vector<double>, std::vector<double>> localized_states(const SpectrumResult& spectrum) {
  if (spectrum.wavefunctions.size() < 2) {
    throw StructuralError("localized states need the lowest doublet");
  }
  const auto& sym = spectrum.wavefunctions[0];
  const auto& anti = spectrum.wavefunctions[1];
  std::vector<double> plus(sym.size());
  std::vector<double> minus(sym.size());
  for (std::size_t i = 0; i < sym.size(); ++i) {
    plus[i] = 0.5 * (sym[i] + anti[i]) * (sym[i] + anti[i]);
    minus[i] = 0.5 * (sym[i] - anti[i]) * (sym[i] - anti[i]);
  }
  return {std::move(plus), std::move(minus)};
}

double left_weight(const std::vector<double>& density, const std::vector<double>& grid,
                   double spacing) {
  double sum = 0.0;
  for (std::size_t i = 0; i < density.size(); ++i) {
    if (grid[i] < 0.0) {
      sum += density[i];
    } else if (grid[i] == 0.0) {
      sum += 0.5 * density[i];
    }
  }
  return sum * spacing;
}

}  // namespace tunnel
