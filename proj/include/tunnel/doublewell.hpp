#pragma once

#include <string_view>
#include <utility>
#include <vector>

namespace tunnel {

enum class BarrierShape { rectangular, gaussian };

std::string_view to_string(BarrierShape shape);
BarrierShape barrier_shape_from_string(std::string_view name);

/// Infinite square well on [-x_max, x_max] with a symmetric central barrier.
/// The rectangular barrier is v0 for |x| <= barrier_half_width; the gaussian
/// barrier has v0 peak height and half width at half maximum barrier_half_width.
struct PotentialSpec {
  double x_max = 1.0;
  double v0 = 0.0;
  double barrier_half_width = 0.1;
  BarrierShape barrier_shape = BarrierShape::rectangular;
  double mass = 1.0;
  double hbar = 1.0;

  double value(double x) const;
  /// Throws ConfigError when a field is out of range.
  void validate() const;
};

/// Symmetric tridiagonal finite-difference Hamiltonian on the interior grid.
struct TridiagonalOperator {
  std::vector<double> diagonal;
  std::vector<double> off_diagonal;  // size n - 1
  std::vector<double> grid;          // interior points x_i
  double spacing = 0.0;

  std::size_t size() const { return diagonal.size(); }
  std::vector<double> apply(const std::vector<double>& v) const;
};

enum class Parity { symmetric, antisymmetric };

std::string_view to_string(Parity parity);

struct SpectrumResult {
  std::vector<double> energies;
  std::vector<Parity> parities;
  /// One row per level, sampled on grid, with h * sum(psi^2) = 1 (trapezoid
  /// rule with the zero wall values). Sign fixed so the left half integrates positive.
  std::vector<std::vector<double>> wavefunctions;
  std::vector<double> grid;
  double spacing = 0.0;
};

struct DoubletMap {
  double omega = 0.0;
  double splitting = 0.0;
  double gap = 0.0;
  double validity_ratio = 0.0;
  /// Set when validity_ratio exceeds kValidityThreshold: the doublet is not
  /// well separated from the next one and the two-level reduction is suspect.
  bool two_level_suspect = false;
};

inline constexpr double kValidityThreshold = 0.05;

/// Central differences with Dirichlet walls at +-x_max:
/// diagonal hbar^2/(m h^2) + V(x_i), off-diagonal -hbar^2/(2 m h^2), h = 2 x_max/(n+1).
TridiagonalOperator build_hamiltonian(const PotentialSpec& potential, std::size_t n_grid);

/// Lowest n_levels eigenpairs by Sturm-sequence bisection and inverse iteration.
SpectrumResult solve_spectrum(const PotentialSpec& potential, std::size_t n_grid,
                              std::size_t n_levels);

/// Throws StructuralError unless the first three levels have parities (s, a, s).
DoubletMap extract_doublet(const SpectrumResult& spectrum, double hbar = 1.0);

/// |psi_s +- psi_a|^2 / 2 for the lowest doublet: first = "+" (left-localized),
/// second = "-" (right-localized).
std::pair<std::vector<double>, std::vector<double>> localized_states(const SpectrumResult& spectrum);

/// Integral of a grid density over x < 0 (the x = 0 sample, if any, counts half).
double left_weight(const std::vector<double>& density, const std::vector<double>& grid,
                   double spacing);

}  // namespace tunnel
