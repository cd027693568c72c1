#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tunnel/qstate.hpp"

namespace tunnel {

using Matrix4c = Eigen::Matrix<Complex, 4, 4>;
using Vector4c = Eigen::Matrix<Complex, 4, 1>;

enum class ChannelKind { dephasing, spinflip, custom };

std::string_view to_string(ChannelKind kind);
ChannelKind channel_kind_from_string(std::string_view name);

/// One Lindblad channel. The jump operator is sqrt(rate) * sigma_z for
/// dephasing, sqrt(rate) * sigma_x for spin flip, and sqrt(rate) * custom_operator
/// for custom channels.
struct ChannelSpec {
  ChannelKind kind = ChannelKind::dephasing;
  double rate = 0.0;
  std::optional<Matrix2c> custom_operator;

  static ChannelSpec dephasing(double k1) { return {ChannelKind::dephasing, k1, std::nullopt}; }
  static ChannelSpec spinflip(double k2) { return {ChannelKind::spinflip, k2, std::nullopt}; }
  static ChannelSpec custom(double rate, const Matrix2c& op) { return {ChannelKind::custom, rate, op}; }

  /// Full jump operator including the sqrt(rate) factor.
  Matrix2c jump_operator() const;
  /// Throws ConfigError when rate < 0 or the custom operator presence does not match the kind.
  void validate() const;
};

/// Tunnelling frequency plus decoherence channels; H = -(omega/2) sigma_z.
struct ModelSpec {
  double omega = 0.0;
  std::vector<ChannelSpec> channels;

  Matrix2c hamiltonian() const;
  double total_rate() const;
  void validate() const;
};

/// Generator acting on the column-stacked density matrix
/// vec(rho) = (rho00, rho10, rho01, rho11).
struct Superoperator {
  Matrix4c matrix = Matrix4c::Zero();

  Matrix2c apply(const Matrix2c& rho) const;
};

Vector4c stack(const Matrix2c& rho);
Matrix2c unstack(const Vector4c& v);

enum class Backend { analytic, rk4, exact, trajectories };

std::string_view to_string(Backend backend);
Backend backend_from_string(std::string_view name);

struct TimeSeries {
  std::vector<double> times;
  std::vector<BlochVector> states;
  Backend provenance = Backend::exact;

  std::size_t size() const { return times.size(); }
};

/// d rho / dt = -i[H, rho] + sum_k (G rho G^dag - 1/2 {G^dag G, rho}).
Matrix2c lindblad_rhs(const Matrix2c& rho, const ModelSpec& model);

Superoperator build_liouvillian(const ModelSpec& model);

/// 2 pi / (1000 max(omega, 2 sum(rates), 1)).
double default_step(const ModelSpec& model);

/// Classical fixed-step RK4 on lindblad_rhs. Between consecutive grid times
/// the integrator takes full steps and one final partial step so samples land
/// exactly on the grid. Throws NumericalFailure (with the offending time) when
/// a state violates the density matrix invariants.
TimeSeries evolve_rk4(const DensityMatrix& rho0, const ModelSpec& model,
                      const std::vector<double>& t_grid, std::optional<double> step = std::nullopt);

/// exp(t L) vec(rho0) evaluated independently at each grid time.
TimeSeries evolve_exact(const DensityMatrix& rho0, const ModelSpec& model,
                        const std::vector<double>& t_grid);

/// Propagator exp(t L) for a single time.
Matrix4c exact_propagator(const ModelSpec& model, double t);

/// Uniform grid of n_samples points on [0, t_end].
std::vector<double> uniform_grid(double t_end, std::size_t n_samples);

/// Validates grid shape: non-empty, finite, t >= 0, strictly increasing.
void check_time_grid(const std::vector<double>& t_grid);

}  // namespace tunnel
