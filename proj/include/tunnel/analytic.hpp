#pragma once

#include <vector>

#include "tunnel/dynamics.hpp"
#include "tunnel/qstate.hpp"

namespace tunnel {

enum class DampingRegime { underdamped, critical, overdamped };

/// |omega^2 - k2^2|^{1/2} together with the sign of omega^2 - k2^2.
struct EpsilonValue {
  DampingRegime regime = DampingRegime::underdamped;
  double value = 0.0;
};

EpsilonValue epsilon(double omega, double k2);

// Closed forms for a single channel, derived from the Bloch equations of
// H = -(omega/2) sigma_z with one dephasing or one spin-flip channel.

/// Dephasing: rho01(t) = 1/2 sin(theta) e^{-i phi} e^{(-2 k1 + i omega) t}, populations frozen.
DensityMatrix dephasing_solution(const PureStateAngles& angles, double k1, double omega, double t);
/// 1/2 [1 + e^{-2 k1 t} cos(omega t)] for the left-localized initial state.
double dephasing_left_prob(double k1, double omega, double t);
/// cos^2(theta) + e^{-4 k1 t} sin^2(theta).
double dephasing_purity(double theta, double k1, double t);

/// Spin-flip coherence c(t) = 2 rho10(t) = Sx + i Sy:
///   e^{-k2 t} sin(theta) [e^{i phi} C(t) + (k2 e^{-i phi} - i omega e^{i phi}) S(t)]
/// with C = cos(eps t), S = sin(eps t)/eps, continued to cosh/sinh when k2 > omega
/// and to C = 1, S = t at k2 = omega.
Complex spinflip_coherence(const PureStateAngles& angles, double k2, double omega, double t);
DensityMatrix spinflip_solution(const PureStateAngles& angles, double k2, double omega, double t);
/// 1/2 [1 + e^{-k2 t}(C(t) + k2 S(t))].
double spinflip_left_prob(double k2, double omega, double t);
/// |c(t)|^2 + e^{-4 k2 t} cos^2(theta).
double spinflip_purity(const PureStateAngles& angles, double k2, double omega, double t);

/// Closed-form series for a model with exactly one dephasing or spin-flip
/// channel. Throws ConfigError for any other channel layout.
TimeSeries analytic_series(const PureStateAngles& angles, const ModelSpec& model,
                           const std::vector<double>& t_grid);

/// Literal variants of the closed forms, kept only so the
/// comparison tooling can show where they disagree with the equations of motion.
namespace literal {

/// rho01 = 1/2 e^{-i phi} sin(theta) e^{-2(k1 + i omega) t}.
Complex dephasing_coherence(const PureStateAngles& angles, double k1, double omega, double t);
/// c(t) with e^{-i phi} and e^{i phi} swapped relative to spinflip_coherence.
Complex spinflip_coherence(const PureStateAngles& angles, double k2, double omega, double t);
/// 1/2 (1 + e^{-k2 t}) (cos(eps t) + (k2/eps) sin(eps t)).
double spinflip_left_prob(double k2, double omega, double t);

}  // namespace literal

}  // namespace tunnel
