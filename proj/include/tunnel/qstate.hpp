#pragma once

#include <Eigen/Core>
#include <complex>
#include <string>

namespace tunnel {

using Complex = std::complex<double>;
using Matrix2c = Eigen::Matrix<Complex, 2, 2>;
using Vector2c = Eigen::Matrix<Complex, 2, 1>;

inline constexpr double kTraceTolerance = 1e-12;
inline constexpr double kHermiticityTolerance = 1e-14;
inline constexpr double kPositivityTolerance = 1e-10;

// Basis convention: index 0 = |s> (symmetric doublet state), index 1 = |a>
// (antisymmetric), so sigma_z = |s><s| - |a><a|. The localized states are
// |+x> = (|s> + |a>)/sqrt(2), taken as the LEFT well, and |-x> as the right well.

/// Pauli matrices in the {|s>, |a>} basis.
Matrix2c pauli_x();
Matrix2c pauli_y();
Matrix2c pauli_z();

struct BlochVector {
  double sx = 0.0;
  double sy = 0.0;
  double sz = 0.0;

  double norm_squared() const { return sx * sx + sy * sy + sz * sz; }
  bool operator==(const BlochVector&) const = default;
};

/// Polar angles of a pure state on the Bloch sphere; theta in [0, pi], phi in [0, 2pi).
struct PureStateAngles {
  double theta = 0.0;
  double phi = 0.0;
};

/// 2x2 Hermitian, unit-trace, positive semidefinite matrix. Construction
/// validates the invariants and throws DomainError on violation; there is no
/// silent renormalization.
class DensityMatrix {
 public:
  /// Maximally mixed state I/2.
  DensityMatrix();
  explicit DensityMatrix(const Matrix2c& elements);

  const Matrix2c& elements() const { return elements_; }
  Complex operator()(int row, int col) const { return elements_(row, col); }

  /// Smallest eigenvalue (closed form for 2x2 Hermitian).
  double min_eigenvalue() const;

  /// Checks trace, Hermiticity and positivity; returns an empty string when
  /// valid or a description of the first violated invariant.
  static std::string violation(const Matrix2c& m);

 private:
  Matrix2c elements_;
};

/// Pure state with the given polar angles:
/// 1/2 [[1+cos t, e^{-i p} sin t], [e^{i p} sin t, 1-cos t]].
DensityMatrix make_initial_state(const PureStateAngles& angles);

/// State vector (cos(theta/2), e^{i phi} sin(theta/2)) whose projector is make_initial_state(angles).
Vector2c make_initial_ket(const PureStateAngles& angles);

/// rho_01 = (sx - i sy)/2, rho_00 - rho_11 = sz; i.e. s_j = tr(rho sigma_j).
BlochVector to_bloch(const DensityMatrix& rho);
BlochVector to_bloch(const Matrix2c& rho);

/// rho = (I + sx sigma_x + sy sigma_y + sz sigma_z)/2. Throws DomainError when |s| > 1 + 1e-10.
DensityMatrix from_bloch(const BlochVector& s);

/// Bloch vector of the projector |psi><psi| for a normalized ket.
BlochVector ket_to_bloch(const Vector2c& psi);

/// zeta = 2 tr rho^2 - 1, the squared Bloch norm.
double purity(const DensityMatrix& rho);
double purity(const BlochVector& s);

/// Probability of the left well, (1 + sx)/2.
double left_probability(const DensityMatrix& rho);
double left_probability(const BlochVector& s);

}  // namespace tunnel
