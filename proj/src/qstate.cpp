#include "tunnel/qstate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "tunnel/errors.hpp"

namespace tunnel {

namespace {
constexpr Complex kI{0.0, 1.0};
}

Matrix2c pauli_x() {
  Matrix2c m;
  m << 0.0, 1.0, 1.0, 0.0;
  return m;
}

Matrix2c pauli_y() {
  Matrix2c m;
  m << 0.0, -kI, kI, 0.0;
  return m;
}

Matrix2c pauli_z() {
  Matrix2c m;
  m << 1.0, 0.0, 0.0, -1.0;
  return m;
}

DensityMatrix::DensityMatrix() : elements_(Matrix2c::Identity() * 0.5) {}

DensityMatrix::DensityMatrix(const Matrix2c& elements) : elements_(elements) {
  if (auto why = violation(elements_); !why.empty()) {
    throw DomainError("invalid density matrix: " + why);
  }
}

double DensityMatrix::min_eigenvalue() const {
  const double a = elements_(0, 0).real();
  const double d = elements_(1, 1).real();
  const double half_gap = std::hypot(0.5 * (a - d), std::abs(elements_(0, 1)));
  return 0.5 * (a + d) - half_gap;
}

std::string DensityMatrix::violation(const Matrix2c& m) {
  std::ostringstream out;
  out.precision(17);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      if (!std::isfinite(m(i, j).real()) || !std::isfinite(m(i, j).imag())) {
        return "non-finite element";
      }
    }
  }
  const double herm = std::max({std::abs(m(0, 0).imag()), std::abs(m(1, 1).imag()),
                                std::abs(m(1, 0) - std::conj(m(0, 1)))});
  if (herm > kHermiticityTolerance) {
    out << "Hermiticity error " << herm;
    return out.str();
  }
  const double trace = m(0, 0).real() + m(1, 1).real();
  if (std::abs(trace - 1.0) > kTraceTolerance) {
    out << "trace " << trace;
    return out.str();
  }
  const double a = m(0, 0).real();
  const double d = m(1, 1).real();
  const double min_eig = 0.5 * (a + d) - std::hypot(0.5 * (a - d), std::abs(m(0, 1)));
  if (min_eig < -kPositivityTolerance) {
    out << "negative eigenvalue " << min_eig;
    return out.str();
  }
  return {};
}

DensityMatrix make_initial_state(const PureStateAngles& angles) {
  const double theta = angles.theta;
  const double phi = angles.phi;
  if (!(theta >= 0.0 && theta <= std::numbers::pi) ||
      !(phi >= 0.0 && phi < 2.0 * std::numbers::pi)) {
    std::ostringstream out;
    out << "angles out of range: theta=" << theta << " phi=" << phi;
    throw DomainError(out.str());
  }
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  Matrix2c m;
  m << 0.5 * (1.0 + c), 0.5 * s * std::polar(1.0, -phi),  //
      0.5 * s * std::polar(1.0, phi), 0.5 * (1.0 - c);
  return DensityMatrix(m);
}

Vector2c make_initial_ket(const PureStateAngles& angles) {
  make_initial_state(angles);  // range check
  Vector2c psi;
  psi << std::cos(0.5 * angles.theta), std::polar(std::sin(0.5 * angles.theta), angles.phi);
  return psi;
}

BlochVector to_bloch(const Matrix2c& rho) {
  return {2.0 * rho(0, 1).real(), -2.0 * rho(0, 1).imag(), rho(0, 0).real() - rho(1, 1).real()};
}

BlochVector to_bloch(const DensityMatrix& rho) { return to_bloch(rho.elements()); }

DensityMatrix from_bloch(const BlochVector& s) {
  if (!(s.norm_squared() <= std::pow(1.0 + kPositivityTolerance, 2))) {
    std::ostringstream out;
    out.precision(17);
    out << "unphysical Bloch vector, |s|^2 = " << s.norm_squared();
    throw DomainError(out.str());
  }
  Matrix2c m;
  m << 0.5 * (1.0 + s.sz), 0.5 * Complex(s.sx, -s.sy),  //
      0.5 * Complex(s.sx, s.sy), 0.5 * (1.0 - s.sz);
  return DensityMatrix(m);
}

BlochVector ket_to_bloch(const Vector2c& psi) {
  const Complex coherence = psi(0) * std::conj(psi(1));
  return {2.0 * coherence.real(), -2.0 * coherence.imag(), std::norm(psi(0)) - std::norm(psi(1))};
}

double purity(const BlochVector& s) { return s.norm_squared(); }

double purity(const DensityMatrix& rho) { return purity(to_bloch(rho)); }

double left_probability(const BlochVector& s) { return 0.5 * (1.0 + s.sx); }

double left_probability(const DensityMatrix& rho) { return left_probability(to_bloch(rho)); }

}  // namespace tunnel
