#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>

namespace tunnel {

/// Matrix exponential by scaling and squaring with the degree-13 Pade
/// approximant. The scaling exponent is chosen from the 1-norm so that the
/// scaled matrix lies inside the region where the [13/13] approximant is
/// accurate to unit roundoff.
template <typename Derived>
typename Derived::PlainObject expm(const Eigen::MatrixBase<Derived>& a) {
  using Matrix = typename Derived::PlainObject;
  using Scalar = typename Derived::Scalar;

  static constexpr std::array<double, 14> b = {
      64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
      129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
      1323241920.0,        40840800.0,          960960.0,           16380.0,
      182.0,               1.0};
  constexpr double theta13 = 5.371920351148152;

  const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm1 > theta13) {
    squarings = static_cast<int>(std::ceil(std::log2(norm1 / theta13)));
  }
  const Matrix scaled = a / Scalar(std::ldexp(1.0, squarings));
  const Matrix ident = Matrix::Identity(a.rows(), a.cols());

  const Matrix a2 = scaled * scaled;
  const Matrix a4 = a2 * a2;
  const Matrix a6 = a4 * a2;

  const Matrix u_inner = Scalar(b[13]) * a6 + Scalar(b[11]) * a4 + Scalar(b[9]) * a2;
  const Matrix u = scaled * (a6 * u_inner + Scalar(b[7]) * a6 + Scalar(b[5]) * a4 +
                             Scalar(b[3]) * a2 + Scalar(b[1]) * ident);
  const Matrix v_inner = Scalar(b[12]) * a6 + Scalar(b[10]) * a4 + Scalar(b[8]) * a2;
  const Matrix v = a6 * v_inner + Scalar(b[6]) * a6 + Scalar(b[4]) * a4 + Scalar(b[2]) * a2 +
                   Scalar(b[0]) * ident;

  Matrix result = (v - u).partialPivLu().solve(v + u);
  for (int k = 0; k < squarings; ++k) {
    result = (result * result).eval();
  }
  return result;
}

}  // namespace tunnel
