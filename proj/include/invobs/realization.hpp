#pragma once

#include "invobs/polynomial.hpp"
#include "invobs/state_space.hpp"
#include "invobs/types.hpp"

namespace invobs {

/// Controllable canonical realization of the SISO rational num(z)/den(z).
/// Requires deg(num) <= deg(den). With monic den z^n + a1 z^{n-1} + ... + an
/// and strictly proper part c1 z^{n-1} + ... + cn:
///   A = [-a1 ... -an; I 0],  B = e1,  C = [c1 ... cn],  D = direct term.
inline StateSpace tf_to_ss(const Poly& num_in, const Poly& den_in) {
  Poly den = poly_trim(den_in);
  Poly num = poly_trim(num_in);
  const int n = poly_degree(den);
  require(poly_degree(num) <= n, errc::unsupported_system,
          "improper transfer function: numerator degree exceeds denominator degree");
  require(n >= 0 && den[0] != 0.0, errc::unsupported_system, "empty denominator");
  // normalize to monic denominator, rescaling the numerator to match
  const double den0 = den[0];
  for (double& c : den) c /= den0;
  Poly numn(static_cast<std::size_t>(n + 1), 0.0);
  std::copy(num.begin(), num.end(), numn.end() - static_cast<std::ptrdiff_t>(num.size()));
  for (double& c : numn) c /= den0;
  const double d0 = numn[0];
  if (n == 0) {
    return StateSpace(Matrix::Zero(0, 0), Matrix::Zero(0, 1), Matrix::Zero(1, 0),
                      Matrix::Constant(1, 1, numn[0]));
  }
  Matrix A = Matrix::Zero(n, n);
  for (int j = 0; j < n; ++j) A(0, j) = -den[static_cast<std::size_t>(j + 1)];
  for (int i = 1; i < n; ++i) A(i, i - 1) = 1.0;
  Matrix B = Matrix::Zero(n, 1);
  B(0, 0) = 1.0;
  Matrix C(1, n);
  for (int j = 0; j < n; ++j) {
    // strictly proper part: num - d0 * den
    C(0, j) = numn[static_cast<std::size_t>(j + 1)] - d0 * den[static_cast<std::size_t>(j + 1)];
  }
  Matrix D = Matrix::Constant(1, 1, d0);
  return StateSpace(A, B, C, D);
}

/// Realization from zeros/poles/gain: num = gain * prod(z - z_i), den = prod(z - p_j).
inline StateSpace zpk_to_ss(const std::vector<Complex>& zeros, const std::vector<Complex>& poles,
                            double gain) {
  require(zeros.size() <= poles.size(), errc::unsupported_system,
          "improper transfer function: more zeros than poles");
  Poly num = poly_from_roots(zeros);
  for (double& c : num) c *= gain;
  Poly den = poly_from_roots(poles);
  return tf_to_ss(num, den);
}

}  // namespace invobs
