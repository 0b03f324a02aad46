#pragma once

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

#include "invobs/state_space.hpp"
#include "invobs/types.hpp"

namespace invobs {

/// Finite transmission zeros split by modulus against the unit circle.
/// Zeros are stored with multiplicity (repeated entries) and sorted by
/// (real, imag) for determinism.
struct ZeroClassification {
  std::vector<Complex> mp_zeros;           // |z| < 1 - tol
  std::vector<Complex> nmp_zeros;          // |z| > 1 + tol
  std::vector<Complex> unit_circle_zeros;  // | |z| - 1 | <= tol
  Eigen::Index padding_count = 0;          // n - (finite zero count)
  double unit_circle_tol = 1e-6;

  Eigen::Index finite_count() const {
    return static_cast<Eigen::Index>(mp_zeros.size() + nmp_zeros.size() +
                                     unit_circle_zeros.size());
  }
  Eigen::Index alpha() const { return static_cast<Eigen::Index>(mp_zeros.size()); }
  Eigen::Index beta() const { return static_cast<Eigen::Index>(nmp_zeros.size()); }

  std::vector<Complex> all_finite() const {
    std::vector<Complex> all = mp_zeros;
    all.insert(all.end(), unit_circle_zeros.begin(), unit_circle_zeros.end());
    all.insert(all.end(), nmp_zeros.begin(), nmp_zeros.end());
    return all;
  }
};

namespace detail {
inline void sort_complex(std::vector<Complex>& v) {
  std::sort(v.begin(), v.end(), [](const Complex& a, const Complex& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
}
}  // namespace detail

/// Transmission zeros of a square system as the finite generalized
/// eigenvalues of the Rosenbrock pencil
///   [A - zI  B]
///   [C       D]
/// computed by QZ. Pairs with |beta| below 1e-10 relative to |alpha|+|beta|
/// are the infinite eigenvalues and are discarded.
inline ZeroClassification transmission_zeros(const StateSpace& sys, double tol = 1e-6) {
  require(sys.square(), errc::unsupported_system,
          "transmission zeros are computed for square systems only");
  const Eigen::Index n = sys.n(), m = sys.m(), l = sys.l();
  const Eigen::Index sz = n + l;
  Matrix pencil_a(sz, sz), pencil_b(sz, sz);
  pencil_a << sys.A, sys.B, sys.C, sys.D;
  pencil_b.setZero();
  pencil_b.topLeftCorner(n, n) = Matrix::Identity(n, n);

  Eigen::GeneralizedEigenSolver<Matrix> ges;
  ges.compute(pencil_a, pencil_b, /*computeEigenvectors=*/false);
  require(ges.info() == Eigen::Success, errc::unsupported_system,
          "QZ iteration failed on the Rosenbrock pencil");

  ZeroClassification zc;
  zc.unit_circle_tol = tol;
  for (Eigen::Index i = 0; i < sz; ++i) {
    const Complex alpha = ges.alphas()(i);
    const double beta = ges.betas()(i);
    if (std::abs(beta) <= 1e-10 * (std::abs(alpha) + std::abs(beta))) continue;  // at infinity
    const Complex z = alpha / beta;
    const double r = std::abs(z);
    if (std::abs(r - 1.0) <= tol) {
      zc.unit_circle_zeros.push_back(z);
    } else if (r < 1.0) {
      zc.mp_zeros.push_back(z);
    } else {
      zc.nmp_zeros.push_back(z);
    }
  }
  detail::sort_complex(zc.mp_zeros);
  detail::sort_complex(zc.nmp_zeros);
  detail::sort_complex(zc.unit_circle_zeros);
  zc.padding_count = n - zc.finite_count();
  require(zc.padding_count >= 0, errc::unsupported_system,
          "more finite zeros than states; pencil classification failed");
  return zc;
}

}  // namespace invobs
