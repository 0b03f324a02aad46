#pragma once

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

#include "invobs/types.hpp"

namespace invobs {

/// Real polynomial coefficients, highest power first. poly[0] z^{deg} + ...
using Poly = std::vector<double>;

inline Poly poly_trim(Poly p, double tol = 0.0) {
  std::size_t lead = 0;
  while (lead + 1 < p.size() && std::abs(p[lead]) <= tol) ++lead;
  p.erase(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(lead));
  return p;
}

inline int poly_degree(const Poly& p) { return static_cast<int>(p.size()) - 1; }

inline Poly poly_mul(const Poly& a, const Poly& b) {
  Poly r(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
  return r;
}

/// Long division a / b; returns {quotient, remainder}.
inline std::pair<Poly, Poly> poly_div(const Poly& a, const Poly& b) {
  Poly bb = poly_trim(b);
  require(!(bb.size() == 1 && bb[0] == 0.0), errc::invalid_controller,
          "polynomial division by zero");
  Poly rem = a;
  if (rem.size() < bb.size()) return {Poly{0.0}, rem};
  Poly quo(rem.size() - bb.size() + 1, 0.0);
  for (std::size_t i = 0; i + bb.size() <= rem.size(); ++i) {
    const double c = rem[i] / bb[0];
    quo[i] = c;
    for (std::size_t j = 0; j < bb.size(); ++j) rem[i + j] -= c * bb[j];
  }
  rem.erase(rem.begin(), rem.begin() + static_cast<std::ptrdiff_t>(quo.size()));
  if (rem.empty()) rem = {0.0};
  return {quo, rem};
}

inline Complex poly_eval(const Poly& p, Complex z) {
  Complex acc(0.0, 0.0);
  for (double c : p) acc = acc * z + c;
  return acc;
}

/// Real monic-izable polynomial from complex roots; conjugate pairs are
/// matched so the product has real coefficients.
inline Poly poly_from_roots(std::vector<Complex> roots, double pair_tol = 1e-9) {
  Poly p{1.0};
  std::vector<bool> used(roots.size(), false);
  for (std::size_t i = 0; i < roots.size(); ++i) {
    if (used[i]) continue;
    const Complex r = roots[i];
    if (std::abs(r.imag()) <= pair_tol * (1.0 + std::abs(r))) {
      p = poly_mul(p, Poly{1.0, -r.real()});
      used[i] = true;
      continue;
    }
    // find the conjugate partner
    std::size_t partner = roots.size();
    double best = std::numeric_limits<double>::max();
    for (std::size_t j = i + 1; j < roots.size(); ++j) {
      if (used[j]) continue;
      const double d = std::abs(roots[j] - std::conj(r));
      if (d < best) {
        best = d;
        partner = j;
      }
    }
    require(partner < roots.size() && best <= 1e-6 * (1.0 + std::abs(r)),
            errc::unsupported_system, "complex roots must come in conjugate pairs");
    used[i] = used[partner] = true;
    p = poly_mul(p, Poly{1.0, -2.0 * r.real(), std::norm(r)});
  }
  return p;
}

/// Roots via the companion-matrix eigenvalues.
inline std::vector<Complex> poly_roots(const Poly& p_in) {
  Poly p = poly_trim(p_in, 0.0);
  const int deg = poly_degree(p);
  if (deg < 1) return {};
  Matrix comp = Matrix::Zero(deg, deg);
  for (int j = 0; j < deg; ++j) comp(0, j) = -p[static_cast<std::size_t>(j + 1)] / p[0];
  for (int i = 1; i < deg; ++i) comp(i, i - 1) = 1.0;
  Eigen::EigenSolver<Matrix> es(comp, /*computeEigenvectors=*/false);
  std::vector<Complex> roots(static_cast<std::size_t>(deg));
  for (int i = 0; i < deg; ++i) roots[static_cast<std::size_t>(i)] = es.eigenvalues()(i);
  std::sort(roots.begin(), roots.end(), [](const Complex& a, const Complex& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  return roots;
}

}  // namespace invobs
