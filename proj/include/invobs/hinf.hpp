#pragma once

#include <Eigen/SVD>

#include <cmath>
#include <numbers>

#include "invobs/state_space.hpp"
#include "invobs/types.hpp"

namespace invobs {

/// Grid evaluation of the discrete-time infinity norm:
///   max over z = e^{i theta} of sigma_max(C (zI - A)^{-1} B + D)
/// with theta on a uniform grid of grid_points samples over [0, 2pi).
/// This is a lower bound of the true norm; refining the grid by an integer
/// factor keeps all previous sample points, so the value is monotone
/// non-decreasing under refinement.
inline double hinf_norm_grid(const StateSpace& sys, int grid_points = 4096,
                             double unit_circle_tol = 1e-6) {
  require(grid_points >= 1, errc::norm_undefined, "grid must have at least one point");
  const ComplexVector p = sys.poles();
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    require(std::abs(std::abs(p(i)) - 1.0) > unit_circle_tol, errc::norm_undefined,
            "infinity norm undefined: pole on the unit circle");
  }
  double best = 0.0;
  for (int j = 0; j < grid_points; ++j) {
    const double theta = 2.0 * std::numbers::pi * j / grid_points;
    const Complex z(std::cos(theta), std::sin(theta));
    Eigen::JacobiSVD<ComplexMatrix> svd(sys.response(z));
    best = std::max(best, svd.singularValues()(0));
  }
  return best;
}

}  // namespace invobs
