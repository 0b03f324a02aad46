#pragma once

#include <Eigen/SVD>

#include "invobs/types.hpp"

namespace invobs {

/// Moore-Penrose pseudo-inverse via SVD. Singular values at or below
/// rank_tol * sigma_max are treated as zero; the rest are reciprocated.
/// A zero matrix maps to the zero matrix of transposed shape.
inline Matrix pinv(const Matrix& mx, double rank_tol = 1e-10) {
  if (mx.rows() == 0 || mx.cols() == 0) return Matrix::Zero(mx.cols(), mx.rows());
  Eigen::JacobiSVD<Matrix> svd(mx, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double cutoff = rank_tol * sv(0);
  Vector inv = Vector::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff && sv(i) > 0.0) inv(i) = 1.0 / sv(i);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

/// Numerical rank with the same threshold convention as pinv.
inline Eigen::Index numerical_rank(const Matrix& mx, double rank_tol = 1e-10) {
  if (mx.rows() == 0 || mx.cols() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(mx);
  const auto& sv = svd.singularValues();
  const double cutoff = rank_tol * sv(0);
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff && sv(i) > 0.0) ++r;
  }
  return r;
}

}  // namespace invobs
