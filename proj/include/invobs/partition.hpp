#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>

#include "invobs/pinv.hpp"
#include "invobs/state_space.hpp"
#include "invobs/types.hpp"
#include "invobs/uio.hpp"
#include "invobs/zeros.hpp"

namespace invobs {

/// Similarity transform separating states the observer reconstructs from
/// those obstructed by non-minimum-phase zeros. From the LQ factorization
/// M = L T1 (computed as a full QR of M^T) with L = [Mq 0], the first q
/// transformed states are recovered as Mq^{-1} eta.
struct PartitionedRealization {
  Matrix T1;  // n x n orthogonal, T1 T1^T = I
  Matrix L;   // q x n, [Mq 0]
  Matrix Mq;  // q x q lower triangular, invertible
  Matrix A11, A12, A21, A22;
  Matrix B1, B2;
  Matrix C1, C2;
  Matrix D;
  Eigen::Index n = 0, q = 0, m = 0, l = 0;

  Matrix A1() const {
    Matrix a(n, n);
    a << A11, A12, A21, A22;
    return a;
  }
  Matrix B1_full() const {
    Matrix b(n, m);
    b << B1, B2;
    return b;
  }
  Matrix C1_full() const {
    Matrix c(l, n);
    c << C1, C2;
    return c;
  }
  /// The transformed quadruple (T1 A T1^T, T1 B, C T1^T, D) as a system.
  StateSpace transformed_system() const { return StateSpace(A1(), B1_full(), C1_full(), D); }
};

inline PartitionedRealization partition_states(const ObserverGains& g, const StateSpace& sys,
                                               double rank_tol = 1e-10) {
  const Eigen::Index n = sys.n(), q = g.q;
  require(q > 0 && q <= n, errc::rank_loss, "observer rank must satisfy 0 < q <= n");
  require(g.M.rows() == q && g.M.cols() == n, errc::dimension_mismatch,
          "gain dimensions inconsistent with the system");

  // Full orthogonal factorization of M^T: M^T = Q R, so M = R^T Q^T = L T1
  // with T1 = Q^T square even when q < n.
  Eigen::HouseholderQR<Matrix> qr(g.M.transpose());
  Matrix Q = qr.householderQ() * Matrix::Identity(n, n);
  Matrix R = qr.matrixQR().topRows(q).triangularView<Eigen::Upper>();

  // sign convention: positive diagonal of Mq
  for (Eigen::Index i = 0; i < q; ++i) {
    if (R(i, i) < 0.0) {
      R.row(i) *= -1.0;
      Q.col(i) *= -1.0;
    }
  }
  // deterministic signs for the complement directions
  for (Eigen::Index j = q; j < n; ++j) {
    Eigen::Index imax = 0;
    for (Eigen::Index i = 1; i < n; ++i)
      if (std::abs(Q(i, j)) > std::abs(Q(imax, j))) imax = i;
    if (Q(imax, j) < 0.0) Q.col(j) *= -1.0;
  }

  PartitionedRealization pr;
  pr.n = n;
  pr.q = q;
  pr.m = sys.m();
  pr.l = sys.l();
  pr.T1 = Q.transpose();
  pr.Mq = R.transpose();  // q x q lower triangular
  const double mq_min = pr.Mq.diagonal().cwiseAbs().minCoeff();
  const double mq_max = pr.Mq.diagonal().cwiseAbs().maxCoeff();
  require(mq_max > 0.0 && mq_min > rank_tol * mq_max, errc::rank_loss,
          "M lost row rank; Mq is numerically singular");
  pr.L = Matrix::Zero(q, n);
  pr.L.leftCols(q) = pr.Mq;

  const Matrix At = pr.T1 * sys.A * pr.T1.transpose();
  const Matrix Bt = pr.T1 * sys.B;
  const Matrix Ct = sys.C * pr.T1.transpose();
  pr.A11 = At.topLeftCorner(q, q);
  pr.A12 = At.topRightCorner(q, n - q);
  pr.A21 = At.bottomLeftCorner(n - q, q);
  pr.A22 = At.bottomRightCorner(n - q, n - q);
  pr.B1 = Bt.topRows(q);
  pr.B2 = Bt.bottomRows(n - q);
  pr.C1 = Ct.leftCols(q);
  pr.C2 = Ct.rightCols(n - q);
  pr.D = sys.D;
  return pr;
}

/// Dynamics of the obstructed states after eliminating the input, either
/// through B1 (when it has full column rank) or through D. Forward form
///   x2(k+1) = Az x2(k) + Bz Theta1(k)
/// and the anticausal rearrangement
///   x2(k) = Az^{-1} x2(k+1) - Az^{-1} Bz Theta1(k).
struct ZeroDynamics {
  enum class Path { B1, D };
  Path path = Path::B1;
  Matrix Az;        // (n-q) x (n-q), eigenvalues are the NMP zeros
  Matrix Bz;        // (n-q) x 2q [B1 path] or (n-q) x (q+l) [D path]
  Matrix Cz1, Cz2;  // B1 path only; Cz2 vanishes by construction
  Matrix Az_inv;    // Az^{-1}, Schur stable
  Matrix Bz_tilde;  // Az^{-1} Bz
  Eigen::Index dim = 0;  // n - q

  bool empty() const { return dim == 0; }
};

inline ZeroDynamics zero_dynamics(const PartitionedRealization& pr, double rank_tol = 1e-10) {
  ZeroDynamics zd;
  zd.dim = pr.n - pr.q;
  if (zd.dim == 0) return zd;  // fully minimum phase: nothing left to track

  const bool b1_ok = numerical_rank(pr.B1, rank_tol) == pr.B1.cols();
  const bool d_ok = numerical_rank(pr.D, rank_tol) == pr.D.cols();
  require(b1_ok || d_ok, errc::not_reconstructible,
          "neither B1 nor D has full column rank; the obstructed states cannot be estimated");

  if (b1_ok) {
    zd.path = ZeroDynamics::Path::B1;
    const Matrix b1p = pinv(pr.B1, rank_tol);
    zd.Az = pr.A22 - pr.B2 * b1p * pr.A12;
    zd.Bz = Matrix(zd.dim, 2 * pr.q);
    zd.Bz << pr.B2 * b1p, pr.A21 - pr.B2 * b1p * pr.A11;
    zd.Cz1 = Matrix(pr.l, 2 * pr.q);
    zd.Cz1 << pr.D * b1p, pr.C1 - pr.D * b1p * pr.A11;
    zd.Cz2 = pr.C2 - pr.D * b1p * pr.A12;
  } else {
    zd.path = ZeroDynamics::Path::D;
    const Matrix dp = pinv(pr.D, rank_tol);
    zd.Az = pr.A22 - pr.B2 * dp * pr.C2;
    zd.Bz = Matrix(zd.dim, pr.q + pr.l);
    zd.Bz << pr.A21 - pr.B2 * dp * pr.C1, pr.B2 * dp;
  }

  Eigen::FullPivLU<Matrix> lu(zd.Az);
  require(lu.isInvertible(), errc::zero_dynamics_contradiction,
          "Az is singular: an eigenvalue at the origin contradicts it carrying only "
          "non-minimum-phase zeros");
  zd.Az_inv = lu.inverse();
  zd.Bz_tilde = zd.Az_inv * zd.Bz;
  return zd;
}

struct ZeroDynamicsReport {
  double eigenvalue_distance = 0.0;  // multiset distance eig(Az) vs NMP zeros
  double cz2_norm = 0.0;             // B1 path only
};

/// Greedy multiset match distance between two complex sets.
inline double complex_set_distance(std::vector<Complex> a, std::vector<Complex> b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  std::vector<bool> used(b.size(), false);
  for (const Complex& x : a) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t pick = b.size();
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (used[j]) continue;
      const double d = std::abs(x - b[j]);
      if (d < best) {
        best = d;
        pick = j;
      }
    }
    if (pick == b.size()) return std::numeric_limits<double>::infinity();
    used[pick] = true;
    worst = std::max(worst, best);
  }
  return worst;
}

inline ZeroDynamicsReport verify_zero_dynamics(const ZeroDynamics& zd,
                                               const ZeroClassification& zc) {
  ZeroDynamicsReport rep;
  std::vector<Complex> az_eigs;
  if (!zd.empty()) {
    const ComplexVector ev = zd.Az.eigenvalues();
    for (Eigen::Index i = 0; i < ev.size(); ++i) az_eigs.push_back(ev(i));
  }
  rep.eigenvalue_distance = complex_set_distance(az_eigs, zc.nmp_zeros);
  if (zd.path == ZeroDynamics::Path::B1 && zd.Cz2.size() > 0) rep.cz2_norm = zd.Cz2.norm();
  return rep;
}

}  // namespace invobs
