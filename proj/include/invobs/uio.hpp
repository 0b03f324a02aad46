#pragma once

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

#include "invobs/pinv.hpp"
#include "invobs/state_space.hpp"
#include "invobs/types.hpp"
#include "invobs/zeros.hpp"

namespace invobs {

/// Gains of the unknown input observer
///   eta(k+1) = A_hat eta(k) + F Y(k),   Y(k) = [y(k); ...; y(k+n-1)]
/// estimating eta(k) -> M x(k). They satisfy
///   (i)   spectral radius of A_hat < 1
///   (ii)  A_hat M - M A + F Cn = 0
///   (iii) F Dn - M B In = 0
/// with M of full row rank q = n - beta for simple minimum-phase zeros.
struct ObserverGains {
  Matrix M;      // q x n
  Matrix A_hat;  // q x q, block diagonal (real blocks for conjugate pairs)
  Matrix F;      // q x (n l)
  Eigen::Index q = 0;
  std::vector<Complex> stable_eigs;  // target eigenvalues actually used
};

/// Gamma = A - B In Dn^+ Cn. Its eigenvalues are the transmission zeros of
/// the square system padded with n - p zeros at the origin.
inline Matrix gamma_matrix(const StateSpace& sys, double rank_tol = 1e-10) {
  require(sys.square(), errc::unsupported_system, "gamma matrix requires a square system");
  const BlockMatrices bm = stack_block_matrices(sys);
  return sys.A - sys.B * bm.In_selector * pinv(bm.Dn, rank_tol) * bm.Cn;
}

/// Residual report for the observer conditions:
///   (spectral radius of A_hat, ||A_hat M - M A + F Cn||_F, ||F Dn - M B In||_F).
struct UioResiduals {
  double spectral_radius = 0.0;
  double sylvester = 0.0;   // condition (ii)
  double input_decoupling = 0.0;  // condition (iii)
};

inline UioResiduals verify_uio_conditions(const ObserverGains& g, const StateSpace& sys) {
  const BlockMatrices bm = stack_block_matrices(sys);
  UioResiduals r;
  if (g.A_hat.rows() > 0) {
    const ComplexVector ev = g.A_hat.eigenvalues();
    for (Eigen::Index i = 0; i < ev.size(); ++i)
      r.spectral_radius = std::max(r.spectral_radius, std::abs(ev(i)));
  }
  r.sylvester = (g.A_hat * g.M - g.M * sys.A + g.F * bm.Cn).norm();
  r.input_decoupling = (g.F * bm.Dn - g.M * sys.B * bm.In_selector).norm();
  return r;
}

namespace detail {

/// Left null space of a complex matrix: rows w with w N = 0, i.e. the
/// conjugated U columns for singular values at or below rank_tol * sigma_max.
inline ComplexMatrix left_null_space(const ComplexMatrix& n_mat, double rank_tol) {
  Eigen::JacobiSVD<ComplexMatrix> svd(n_mat, Eigen::ComputeFullU);
  const auto& sv = svd.singularValues();
  const double cutoff = sv.size() > 0 ? rank_tol * sv(0) : 0.0;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > cutoff && sv(i) > 0.0) ++rank;
  const Eigen::Index dim = n_mat.rows() - rank;
  ComplexMatrix null_rows(dim, n_mat.rows());
  for (Eigen::Index i = 0; i < dim; ++i)
    null_rows.row(i) = svd.matrixU().col(rank + i).adjoint();
  return null_rows;
}

/// Candidate (m, f) row pairs for one target eigenvalue: the left null
/// space of the stacked window realization
///   N(lambda) = [A - lambda I, -B In; -Cn, Dn]
/// so that m (A - lambda I) = f Cn and f Dn = m B In hold jointly, which is
/// conditions (ii) and (iii) restricted to an A_hat eigenvalue lambda.
inline ComplexMatrix candidate_rows(const StateSpace& sys, const BlockMatrices& bm,
                                    Complex lambda, double rank_tol) {
  const Eigen::Index n = sys.n(), m = sys.m(), l = sys.l();
  ComplexMatrix stacked(n + n * l, n + n * m);
  stacked.topLeftCorner(n, n) =
      sys.A.cast<Complex>() - lambda * ComplexMatrix::Identity(n, n);
  stacked.topRightCorner(n, n * m) = (-sys.B * bm.In_selector).cast<Complex>();
  stacked.bottomLeftCorner(n * l, n) = (-bm.Cn).cast<Complex>();
  stacked.bottomRightCorner(n * l, n * m) = bm.Dn.cast<Complex>();
  return left_null_space(stacked, rank_tol);
}

/// Scale so the m part has unit 2-norm and the largest-magnitude entry of m
/// is real positive (rows are defined only up to a complex scale).
inline bool normalize_candidate(ComplexVector& m_part, ComplexVector& f_part) {
  const double mn = m_part.norm();
  if (mn <= 1e-9 * (m_part.norm() + f_part.norm()) || mn == 0.0) return false;
  Eigen::Index imax = 0;
  for (Eigen::Index i = 1; i < m_part.size(); ++i)
    if (std::abs(m_part(i)) > std::abs(m_part(imax))) imax = i;
  const Complex scale = std::abs(m_part(imax)) / (m_part(imax) * mn);
  m_part *= scale;
  f_part *= scale;
  return true;
}

/// Joint residual of one complex row pair (m, f) against conditions (ii)
/// and (iii) for the target eigenvalue lambda.
inline double row_residual(const StateSpace& sys, const BlockMatrices& bm,
                           const ComplexVector& m_part, const ComplexVector& f_part,
                           Complex lambda) {
  const Eigen::RowVectorXcd m = m_part.transpose();
  const Eigen::RowVectorXcd f = f_part.transpose();
  const double r2 = (lambda * m - m * sys.A.cast<Complex>() + f * bm.Cn.cast<Complex>()).norm();
  const double r3 =
      (f * bm.Dn.cast<Complex>() - m * (sys.B * bm.In_selector).cast<Complex>()).norm();
  return std::hypot(r2, r3);
}

/// Left-eigenvector rows of Gamma at lambda, completed with the minimum-norm
/// f solving f [Cn Dn] = [m (A - lambda I), m B In]. These are the rows the
/// eigenstructure construction produces directly; padding and repeated
/// eigenvalues draw the remaining rows from the stacked null space.
inline std::vector<std::pair<ComplexVector, ComplexVector>> eigenvector_rows(
    const StateSpace& sys, const BlockMatrices& bm, const Matrix& gamma, Complex lambda,
    double match_tol = 1e-6) {
  const Eigen::Index n = sys.n();
  const Eigen::Index wcols = n + bm.Dn.cols();
  std::vector<std::pair<ComplexVector, ComplexVector>> rows;
  Eigen::EigenSolver<Matrix> es(gamma.transpose());
  ComplexMatrix window_t(wcols, bm.Cn.rows());  // [Cn Dn]^T
  window_t.topRows(n) = bm.Cn.cast<Complex>().transpose();
  window_t.bottomRows(bm.Dn.cols()) = bm.Dn.cast<Complex>().transpose();
  Eigen::JacobiSVD<ComplexMatrix> lsq(window_t, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Matrix bin = sys.B * bm.In_selector;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(es.eigenvalues()(i) - lambda) > match_tol * (1.0 + std::abs(lambda))) continue;
    const ComplexVector m_part = es.eigenvectors().col(i);
    ComplexVector rhs(wcols);
    rhs.head(n) = sys.A.cast<Complex>().transpose() * m_part - lambda * m_part;
    rhs.tail(bm.Dn.cols()) = bin.cast<Complex>().transpose() * m_part;
    rows.emplace_back(m_part, lsq.solve(rhs));
  }
  return rows;
}

struct TargetGroup {
  Complex lambda;           // representative (imag >= 0)
  Eigen::Index multiplicity = 0;
  bool complex_pair = false;  // consumes lambda and conj(lambda)
};

/// Stable target eigenvalues Theta_alpha (MP zeros) followed by the n - p
/// padding zeros at the origin, grouped with multiplicity. Conjugate pairs
/// collapse into one group handled as a 2x2 real block per vector.
inline std::vector<TargetGroup> stable_targets(const ZeroClassification& zc,
                                               double group_tol = 1e-9) {
  std::vector<Complex> mp = zc.mp_zeros;  // sorted by (re, im) already
  std::vector<TargetGroup> groups;
  std::vector<bool> used(mp.size(), false);
  for (std::size_t i = 0; i < mp.size(); ++i) {
    if (used[i] || mp[i].imag() < 0.0) continue;
    TargetGroup g;
    g.lambda = mp[i];
    g.complex_pair = mp[i].imag() > group_tol * (1.0 + std::abs(mp[i]));
    if (!g.complex_pair) g.lambda = Complex(mp[i].real(), 0.0);
    for (std::size_t j = 0; j < mp.size(); ++j) {
      if (used[j]) continue;
      if (std::abs(mp[j] - g.lambda) <= group_tol * (1.0 + std::abs(g.lambda))) {
        used[j] = true;
        ++g.multiplicity;
      } else if (g.complex_pair &&
                 std::abs(mp[j] - std::conj(g.lambda)) <=
                     group_tol * (1.0 + std::abs(g.lambda))) {
        used[j] = true;  // the conjugate partner, counted with the group
      }
    }
    groups.push_back(g);
  }
  if (zc.padding_count > 0) {
    // pool with an existing zero-valued group if the system has a zero at 0
    bool pooled = false;
    for (auto& g : groups) {
      if (!g.complex_pair && std::abs(g.lambda) <= group_tol) {
        g.multiplicity += zc.padding_count;
        pooled = true;
        break;
      }
    }
    if (!pooled) groups.push_back({Complex(0.0, 0.0), zc.padding_count, false});
  }
  // larger-magnitude stable zeros first, padding at the end
  std::stable_sort(groups.begin(), groups.end(), [](const TargetGroup& a, const TargetGroup& b) {
    return std::abs(a.lambda) > std::abs(b.lambda);
  });
  return groups;
}

}  // namespace detail

/// Observer synthesis per target eigenvalue. For each stable lambda in
/// Theta_alpha together with the padding zeros at the origin, the row pairs
/// (m, f) are drawn from the left null space of the stacked matrix
/// [A - lambda I, -B In; -Cn, Dn]; rows are kept greedily while they raise
/// rank(M), up to the group multiplicity, targeting rank n - beta.
/// Conjugate pairs contribute their real and imaginary parts with a 2x2
/// rotation block in A_hat, keeping all gains real.
inline ObserverGains synthesize_uio(const StateSpace& sys, const ZeroClassification& zc,
                                    double eps = 1e-8, double rank_tol = 1e-10) {
  require(sys.square(), errc::unsupported_system, "observer synthesis requires a square system");
  require(is_minimal(sys, rank_tol), errc::not_minimal,
          "observer synthesis requires a minimal realization");
  require(zc.unit_circle_zeros.empty(), errc::degenerate_zeros,
          "transmission zeros on the unit circle: factor them out first");
  const Eigen::Index n = sys.n();
  const Eigen::Index q_target = n - zc.beta();
  require(q_target > 0, errc::all_zeros_nmp,
          "all transmission zeros are non-minimum phase; no stable targets exist");

  const BlockMatrices bm = stack_block_matrices(sys);
  const Matrix gamma = gamma_matrix(sys, rank_tol);
  const auto groups = detail::stable_targets(zc);

  std::vector<Vector> m_rows, f_rows;
  std::vector<Matrix> blocks;
  std::vector<Complex> used_eigs;
  Eigen::Index rank_now = 0;

  // M rows are unit norm, so independence has an absolute meaning: adding a
  // row must keep the smallest singular value of M above this floor. Near
  // copies of an already-selected row (the numerical shadow of a defective
  // eigenvalue) sit many decades below it.
  constexpr double independence_floor = 1e-6;
  auto try_accept = [&](const std::vector<Vector>& mr, const std::vector<Vector>& fr,
                        const Matrix& blk, std::initializer_list<Complex> eigs) {
    Matrix trial(rank_now + static_cast<Eigen::Index>(mr.size()), n);
    for (Eigen::Index i = 0; i < rank_now; ++i) trial.row(i) = m_rows[static_cast<std::size_t>(i)];
    for (std::size_t i = 0; i < mr.size(); ++i)
      trial.row(rank_now + static_cast<Eigen::Index>(i)) = mr[i];
    Eigen::JacobiSVD<Matrix> svd(trial);
    if (svd.singularValues()(svd.singularValues().size() - 1) <= independence_floor) return false;
    for (std::size_t i = 0; i < mr.size(); ++i) {
      m_rows.push_back(mr[i]);
      f_rows.push_back(fr[i]);
    }
    blocks.push_back(blk);
    used_eigs.insert(used_eigs.end(), eigs);
    rank_now = static_cast<Eigen::Index>(m_rows.size());
    return true;
  };

  for (const auto& g : groups) {
    // eigenvector rows first, then the stacked null space for whatever the
    // group multiplicity still needs (padding zeros, repeated eigenvalues)
    auto candidates = detail::eigenvector_rows(sys, bm, gamma, g.lambda);
    const ComplexMatrix null_cand = detail::candidate_rows(sys, bm, g.lambda, rank_tol);
    for (Eigen::Index c = 0; c < null_cand.rows(); ++c) {
      candidates.emplace_back(null_cand.row(c).head(n).transpose(),
                              null_cand.row(c).tail(null_cand.cols() - n).transpose());
    }
    Eigen::Index taken = 0;
    for (auto& [m_part, f_part] : candidates) {
      if (taken >= g.multiplicity) break;
      if (!detail::normalize_candidate(m_part, f_part)) continue;
      if (detail::row_residual(sys, bm, m_part, f_part, g.lambda) > eps) continue;
      if (!g.complex_pair) {
        // the imaginary part of a real-lambda candidate is spurious
        if (m_part.imag().norm() > 1e-8 * m_part.norm()) continue;
        if (try_accept({m_part.real()}, {f_part.real()},
                       Matrix::Constant(1, 1, g.lambda.real()), {g.lambda})) {
          ++taken;
        }
      } else {
        Matrix blk(2, 2);
        blk << g.lambda.real(), -g.lambda.imag(), g.lambda.imag(), g.lambda.real();
        if (try_accept({m_part.real(), m_part.imag()}, {f_part.real(), f_part.imag()}, blk,
                       {g.lambda, std::conj(g.lambda)})) {
          taken += 2;
        }
      }
    }
  }

  require(rank_now == q_target, errc::degenerate_zeros,
          "could not reach rank n - beta = " + std::to_string(q_target) +
          " (reached " + std::to_string(rank_now) +
          "); repeated minimum-phase zeros need the prefilter route");

  ObserverGains g;
  g.q = rank_now;
  g.M = Matrix(rank_now, n);
  g.F = Matrix(rank_now, bm.Cn.rows());
  for (Eigen::Index i = 0; i < rank_now; ++i) {
    g.M.row(i) = m_rows[static_cast<std::size_t>(i)];
    g.F.row(i) = f_rows[static_cast<std::size_t>(i)];
  }
  g.A_hat = Matrix::Zero(rank_now, rank_now);
  Eigen::Index at = 0;
  for (const auto& blk : blocks) {
    g.A_hat.block(at, at, blk.rows(), blk.cols()) = blk;
    at += blk.rows();
  }
  g.stable_eigs = used_eigs;

  const UioResiduals res = verify_uio_conditions(g, sys);
  require(res.spectral_radius < 1.0, errc::degenerate_zeros,
          "synthesized observer dynamics are not Schur stable");
  require(res.sylvester <= eps && res.input_decoupling <= eps, errc::degenerate_zeros,
          "observer conditions exceed the residual gate");
  return g;
}

}  // namespace invobs
