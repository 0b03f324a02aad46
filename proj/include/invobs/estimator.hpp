#pragma once

#include <cmath>
#include <optional>

#include "invobs/hinf.hpp"
#include "invobs/partition.hpp"
#include "invobs/state_space.hpp"
#include "invobs/types.hpp"
#include "invobs/uio.hpp"

namespace invobs {

/// FIR reconstruction settings. WarmStart seeds each window with the
/// previous estimate (useful for step or slowly varying inputs); the first
/// window always falls back to Zero since no estimate exists yet.
struct FirConfig {
  std::int64_t n_d = 1;
  InitPolicy init_policy = InitPolicy::Zero;
};

/// Steps to discard before steady-state error metrics: 5 n / (1 - rho(A_hat)).
inline std::int64_t burn_in_steps(const ObserverGains& g, Eigen::Index n) {
  double rho = 0.0;
  const ComplexVector ev = g.A_hat.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) rho = std::max(rho, std::abs(ev(i)));
  require(rho < 1.0, errc::degenerate_zeros, "observer dynamics must be Schur stable");
  return static_cast<std::int64_t>(std::ceil(5.0 * static_cast<double>(n) / (1.0 - rho)));
}

/// Observer recursion over a measured output trace:
///   eta(j+1) = A_hat eta(j) + F [y(j); ...; y(j+n-1)],  x1_hat(j) = Mq^{-1} eta(j).
/// The estimate at index j is the reconstruction of the first q transformed
/// states at plant time j (no structural delay in the index; the window
/// means it becomes computable n-1 samples later).
inline SignalTrace run_uio(const ObserverGains& g, const PartitionedRealization& pr,
                           const SignalTrace& y, const Vector& eta0) {
  const Eigen::Index n = pr.n, l = pr.l, q = pr.q;
  require(y.dim() == l, errc::dimension_mismatch, "output trace dimension mismatch");
  require(eta0.size() == q, errc::dimension_mismatch, "eta0 must have dimension q");
  require(y.size() >= n + 1, errc::insufficient_data,
          "output trace must be longer than the window length n");

  const auto mq_lu = pr.Mq.partialPivLu();
  SignalTrace x1(y.start_index());
  Vector eta = eta0;
  Vector window(n * l);
  for (std::int64_t j = 0; j <= y.size() - n; ++j) {
    x1.push_back(mq_lu.solve(eta));
    for (Eigen::Index b = 0; b < n; ++b) window.segment(b * l, l) = y.sample(j + b);
    eta = g.A_hat * eta + g.F * window;
  }
  x1.push_back(mq_lu.solve(eta));
  return x1;
}

namespace detail {

/// Theta1 regressor at index j for the given path.
inline Vector theta1(const ZeroDynamics& zd, const SignalTrace& x1, const SignalTrace& y,
                     std::int64_t j) {
  if (zd.path == ZeroDynamics::Path::B1) {
    Vector th(2 * x1.dim());
    th << x1.at(j + 1), x1.at(j);
    return th;
  }
  Vector th(x1.dim() + y.dim());
  th << x1.at(j), y.at(j);
  return th;
}

inline std::vector<Matrix> az_inv_powers(const ZeroDynamics& zd, std::int64_t n_d) {
  std::vector<Matrix> pows(static_cast<std::size_t>(n_d + 1));
  pows[0] = Matrix::Identity(zd.dim, zd.dim);
  for (std::int64_t i = 1; i <= n_d; ++i)
    pows[static_cast<std::size_t>(i)] = zd.Az_inv * pows[static_cast<std::size_t>(i - 1)];
  return pows;
}

}  // namespace detail

/// Anticausal FIR reconstruction of the obstructed states, obtained by
/// telescoping x2(t) = Az^{-1} x2(t+1) - Az^{-1} Bz Theta1(t) for n_d steps:
///   x2_hat(t) = Az^{-nd} x20 - sum_{i=0}^{nd-1} Az^{-(i)} Bz~ Theta1_hat(t+i)
/// where x20 is the per-window initial guess at t + n_d. Emitted indices lag
/// the measured trace by exactly n + n_d.
inline SignalTrace run_fir_nmp(const ZeroDynamics& zd, const SignalTrace& x1_hat,
                               const SignalTrace& y, const FirConfig& cfg) {
  require(!zd.empty(), errc::insufficient_data,
          "no obstructed states to reconstruct: the system is fully minimum phase");
  require(cfg.n_d >= 1, errc::insufficient_data, "n_d must be at least 1");
  const Eigen::Index n = static_cast<Eigen::Index>(x1_hat.dim()) + zd.dim;
  const std::int64_t t_last = y.end_index() - n - cfg.n_d;
  require(t_last >= x1_hat.start_index(), errc::insufficient_data,
          "trace too short for the requested delay n_d");
  // data the telescoped sum needs
  const std::int64_t need_x1 =
      (zd.path == ZeroDynamics::Path::B1) ? t_last + cfg.n_d + 1 : t_last + cfg.n_d - 1;
  require(x1_hat.end_index() >= need_x1 && y.end_index() >= t_last + cfg.n_d - 1,
          errc::trace_misalignment, "estimate and output traces do not cover the FIR window");

  const auto pows = detail::az_inv_powers(zd, cfg.n_d);
  SignalTrace x2(x1_hat.start_index());
  Vector prev;  // previous emission, for WarmStart
  for (std::int64_t t = x1_hat.start_index(); t <= t_last; ++t) {
    Vector acc = Vector::Zero(zd.dim);
    if (cfg.init_policy == InitPolicy::WarmStart && prev.size() > 0) {
      acc = pows[static_cast<std::size_t>(cfg.n_d)] * prev;
    }
    for (std::int64_t i = 0; i < cfg.n_d; ++i) {
      acc -= pows[static_cast<std::size_t>(i)] * (zd.Bz_tilde * detail::theta1(zd, x1_hat, y, t + i));
    }
    x2.push_back(acc);
    prev = acc;
  }
  return x2;
}

/// Unknown input estimate from the reconstructed states:
///   B1 path: u_hat(t) = B1^+ (x1_hat(t+1) - A11 x1_hat(t) - A12 x2_hat(t))
///   D  path: u_hat(t) = D^+  (y(t) - C1 x1_hat(t) - C2 x2_hat(t))
/// For fully minimum-phase systems pass an empty x2_hat; the A12/C2 terms
/// drop out. Emission covers the largest index range all traces support.
inline SignalTrace reconstruct_input(const PartitionedRealization& pr, const ZeroDynamics& zd,
                                     const SignalTrace& x1_hat, const SignalTrace& x2_hat,
                                     const SignalTrace& y, double rank_tol = 1e-10) {
  const bool mp_only = zd.empty();
  const bool b1_path = mp_only || zd.path == ZeroDynamics::Path::B1;
  std::int64_t t0 = x1_hat.start_index();
  std::int64_t t1 = b1_path ? x1_hat.end_index() - 1 : x1_hat.end_index();
  if (!mp_only) {
    t0 = std::max(t0, x2_hat.start_index());
    t1 = std::min(t1, x2_hat.end_index());
  }
  if (!b1_path) {
    t0 = std::max(t0, y.start_index());
    t1 = std::min(t1, y.end_index());
  }
  require(t0 <= t1, errc::trace_misalignment, "traces share no common index range");

  SignalTrace u_hat(t0);
  if (b1_path) {
    const Matrix b1p = pinv(pr.B1, rank_tol);
    for (std::int64_t t = t0; t <= t1; ++t) {
      Vector rhs = x1_hat.at(t + 1) - pr.A11 * x1_hat.at(t);
      if (!mp_only) rhs -= pr.A12 * x2_hat.at(t);
      u_hat.push_back(b1p * rhs);
    }
  } else {
    const Matrix dp = pinv(pr.D, rank_tol);
    for (std::int64_t t = t0; t <= t1; ++t) {
      Vector rhs = y.at(t) - pr.C1 * x1_hat.at(t);
      if (!mp_only) rhs -= pr.C2 * x2_hat.at(t);
      u_hat.push_back(dp * rhs);
    }
  }
  return u_hat;
}

/// Worst-case steady reconstruction error for unit-energy inputs:
///   sigma_max(Az^{-nd}) * || (zI - A1)^{-1} B1 ||_inf
/// evaluated on the transformed realization. Zero when nothing is obstructed.
inline double nmp_error_bound(const ZeroDynamics& zd, const StateSpace& transformed,
                              std::int64_t n_d, int grid_points = 4096) {
  if (zd.empty()) return 0.0;
  Matrix pw = Matrix::Identity(zd.dim, zd.dim);
  for (std::int64_t i = 0; i < n_d; ++i) pw = zd.Az_inv * pw;
  Eigen::JacobiSVD<Matrix> svd(pw);
  const double sigma = svd.singularValues()(0);
  StateSpace state_path(transformed.A, transformed.B,
                        Matrix::Identity(transformed.n(), transformed.n()),
                        Matrix::Zero(transformed.n(), transformed.m()));
  return sigma * hinf_norm_grid(state_path, grid_points);
}

/// Gain propagating the obstructed-state error into the input estimate:
/// -B1^+ A12 (B1 path) or -D^+ C2 (D path); zero when nothing is obstructed.
inline Matrix input_error_gain(const PartitionedRealization& pr, const ZeroDynamics& zd,
                               double rank_tol = 1e-10) {
  if (zd.empty()) return Matrix::Zero(pr.m, 0);
  if (zd.path == ZeroDynamics::Path::B1) return -pinv(pr.B1, rank_tol) * pr.A12;
  return -pinv(pr.D, rank_tol) * pr.C2;
}

/// Error summary for a reconstruction run against simulated truth.
struct ErrorReport {
  double e_x2_bound = 0.0;
  Matrix e_u_gain;
  SignalTrace e_x2_trace;
  SignalTrace e_u_trace;
  double max_steady_e_x1 = 0.0;
  double max_steady_e_x2 = 0.0;
  double max_steady_e_u = 0.0;
};

namespace detail {
inline SignalTrace trace_difference(const SignalTrace& a, const SignalTrace& b) {
  const std::int64_t t0 = std::max(a.start_index(), b.start_index());
  const std::int64_t t1 = std::min(a.end_index(), b.end_index());
  require(t0 <= t1, errc::trace_misalignment, "traces share no common index range");
  SignalTrace d(t0);
  for (std::int64_t t = t0; t <= t1; ++t) d.push_back(a.at(t) - b.at(t));
  return d;
}

inline double max_norm_from(const SignalTrace& t, std::int64_t from_index) {
  double worst = 0.0;
  for (std::int64_t k = std::max(from_index, t.start_index()); k <= t.end_index(); ++k)
    worst = std::max(worst, t.at(k).norm());
  return worst;
}
}  // namespace detail

}  // namespace invobs
