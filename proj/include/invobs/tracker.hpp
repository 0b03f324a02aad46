#pragma once

#include <deque>
#include <optional>

#include "invobs/estimator.hpp"
#include "invobs/hinf.hpp"
#include "invobs/partition.hpp"
#include "invobs/state_space.hpp"
#include "invobs/types.hpp"
#include "invobs/uio.hpp"

namespace invobs {

/// Preview tracking settings. At plant index k the controller may read the
/// desired trajectory up to k + preview; the pipeline needs n + n_d of it.
struct TrackingConfig {
  std::int64_t n_d = 1;
  std::int64_t preview = -1;  // -1: exactly n + n_d
  InitPolicy init_policy = InitPolicy::Zero;
  Vector x0_plant;  // empty: zero initial plant state
};

/// Online inversion loop: feed desired-output samples as they become
/// available; u_hat(k) is emitted once y_d(k .. k+n+n_d-1) has been seen.
/// One session is a single-threaded stateful filter; run several sessions
/// for parallel experiments.
class TrackingSession {
 public:
  TrackingSession(const ObserverGains& g, const PartitionedRealization& pr,
                  const ZeroDynamics& zd, const TrackingConfig& cfg, std::int64_t start_index)
      : g_(g), pr_(pr), zd_(zd), cfg_(cfg), mq_lu_(pr.Mq.partialPivLu()),
        y_start_(start_index), emit_at_(start_index) {
    require(cfg.n_d >= 1, errc::preview_exhausted, "n_d must be at least 1");
    const std::int64_t needed = pr_.n + cfg_.n_d;
    if (cfg_.preview < 0) preview_ = needed;
    else preview_ = cfg_.preview;
    require(preview_ >= needed, errc::preview_exhausted,
            "preview must cover at least n + n_d samples");
    if (!zd_.empty()) pows_ = detail::az_inv_powers(zd_, cfg_.n_d);
    if (zd_.empty() || zd_.path == ZeroDynamics::Path::B1) b1_pinv_ = pinv(pr_.B1);
    else d_pinv_ = pinv(pr_.D);
    eta_ = Vector::Zero(pr_.q);
    eta_index_ = start_index;
  }

  /// Append the next desired-output sample; returns the inputs that became
  /// computable (zero or one per call once the preview buffer fills).
  std::vector<std::pair<std::int64_t, Vector>> feed(const Vector& y_d) {
    require(y_d.size() == pr_.l, errc::dimension_mismatch, "desired output dimension mismatch");
    buffer_.push_back(y_d);
    advance_x1();
    std::vector<std::pair<std::int64_t, Vector>> out;
    while (auto u = try_emit()) out.push_back(*u);
    return out;
  }

  std::int64_t next_emit_index() const { return emit_at_; }

 private:
  // x1_hat(j) is computable once the window y_d(j .. j+n-1) is buffered.
  void advance_x1() {
    const Eigen::Index n = pr_.n, l = pr_.l;
    while (buffered_end_() >= eta_index_ + n - 1) {
      x1_.emplace_back(eta_index_, mq_lu_.solve(eta_));
      Vector window(n * l);
      for (Eigen::Index b = 0; b < n; ++b)
        window.segment(b * l, l) = sample_(eta_index_ + b);
      eta_ = g_.A_hat * eta_ + g_.F * window;
      ++eta_index_;
      // the emitter never looks back further than n_d + 1 estimates
      while (!x1_.empty() && x1_.front().first < emit_at_ - 1) x1_.pop_front();
    }
  }

  std::optional<std::pair<std::int64_t, Vector>> try_emit() {
    const std::int64_t k = emit_at_;
    const std::int64_t x1_needed = k + cfg_.n_d;  // covers u_hat's k+1 as well
    if (x1_.empty() || x1_.back().first < x1_needed) return std::nullopt;

    Vector x2;
    if (!zd_.empty()) {
      x2 = Vector::Zero(zd_.dim);
      if (cfg_.init_policy == InitPolicy::WarmStart && prev_x2_.size() > 0)
        x2 = pows_[static_cast<std::size_t>(cfg_.n_d)] * prev_x2_;
      for (std::int64_t i = 0; i < cfg_.n_d; ++i)
        x2 -= pows_[static_cast<std::size_t>(i)] * (zd_.Bz_tilde * theta1_(k + i));
      prev_x2_ = x2;
    }

    Vector u;
    if (zd_.empty() || zd_.path == ZeroDynamics::Path::B1) {
      Vector rhs = x1_at_(k + 1) - pr_.A11 * x1_at_(k);
      if (!zd_.empty()) rhs -= pr_.A12 * x2;
      u = b1_pinv_ * rhs;
    } else {
      Vector rhs = sample_(k) - pr_.C1 * x1_at_(k);
      rhs -= pr_.C2 * x2;
      u = d_pinv_ * rhs;
    }
    ++emit_at_;
    return std::make_pair(k, u);
  }

  Vector theta1_(std::int64_t j) const {
    if (zd_.path == ZeroDynamics::Path::B1) {
      Vector th(2 * pr_.q);
      th << x1_at_(j + 1), x1_at_(j);
      return th;
    }
    Vector th(pr_.q + pr_.l);
    th << x1_at_(j), sample_(j);
    return th;
  }

  const Vector& x1_at_(std::int64_t j) const {
    const std::int64_t off = j - x1_.front().first;
    require(off >= 0 && off < static_cast<std::int64_t>(x1_.size()), errc::preview_exhausted,
            "estimate buffer does not cover the requested index");
    return x1_[static_cast<std::size_t>(off)].second;
  }

  std::int64_t buffered_end_() const {
    return y_start_ + static_cast<std::int64_t>(buffer_.size()) - 1;
  }
  const Vector& sample_(std::int64_t j) const {
    return buffer_.at(static_cast<std::size_t>(j - y_start_));
  }

  ObserverGains g_;
  PartitionedRealization pr_;
  ZeroDynamics zd_;
  TrackingConfig cfg_;
  Eigen::PartialPivLU<Matrix> mq_lu_;
  std::vector<Matrix> pows_;
  Matrix b1_pinv_, d_pinv_;
  std::vector<Vector> buffer_;
  std::int64_t y_start_ = 0;
  std::int64_t preview_ = 0;

  Vector eta_;
  std::int64_t eta_index_ = 0;
  std::deque<std::pair<std::int64_t, Vector>> x1_;
  Vector prev_x2_;
  std::int64_t emit_at_ = 0;
};

struct TrackingResult {
  SignalTrace u_hat;     // applied input, indices [s, s+N-1-(n+n_d)+... ]
  SignalTrace y_actual;  // plant output under u_hat, same indices
  SignalTrace e_y;       // y_actual - y_d, same indices
};

/// Batch wrapper over the online loop: run the preview inversion over a
/// full desired trajectory, then drive the plant model with the result.
inline TrackingResult track(const StateSpace& sys, const ObserverGains& g,
                            const PartitionedRealization& pr, const ZeroDynamics& zd,
                            const SignalTrace& y_d, const TrackingConfig& cfg) {
  require(y_d.dim() == sys.l(), errc::dimension_mismatch, "desired trace dimension mismatch");
  require(y_d.size() >= pr.n + cfg.n_d, errc::preview_exhausted,
          "desired trajectory shorter than the preview window");
  TrackingSession session(g, pr, zd, cfg, y_d.start_index());
  SignalTrace u_hat(y_d.start_index());
  for (std::int64_t i = 0; i < y_d.size(); ++i) {
    for (auto& [k, u] : session.feed(y_d.sample(i))) {
      (void)k;
      u_hat.push_back(u);
    }
  }
  require(u_hat.size() > 0, errc::preview_exhausted, "no input samples could be emitted");

  Vector x0 = cfg.x0_plant.size() > 0 ? cfg.x0_plant : Vector::Zero(sys.n());
  require(x0.size() == sys.n(), errc::dimension_mismatch, "x0_plant dimension mismatch");
  TrackingResult r;
  r.u_hat = u_hat;
  r.y_actual = simulate(sys, x0, u_hat).outputs;
  r.e_y = detail::trace_difference(r.y_actual, y_d);
  return r;
}

/// Theorem-style tracking error bound for unit-energy exact inputs:
///   sigma_max(Az^{-nd}) ||C(zI-A)^{-1}B + D||_inf ||gain||_2 ||(zI-A1)^{-1}B1||_inf
/// with gain = B1^+ A12 or D^+ C2 by path. Zero for minimum-phase systems.
inline double tracking_error_bound(const StateSpace& sys, const PartitionedRealization& pr,
                                   const ZeroDynamics& zd, std::int64_t n_d,
                                   int grid_points = 4096) {
  if (zd.empty()) return 0.0;
  Matrix pw = Matrix::Identity(zd.dim, zd.dim);
  for (std::int64_t i = 0; i < n_d; ++i) pw = zd.Az_inv * pw;
  const double sigma = Eigen::JacobiSVD<Matrix>(pw).singularValues()(0);
  const double sys_norm = hinf_norm_grid(sys, grid_points);
  const double gain_norm =
      Eigen::JacobiSVD<Matrix>(input_error_gain(pr, zd)).singularValues()(0);
  StateSpace state_path(pr.A1(), pr.B1_full(), Matrix::Identity(pr.n, pr.n),
                        Matrix::Zero(pr.n, pr.m));
  return sigma * sys_norm * gain_norm * hinf_norm_grid(state_path, grid_points);
}

/// Frequency response of the inversion pipeline from the driving trace
/// (measured or desired outputs) to u_hat, at a complex point z. Mirrors
/// the session loop exactly: observer window, telescoped FIR with the Zero
/// policy, then the input formula for the active path.
inline ComplexMatrix inverse_chain_response(const ObserverGains& g,
                                            const PartitionedRealization& pr,
                                            const ZeroDynamics& zd, std::int64_t n_d, Complex z) {
  const Eigen::Index n = pr.n, q = pr.q, l = pr.l;
  // Z_M stacks the window: [I; zI; ...; z^{n-1} I]
  ComplexMatrix zm = ComplexMatrix::Zero(n * l, l);
  Complex zp(1.0, 0.0);
  for (Eigen::Index b = 0; b < n; ++b) {
    zm.block(b * l, 0, l, l) = zp * ComplexMatrix::Identity(l, l);
    zp *= z;
  }
  const ComplexMatrix calA =
      (pr.Mq.partialPivLu().solve(g.A_hat * pr.Mq)).cast<Complex>();
  const ComplexMatrix calF = pr.Mq.partialPivLu().solve(g.F).cast<Complex>();
  ComplexMatrix x1_resp =
      (z * ComplexMatrix::Identity(q, q) - calA).partialPivLu().solve(calF * zm);  // q x l

  ComplexMatrix x2_resp = ComplexMatrix::Zero(zd.dim, l);
  if (!zd.empty()) {
    const bool b1 = zd.path == ZeroDynamics::Path::B1;
    ComplexMatrix theta_resp(zd.Bz_tilde.cols(), l);
    if (b1) theta_resp << z * x1_resp, x1_resp;
    else theta_resp << x1_resp, ComplexMatrix::Identity(l, l);
    ComplexMatrix pw = ComplexMatrix::Identity(zd.dim, zd.dim);
    Complex zi(1.0, 0.0);
    for (std::int64_t i = 0; i < n_d; ++i) {
      x2_resp -= zi * pw * zd.Bz_tilde.cast<Complex>() * theta_resp;
      pw = zd.Az_inv.cast<Complex>() * pw;
      zi *= z;
    }
  }

  if (zd.empty() || zd.path == ZeroDynamics::Path::B1) {
    ComplexMatrix rhs = (z * ComplexMatrix::Identity(q, q) - pr.A11.cast<Complex>()) * x1_resp;
    if (!zd.empty()) rhs -= pr.A12.cast<Complex>() * x2_resp;
    return pinv(pr.B1).cast<Complex>() * rhs;
  }
  ComplexMatrix rhs = ComplexMatrix::Identity(l, l) - pr.C1.cast<Complex>() * x1_resp -
                      pr.C2.cast<Complex>() * x2_resp;
  return pinv(pr.D).cast<Complex>() * rhs;
}

}  // namespace invobs
