#pragma once

#include <cmath>
#include <numbers>

#include "invobs/polynomial.hpp"
#include "invobs/realization.hpp"
#include "invobs/state_space.hpp"
#include "invobs/tracker.hpp"
#include "invobs/types.hpp"
#include "invobs/zeros.hpp"

namespace invobs {

/// SISO controller as a rational polynomial pair, highest power first.
struct Controller {
  Poly num{1.0};
  Poly den{1.0};
  int order() const { return poly_degree(den); }
};

inline Controller identity_controller() { return Controller{{1.0}, {1.0}}; }

/// The preset (z+1)/(2z): cancels a transmission zero at z = -1 and passes
/// DC unchanged. Usable for any SISO plant whose only unit-circle zero is -1.
inline Controller default_unit_circle_controller() { return Controller{{1.0, 1.0}, {2.0, 0.0}}; }

/// A SISO plant split as G(z) = prod(uc_factors) * G_red(z) where the
/// reduced plant keeps the full denominator and has no unit-circle zeros.
struct SisoFactorization {
  StateSpace original;
  StateSpace reduced;
  std::vector<Poly> uc_factors;  // (z - r) or quadratic real factors for pairs
  double gain = 1.0;
  Poly num, den;          // original transfer function polynomials
  Poly reduced_num;       // num with the unit-circle factors divided out
};

namespace detail {
/// Numerator/denominator of a SISO system from its zeros, poles and gain;
/// the gain is fixed by matching the response at a probe point.
inline void siso_polynomials(const StateSpace& sys, const ZeroClassification& zc, Poly& num,
                             Poly& den, double& gain) {
  std::vector<Complex> zeros = zc.all_finite();
  std::vector<Complex> poles;
  const ComplexVector p = sys.poles();
  for (Eigen::Index i = 0; i < p.size(); ++i) poles.push_back(p(i));
  Poly num_monic = poly_from_roots(zeros);
  den = poly_from_roots(poles);
  double probe = 1.7;
  for (;; probe += 0.613) {
    bool clear = true;
    for (const auto& r : zeros)
      if (std::abs(Complex(probe, 0) - r) < 0.2) clear = false;
    for (const auto& r : poles)
      if (std::abs(Complex(probe, 0) - r) < 0.2) clear = false;
    if (clear) break;
  }
  const Complex g = sys.response(Complex(probe, 0))(0, 0) * poly_eval(den, probe) /
                    poly_eval(num_monic, probe);
  require(std::abs(g.imag()) <= 1e-8 * (1.0 + std::abs(g)), errc::unsupported_system,
          "transfer gain came out complex; zeros are not conjugate-closed");
  gain = g.real();
  num = num_monic;
  for (double& c : num) c *= gain;
}
}  // namespace detail

/// Extract the unit-circle zeros of a SISO plant into explicit polynomial
/// factors and re-realize the remaining dynamics in controllable canonical
/// form. The denominator is kept whole, so the reduced plant has the same
/// order and the product of the factors with its transfer function equals
/// the original exactly. Without unit-circle zeros this is the identity
/// factorization.
inline SisoFactorization factor_unit_circle_zeros(const StateSpace& sys, double tol = 1e-6) {
  require(sys.m() == 1 && sys.l() == 1, errc::unsupported_system,
          "unit-circle factorization handles SISO systems only");
  require(is_minimal(sys), errc::not_minimal, "factorization requires a minimal realization");
  const ZeroClassification zc = transmission_zeros(sys, tol);

  SisoFactorization fact;
  fact.original = sys;
  detail::siso_polynomials(sys, zc, fact.num, fact.den, fact.gain);

  Poly reduced_num = fact.num;
  std::vector<bool> used(zc.unit_circle_zeros.size(), false);
  for (std::size_t i = 0; i < zc.unit_circle_zeros.size(); ++i) {
    if (used[i]) continue;
    const Complex r = zc.unit_circle_zeros[i];
    Poly factor;
    if (std::abs(r.imag()) <= 1e-8) {
      factor = {1.0, -r.real()};
      used[i] = true;
    } else {
      std::size_t partner = i;
      for (std::size_t j = i + 1; j < zc.unit_circle_zeros.size(); ++j) {
        if (!used[j] && std::abs(zc.unit_circle_zeros[j] - std::conj(r)) < 1e-6) {
          partner = j;
          break;
        }
      }
      require(partner != i, errc::unsupported_system,
              "unpaired complex unit-circle zero; cannot form a real factor");
      used[i] = used[partner] = true;
      factor = {1.0, -2.0 * r.real(), std::norm(r)};
    }
    auto [quo, rem] = poly_div(reduced_num, factor);
    double rem_norm = 0.0, num_norm = 0.0;
    for (double c : rem) rem_norm = std::max(rem_norm, std::abs(c));
    for (double c : reduced_num) num_norm = std::max(num_norm, std::abs(c));
    require(rem_norm <= 1e-6 * (1.0 + num_norm), errc::unsupported_system,
            "unit-circle factor does not divide the numerator cleanly");
    reduced_num = quo;
    fact.uc_factors.push_back(factor);
  }
  fact.reduced_num = reduced_num;
  fact.reduced = tf_to_ss(reduced_num, fact.den);
  return fact;
}

namespace detail {
inline Poly product_of(const std::vector<Poly>& factors) {
  Poly p{1.0};
  for (const auto& f : factors) p = poly_mul(p, f);
  return p;
}

/// Causal simulation of the SISO rational num/den over a trace, zero initial
/// state, indices preserved.
inline SignalTrace filter_trace(const Poly& num, const Poly& den, const SignalTrace& in) {
  const StateSpace filt = tf_to_ss(num, den);
  if (filt.n() == 0) {
    SignalTrace out(in.start_index());
    for (std::int64_t i = 0; i < in.size(); ++i) out.push_back(filt.D * in.sample(i));
    return out;
  }
  return simulate(filt, Vector::Zero(filt.n()), in).outputs;
}
}  // namespace detail

/// Residual-checked division of the controller by the unit-circle factors:
/// H(z) = prod(z - z_i) H'(z). Returns the (proper, stable) H' polynomials.
inline std::pair<Poly, Poly> reduced_controller(const Controller& ctl,
                                                const std::vector<Poly>& uc_factors,
                                                double unit_circle_tol = 1e-6) {
  Poly hnum = ctl.num;
  for (const auto& f : uc_factors) {
    auto [quo, rem] = poly_div(hnum, f);
    double rem_norm = 0.0, num_norm = 0.0;
    for (double c : rem) rem_norm = std::max(rem_norm, std::abs(c));
    for (double c : hnum) num_norm = std::max(num_norm, std::abs(c));
    require(rem_norm <= 1e-9 * (1.0 + num_norm), errc::invalid_controller,
            "controller numerator must contain every unit-circle factor");
    hnum = quo;
  }
  require(poly_degree(poly_trim(hnum)) <= poly_degree(poly_trim(ctl.den)), errc::improper_chain,
          "reduced controller H' is improper; raise the controller order");
  for (const Complex& r : poly_roots(ctl.den)) {
    require(std::abs(r) < 1.0 - unit_circle_tol, errc::invalid_controller,
            "controller poles must be strictly inside the unit circle");
  }
  return {hnum, ctl.den};
}

/// Desired trajectory seen by the reduced-plant pipeline: y_d filtered by
/// H'(z) = H(z) / prod(z - z_i), realized as one stable causal filter (the
/// bare 1/(z - z_i) is never simulated on its own).
inline SignalTrace prefilter_desired(const SignalTrace& y_d, const Controller& ctl,
                                     const std::vector<Poly>& uc_factors,
                                     double unit_circle_tol = 1e-6) {
  require(y_d.dim() == 1, errc::unsupported_system, "prefilter handles scalar trajectories");
  auto [hnum, hden] = reduced_controller(ctl, uc_factors, unit_circle_tol);
  return detail::filter_trace(hnum, hden, y_d);
}

/// Grid evaluation of max |1 - H(e^{i theta})|: how far the controller is
/// from transparent. The norm-minimizing controller design is out of scope;
/// this is the diagnostic the trade-off needs.
inline double controller_mismatch_norm(const Controller& ctl, int grid_points = 4096) {
  double worst = 0.0;
  for (int j = 0; j < grid_points; ++j) {
    const double theta = 2.0 * std::numbers::pi * j / grid_points;
    const Complex z(std::cos(theta), std::sin(theta));
    const Complex h = poly_eval(ctl.num, z) / poly_eval(ctl.den, z);
    worst = std::max(worst, std::abs(1.0 - h));
  }
  return worst;
}

/// Stable recursion y'(k+1) = p y'(k) + y_d(k) from Y'(z) = Y_d(z)/(z - p),
/// the prefilter that splits one repeated minimum-phase zero off the plant.
/// The unknown true initial value decays at rate |p|; y0 seeds it.
inline SignalTrace repeated_mp_prefilter(const SignalTrace& y_d, double p, double y0) {
  require(std::abs(p) < 1.0, errc::not_mp_factor,
          "prefilter pole must be a strictly minimum-phase zero");
  require(y_d.dim() == 1, errc::unsupported_system, "prefilter handles scalar trajectories");
  SignalTrace out(y_d.start_index());
  double v = y0;
  for (std::int64_t i = 0; i < y_d.size(); ++i) {
    out.push_back(Vector::Constant(1, v));
    v = p * v + y_d.sample(i)(0);
  }
  return out;
}

struct UnitCircleTrackingResult {
  SignalTrace u_tilde;   // input from the controller-filtered pipeline
  SignalTrace y_actual;  // original plant output under u_tilde
  SignalTrace e_c;       // y_ideal - y_actual, the controller-induced error
};

/// Preview tracking through the unit-circle route: the desired trajectory is
/// filtered by H', the standard pipeline runs on the reduced plant, and the
/// resulting input drives the original plant. The error trace compares
/// against the ideal (H = I) chain, whose exact 1/(z - z_i) prefilter is
/// simulated only inside this finite-horizon difference.
inline UnitCircleTrackingResult track_with_unit_circle(const SisoFactorization& fact,
                                                       const Controller& ctl,
                                                       const SignalTrace& y_d,
                                                       const TrackingConfig& cfg,
                                                       double eps = 1e-8) {
  const StateSpace& red = fact.reduced;
  const ZeroClassification zc = transmission_zeros(red);
  const ObserverGains g = synthesize_uio(red, zc, eps);
  const PartitionedRealization pr = partition_states(g, red);
  const ZeroDynamics zd = zero_dynamics(pr);

  TrackingConfig inner_cfg = cfg;
  inner_cfg.x0_plant = Vector::Zero(red.n());

  const SignalTrace filtered = prefilter_desired(y_d, ctl, fact.uc_factors);
  const TrackingResult run = track(red, g, pr, zd, filtered, inner_cfg);

  Vector x0 = cfg.x0_plant.size() > 0 ? cfg.x0_plant : Vector::Zero(fact.original.n());
  UnitCircleTrackingResult out;
  out.u_tilde = run.u_hat;
  out.y_actual = simulate(fact.original, x0, run.u_hat).outputs;

  // ideal chain: same pipeline driven by the exactly divided trajectory
  const SignalTrace ideal_in =
      fact.uc_factors.empty()
          ? y_d
          : detail::filter_trace({1.0}, detail::product_of(fact.uc_factors), y_d);
  const TrackingResult ideal = track(red, g, pr, zd, ideal_in, inner_cfg);
  const SignalTrace y_ideal = simulate(fact.original, x0, ideal.u_hat).outputs;
  out.e_c = detail::trace_difference(y_ideal, out.y_actual);
  return out;
}

/// Frequency response of the whole controller-error chain
///   G_red(z) * T(z) * (1 - H(z))
/// where T is the pipeline transfer from its driving trace to u_hat. e_c is
/// this chain applied to y_d; its norm gives the Theorem-style bound.
inline Complex unit_circle_error_chain(const SisoFactorization& fact, const Controller& ctl,
                                       const ObserverGains& g, const PartitionedRealization& pr,
                                       const ZeroDynamics& zd, std::int64_t n_d, Complex z) {
  const Complex g_red = fact.reduced.response(z)(0, 0);
  const Complex chain = inverse_chain_response(g, pr, zd, n_d, z)(0, 0);
  const Complex h = poly_eval(ctl.num, z) / poly_eval(ctl.den, z);
  return g_red * chain * (1.0 - h);
}

}  // namespace invobs
