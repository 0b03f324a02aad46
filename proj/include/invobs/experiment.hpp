#pragma once

#include <filesystem>
#include <random>

#include "invobs/config.hpp"
#include "invobs/estimator.hpp"
#include "invobs/matrix_io.hpp"
#include "invobs/partition.hpp"
#include "invobs/state_space.hpp"
#include "invobs/tracker.hpp"
#include "invobs/types.hpp"
#include "invobs/uio.hpp"
#include "invobs/unit_circle.hpp"
#include "invobs/zeros.hpp"

namespace invobs {

/// What one experiment produced: scalar metrics in emission order, every
/// file written, and the overall tolerance verdict.
struct RunReport {
  std::vector<std::pair<std::string, double>> metrics;
  std::vector<std::string> files;  // paths relative to output_dir
  bool passed = false;

  double metric(const std::string& name) const {
    for (const auto& [k, v] : metrics)
      if (k == name) return v;
    fail(errc::bad_config, "no such metric: " + name);
  }
};

/// Deterministic excitation / trajectory generator.
inline SignalTrace generate_signal(const ExperimentConfig& cfg, Eigen::Index dim,
                                   std::int64_t count) {
  SignalTrace t(0);
  std::mt19937_64 rng(cfg.seed.value_or(0));
  std::uniform_real_distribution<double> uni(-cfg.amplitude, cfg.amplitude);
  for (std::int64_t k = 0; k < count; ++k) {
    Vector v(dim);
    switch (cfg.input_spec) {
      case InputSpec::Impulse:
        v = (k == 0) ? Vector::Constant(dim, cfg.amplitude) : Vector::Zero(dim);
        break;
      case InputSpec::Step:
        v = Vector::Constant(dim, cfg.amplitude);
        break;
      case InputSpec::Harmonic:
        for (Eigen::Index i = 0; i < dim; ++i)
          v(i) = cfg.amplitude * std::sin(cfg.frequency * static_cast<double>(k) + 0.5 * i);
        break;
      case InputSpec::RandomSeeded:
        for (Eigen::Index i = 0; i < dim; ++i) v(i) = uni(rng);
        break;
    }
    t.push_back(v);
  }
  return t;
}

namespace detail {

/// Writes outputs, tracking everything for the manifest; removes partial
/// outputs when a run fails mid-way.
class OutputSink {
 public:
  explicit OutputSink(std::string dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
  }

  std::string path(const std::string& name) const { return dir_ + "/" + name; }

  void trace(const std::string& name, const SignalTrace& t) {
    emit_csv(t, path(name));
    files_.push_back(name);
  }
  void matrix(const std::string& name, const Matrix& m) {
    save_matrix(path(name), m);
    files_.push_back(name);
  }
  void curve(const std::string& name, const std::vector<std::pair<std::int64_t, double>>& v) {
    emit_bound_curve(v, path(name));
    files_.push_back(name);
  }

  void discard_all() {
    for (const auto& f : files_) {
      std::error_code ec;
      std::filesystem::remove(path(f), ec);
    }
    files_.clear();
  }

  const std::vector<std::string>& files() const { return files_; }
  const std::string& dir() const { return dir_; }

 private:
  std::string dir_;
  std::vector<std::string> files_;
};

inline void write_report_file(OutputSink& sink, RunReport& report) {
  std::ostringstream os;
  for (const auto& [k, v] : report.metrics) os << k << " = " << format_sig12(v) << "\n";
  for (const auto& f : report.files) os << "file = " << f << "\n";
  os << "file = report.txt\n";
  os << "passed = " << (report.passed ? "true" : "false") << "\n";
  const std::string path = sink.path("report.txt");
  std::ofstream out(path);
  require(out.good(), errc::io_failure, "cannot open " + path);
  out << os.str();
  require(out.good(), errc::io_failure, "write failed for " + path);
  report.files.push_back("report.txt");
}

struct Pipeline {
  StateSpace sys;
  ZeroClassification zc;
  ObserverGains gains;
  PartitionedRealization pr;
  ZeroDynamics zd;
  UioResiduals residuals;
};

inline Pipeline build_pipeline(const StateSpace& sys, const Tolerances& tol) {
  Pipeline p;
  p.sys = sys;
  p.zc = transmission_zeros(sys, tol.unit_circle_tol);
  p.gains = synthesize_uio(sys, p.zc, tol.residual_tol, tol.rank_tol);
  p.pr = partition_states(p.gains, sys, tol.rank_tol);
  p.zd = zero_dynamics(p.pr, tol.rank_tol);
  p.residuals = verify_uio_conditions(p.gains, sys);
  return p;
}

inline void push_residual_metrics(RunReport& rep, const Pipeline& p) {
  rep.metrics.emplace_back("spectral_radius", p.residuals.spectral_radius);
  rep.metrics.emplace_back("residual_sylvester", p.residuals.sylvester);
  rep.metrics.emplace_back("residual_input_decoupling", p.residuals.input_decoupling);
  rep.metrics.emplace_back("q", static_cast<double>(p.gains.q));
  rep.metrics.emplace_back("nmp_zero_count", static_cast<double>(p.zc.beta()));
}

inline bool residuals_pass(const Pipeline& p, const Tolerances& tol) {
  return p.residuals.spectral_radius < 1.0 && p.residuals.sylvester <= tol.residual_tol &&
         p.residuals.input_decoupling <= tol.residual_tol;
}

/// Transformed truth split into the reconstructed/obstructed parts.
inline std::pair<SignalTrace, SignalTrace> transformed_truth(const PartitionedRealization& pr,
                                                             const SignalTrace& states) {
  SignalTrace x1(states.start_index()), x2(states.start_index());
  for (std::int64_t i = 0; i < states.size(); ++i) {
    const Vector xt = pr.T1 * states.sample(i);
    x1.push_back(xt.head(pr.q));
    x2.push_back(xt.tail(pr.n - pr.q));
  }
  return {x1, x2};
}

inline double l2_norm(const SignalTrace& t) {
  double acc = 0.0;
  for (std::int64_t i = 0; i < t.size(); ++i) acc += t.sample(i).squaredNorm();
  return std::sqrt(acc);
}

inline RunReport run_synthesize(const ExperimentConfig& cfg, OutputSink& sink) {
  const Pipeline p = build_pipeline(cfg.build_system(), cfg.tol);
  RunReport rep;
  sink.matrix("M.txt", p.gains.M);
  sink.matrix("A_hat.txt", p.gains.A_hat);
  sink.matrix("F.txt", p.gains.F);
  sink.matrix("T1.txt", p.pr.T1);
  sink.matrix("L.txt", p.pr.L);
  sink.matrix("Mq.txt", p.pr.Mq);
  if (!p.zd.empty()) {
    sink.matrix("Az.txt", p.zd.Az);
    sink.matrix("Bz.txt", p.zd.Bz);
    sink.matrix("Az_inv.txt", p.zd.Az_inv);
  }
  push_residual_metrics(rep, p);
  const auto zrep = verify_zero_dynamics(p.zd, p.zc);
  rep.metrics.emplace_back("zero_dynamics_eig_distance", zrep.eigenvalue_distance);
  rep.metrics.emplace_back("cz2_norm", zrep.cz2_norm);
  rep.passed = residuals_pass(p, cfg.tol) &&
               (p.zd.empty() || zrep.eigenvalue_distance <= 1e-6) &&
               zrep.cz2_norm <= 1e-8;
  return rep;
}

inline RunReport run_reconstruct(const ExperimentConfig& cfg, OutputSink& sink) {
  const Pipeline p = build_pipeline(cfg.build_system(), cfg.tol);
  const StateSpace& sys = p.sys;
  RunReport rep;

  const SignalTrace u_true = generate_signal(cfg, sys.m(), cfg.steps);
  Vector x0 = cfg.x0.size() > 0 ? cfg.x0 : Vector::Zero(sys.n());
  const SimulationResult sim = simulate(sys, x0, u_true);
  const auto [x1_true, x2_true] = transformed_truth(p.pr, sim.states);

  const SignalTrace x1_hat = run_uio(p.gains, p.pr, sim.outputs, Vector::Zero(p.gains.q));
  FirConfig fir{cfg.n_d, cfg.init_policy};
  SignalTrace x2_hat;
  if (!p.zd.empty()) x2_hat = run_fir_nmp(p.zd, x1_hat, sim.outputs, fir);
  const SignalTrace u_hat = reconstruct_input(p.pr, p.zd, x1_hat, x2_hat, sim.outputs,
                                              cfg.tol.rank_tol);

  sink.trace("y.csv", sim.outputs);
  sink.trace("u_true.csv", u_true);
  sink.trace("x1_true.csv", x1_true);
  sink.trace("x1_hat.csv", x1_hat);
  const SignalTrace e_x1 = trace_difference(x1_hat, x1_true);
  sink.trace("e_x1.csv", e_x1);
  SignalTrace e_x2, e_u = trace_difference(u_hat, u_true);
  if (!p.zd.empty()) {
    sink.trace("x2_true.csv", x2_true);
    sink.trace("x2_hat.csv", x2_hat);
    e_x2 = trace_difference(x2_hat, x2_true);
    sink.trace("e_x2.csv", e_x2);
  }
  sink.trace("u_hat.csv", u_hat);
  sink.trace("e_u.csv", e_u);

  push_residual_metrics(rep, p);
  const std::int64_t burn = burn_in_steps(p.gains, p.pr.n);
  const double bound = nmp_error_bound(p.zd, p.pr.transformed_system(), cfg.n_d,
                                       cfg.tol.grid_points);
  const Matrix gain = input_error_gain(p.pr, p.zd, cfg.tol.rank_tol);
  const double gain_norm =
      gain.size() > 0 ? Eigen::JacobiSVD<Matrix>(gain).singularValues()(0) : 0.0;
  const double e_x1_steady = max_norm_from(e_x1, e_x1.start_index() + burn);
  const double e_x2_steady =
      p.zd.empty() ? 0.0 : max_norm_from(e_x2, e_x2.start_index() + burn);
  const double e_u_steady = max_norm_from(e_u, e_u.start_index() + burn);
  const double input_l2 = l2_norm(u_true);
  rep.metrics.emplace_back("burn_in", static_cast<double>(burn));
  rep.metrics.emplace_back("nmp_error_bound_unit_energy", bound);
  rep.metrics.emplace_back("input_error_gain_norm", gain_norm);
  rep.metrics.emplace_back("input_l2", input_l2);
  rep.metrics.emplace_back("max_steady_e_x1", e_x1_steady);
  rep.metrics.emplace_back("max_steady_e_x2", e_x2_steady);
  rep.metrics.emplace_back("max_steady_e_u", e_u_steady);

  const double x1_scale = std::max(1.0, max_norm_from(x1_true, x1_true.start_index()));
  const double scaled_bound = bound * input_l2;
  rep.passed = residuals_pass(p, cfg.tol) && e_x1_steady <= 1e-6 * x1_scale &&
               (p.zd.empty() || e_x2_steady <= 1.01 * scaled_bound) &&
               e_u_steady <= 1.01 * gain_norm * scaled_bound + 1e-9;
  return rep;
}

inline RunReport run_track(const ExperimentConfig& cfg, OutputSink& sink) {
  const Pipeline p = build_pipeline(cfg.build_system(), cfg.tol);
  RunReport rep;
  const SignalTrace y_d = generate_signal(cfg, p.sys.l(), cfg.steps);
  TrackingConfig tcfg;
  tcfg.n_d = cfg.n_d;
  tcfg.init_policy = cfg.init_policy;
  tcfg.x0_plant = cfg.x0;
  const TrackingResult run = track(p.sys, p.gains, p.pr, p.zd, y_d, tcfg);

  sink.trace("y_d.csv", y_d);
  sink.trace("u_hat.csv", run.u_hat);
  sink.trace("y_actual.csv", run.y_actual);
  sink.trace("e_y.csv", run.e_y);

  push_residual_metrics(rep, p);
  const std::int64_t burn = burn_in_steps(p.gains, p.pr.n);
  const double bound = tracking_error_bound(p.sys, p.pr, p.zd, cfg.n_d, cfg.tol.grid_points);
  const double e_y_steady = max_norm_from(run.e_y, run.e_y.start_index() + burn);
  const double u_l2 = l2_norm(run.u_hat);
  rep.metrics.emplace_back("burn_in", static_cast<double>(burn));
  rep.metrics.emplace_back("tracking_error_bound_unit_energy", bound);
  rep.metrics.emplace_back("u_hat_l2", u_l2);
  rep.metrics.emplace_back("max_steady_e_y", e_y_steady);
  rep.passed = residuals_pass(p, cfg.tol) &&
               (p.zd.empty() ? e_y_steady <= 1e-6
                             : e_y_steady <= 1.05 * bound * std::max(1.0, u_l2));
  return rep;
}

inline RunReport run_track_uc(const ExperimentConfig& cfg, OutputSink& sink) {
  const StateSpace sys = cfg.build_system();
  const SisoFactorization fact = factor_unit_circle_zeros(sys, cfg.tol.unit_circle_tol);
  Controller ctl;
  if (!cfg.controller_num.empty() || !cfg.controller_den.empty()) {
    require(!cfg.controller_num.empty() && !cfg.controller_den.empty(), errc::bad_config,
            "controller needs both numerator and denominator");
    ctl = Controller{cfg.controller_num, cfg.controller_den};
  } else {
    ctl = fact.uc_factors.empty() ? identity_controller() : default_unit_circle_controller();
  }

  RunReport rep;
  const SignalTrace y_d = generate_signal(cfg, 1, cfg.steps);
  TrackingConfig tcfg;
  tcfg.n_d = cfg.n_d;
  tcfg.init_policy = cfg.init_policy;
  tcfg.x0_plant = cfg.x0;
  const UnitCircleTrackingResult run = track_with_unit_circle(fact, ctl, y_d, tcfg,
                                                              cfg.tol.residual_tol);

  sink.trace("y_d.csv", y_d);
  sink.trace("u_tilde.csv", run.u_tilde);
  sink.trace("y_actual.csv", run.y_actual);
  sink.trace("e_c.csv", run.e_c);

  // chain norm on the frequency grid for the error bound
  const Pipeline pred = build_pipeline(fact.reduced, cfg.tol);
  double chain_norm = 0.0;
  for (int j = 0; j < cfg.tol.grid_points; ++j) {
    const double theta = 2.0 * std::numbers::pi * j / cfg.tol.grid_points;
    const Complex z(std::cos(theta), std::sin(theta));
    chain_norm = std::max(chain_norm, std::abs(unit_circle_error_chain(
                                          fact, ctl, pred.gains, pred.pr, pred.zd, cfg.n_d, z)));
  }
  const double mismatch = controller_mismatch_norm(ctl, cfg.tol.grid_points);
  const double e_c_l2 = l2_norm(run.e_c);
  const double y_d_l2 = l2_norm(y_d);
  // boundedness: the late window must not exceed the early one
  const std::int64_t half = run.e_c.start_index() + run.e_c.size() / 2;
  const double early = max_norm_from(run.e_c, run.e_c.start_index());
  const double late = max_norm_from(run.e_c, half);
  rep.metrics.emplace_back("controller_mismatch_norm", mismatch);
  rep.metrics.emplace_back("error_chain_norm", chain_norm);
  rep.metrics.emplace_back("e_c_l2", e_c_l2);
  rep.metrics.emplace_back("y_d_l2", y_d_l2);
  rep.metrics.emplace_back("max_e_c_early", early);
  rep.metrics.emplace_back("max_e_c_late", late);
  rep.metrics.emplace_back("uc_factor_count", static_cast<double>(fact.uc_factors.size()));
  rep.passed = late <= 1.1 * early + 1e-12 && e_c_l2 <= 1.05 * chain_norm * y_d_l2 + 1e-12;
  return rep;
}

inline RunReport run_bound_curve(const ExperimentConfig& cfg, OutputSink& sink) {
  const Pipeline p = build_pipeline(cfg.build_system(), cfg.tol);
  RunReport rep;
  std::vector<std::pair<std::int64_t, double>> curve, tracking_curve;
  for (std::int64_t nd = 1; nd <= cfg.nd_max; ++nd) {
    curve.emplace_back(nd, nmp_error_bound(p.zd, p.pr.transformed_system(), nd,
                                           cfg.tol.grid_points));
    tracking_curve.emplace_back(nd, tracking_error_bound(p.sys, p.pr, p.zd, nd,
                                                         cfg.tol.grid_points));
  }
  sink.curve("bound_curve.csv", curve);
  sink.curve("tracking_bound_curve.csv", tracking_curve);
  push_residual_metrics(rep, p);
  bool monotone = true;
  for (std::size_t i = 1; i < curve.size(); ++i)
    if (curve[i].second > curve[i - 1].second + 1e-12) monotone = false;
  rep.metrics.emplace_back("bound_at_1", curve.front().second);
  rep.metrics.emplace_back("bound_at_max", curve.back().second);
  rep.metrics.emplace_back("monotone", monotone ? 1.0 : 0.0);
  rep.passed = residuals_pass(p, cfg.tol) && monotone;
  return rep;
}

}  // namespace detail

/// Run one experiment end to end: synthesize the pipeline, execute the
/// requested mode, write the output files, and leave a report.txt next to
/// them. Partial outputs are removed if the run throws.
inline RunReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  detail::OutputSink sink(cfg.output_dir);
  RunReport rep;
  try {
    switch (cfg.mode) {
      case RunMode::Synthesize: rep = detail::run_synthesize(cfg, sink); break;
      case RunMode::Reconstruct: rep = detail::run_reconstruct(cfg, sink); break;
      case RunMode::Track: rep = detail::run_track(cfg, sink); break;
      case RunMode::TrackUc: rep = detail::run_track_uc(cfg, sink); break;
      case RunMode::BoundCurve: rep = detail::run_bound_curve(cfg, sink); break;
    }
  } catch (...) {
    sink.discard_all();
    throw;
  }
  rep.files = sink.files();
  detail::write_report_file(sink, rep);
  return rep;
}

}  // namespace invobs
