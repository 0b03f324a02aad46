#pragma once

#include "invobs/config.hpp"
#include "invobs/realization.hpp"
#include "invobs/state_space.hpp"
#include "invobs/types.hpp"

namespace invobs {

/// Two-state SISO plant with zeros {1.5, 0.5} and a double pole at the
/// origin, G(z) = (z - 1.5)(z - 0.5) / z^2, realized in controllable
/// canonical form. One zero is outside the unit circle.
inline StateSpace case1_system() {
  return zpk_to_ss({Complex(1.5, 0.0), Complex(0.5, 0.0)}, {Complex(0.0, 0.0), Complex(0.0, 0.0)},
                   1.0);
}

/// Four-state two-input two-output plant with zeros {0.6072, 1.9928}.
inline StateSpace case3_system() {
  Matrix A(4, 4), B(4, 2), C(2, 4), D = Matrix::Zero(2, 2);
  A << 0.6, -0.3, 0, 0,
       0.1, 1, 0, 0,
       -0.4, -1.5, 0.4, -0.3,
       0.3, 1.1, 0.2, 0.9;
  B << 0, 0.4,
       0, 0,
       0, -0.1,
       0.1, 0.1;
  C << 1, 2, 3, 4,
       2, 1, 5, 6;
  return StateSpace(A, B, C, D);
}

/// SISO plant with minimum-phase, non-minimum-phase and unit-circle zeros:
/// G(z) = (z+1)(z+3)(z+0.5)(z-0.5) / (z^2 (z^2 - z + 0.5)).
inline StateSpace case4_system() {
  return zpk_to_ss(
      {Complex(-1, 0), Complex(-3, 0), Complex(-0.5, 0), Complex(0.5, 0)},
      {Complex(0, 0), Complex(0, 0), Complex(0.5, 0.5), Complex(0.5, -0.5)}, 1.0);
}

/// Pinned demo experiment definitions (case2 is tracking on the case1 plant).
inline ExperimentConfig demo_config(int case_id, const std::string& output_dir) {
  ExperimentConfig cfg;
  cfg.output_dir = output_dir;
  switch (case_id) {
    case 1: {
      cfg.mode = RunMode::Reconstruct;
      cfg.tf_zeros = std::vector<Complex>{Complex(1.5, 0), Complex(0.5, 0)};
      cfg.tf_poles = std::vector<Complex>{Complex(0, 0), Complex(0, 0)};
      cfg.tf_gain = 1.0;
      cfg.n_d = 15;
      cfg.input_spec = InputSpec::RandomSeeded;
      cfg.seed = 42;
      cfg.steps = 260;
      break;
    }
    case 2: {
      cfg.mode = RunMode::Track;
      cfg.tf_zeros = std::vector<Complex>{Complex(1.5, 0), Complex(0.5, 0)};
      cfg.tf_poles = std::vector<Complex>{Complex(0, 0), Complex(0, 0)};
      cfg.tf_gain = 1.0;
      cfg.n_d = 15;
      cfg.input_spec = InputSpec::RandomSeeded;
      cfg.seed = 7;
      cfg.steps = 320;
      break;
    }
    case 3: {
      const StateSpace sys = case3_system();
      cfg.mode = RunMode::Reconstruct;
      cfg.A = sys.A;
      cfg.B = sys.B;
      cfg.C = sys.C;
      cfg.D = sys.D;
      cfg.n_d = 10;
      cfg.init_policy = InitPolicy::WarmStart;
      cfg.input_spec = InputSpec::Harmonic;
      cfg.frequency = 0.005;
      cfg.amplitude = 0.5;
      cfg.steps = 400;
      break;
    }
    case 4: {
      cfg.mode = RunMode::TrackUc;
      cfg.tf_zeros = std::vector<Complex>{Complex(-1, 0), Complex(-3, 0), Complex(-0.5, 0),
                                          Complex(0.5, 0)};
      cfg.tf_poles = std::vector<Complex>{Complex(0, 0), Complex(0, 0), Complex(0.5, 0.5),
                                          Complex(0.5, -0.5)};
      cfg.tf_gain = 1.0;
      cfg.n_d = 10;
      cfg.n_c = 1;
      cfg.input_spec = InputSpec::Harmonic;
      cfg.frequency = 0.05;
      cfg.amplitude = 1.0;
      cfg.steps = 520;
      break;
    }
    default:
      fail(errc::bad_config, "demo cases are 1..4");
  }
  return cfg;
}

}  // namespace invobs
