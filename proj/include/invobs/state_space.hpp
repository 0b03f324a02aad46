#pragma once

#include <Eigen/Dense>

#include "invobs/pinv.hpp"
#include "invobs/types.hpp"

namespace invobs {

/// Discrete-time LTI quadruple
///   x(k+1) = A x(k) + B u(k)
///   y(k)   = C x(k) + D u(k)
/// with x in R^n, u in R^m, y in R^l. The struct itself admits non-square
/// systems (handy for auxiliary norm computations); pipeline entry points
/// check squareness and minimality where they need them.
struct StateSpace {
  Matrix A, B, C, D;

  StateSpace() = default;
  StateSpace(Matrix a, Matrix b, Matrix c, Matrix d)
      : A(std::move(a)), B(std::move(b)), C(std::move(c)), D(std::move(d)) {
    require(A.rows() == A.cols(), errc::dimension_mismatch, "A must be square");
    require(B.rows() == A.rows(), errc::dimension_mismatch, "B row count must equal order");
    require(C.cols() == A.rows(), errc::dimension_mismatch, "C column count must equal order");
    require(D.rows() == C.rows() && D.cols() == B.cols(), errc::dimension_mismatch,
            "D must be l x m");
  }

  Eigen::Index n() const { return A.rows(); }
  Eigen::Index m() const { return B.cols(); }
  Eigen::Index l() const { return C.rows(); }
  bool square() const { return m() == l(); }

  ComplexVector poles() const { return A.eigenvalues(); }

  /// Frequency response C (zI - A)^{-1} B + D at a complex point.
  ComplexMatrix response(Complex z) const {
    ComplexMatrix zi = z * ComplexMatrix::Identity(n(), n()) - A.cast<Complex>();
    return C.cast<Complex>() * zi.partialPivLu().solve(B.cast<Complex>()) + D.cast<Complex>();
  }
};

/// Stacked controllability matrix [B, AB, ..., A^{n-1}B].
inline Matrix controllability_matrix(const StateSpace& sys) {
  const Eigen::Index n = sys.n(), m = sys.m();
  Matrix ctrb(n, n * m);
  Matrix blk = sys.B;
  for (Eigen::Index i = 0; i < n; ++i) {
    ctrb.middleCols(i * m, m) = blk;
    blk = sys.A * blk;
  }
  return ctrb;
}

/// Stacked observability matrix [C; CA; ...; CA^{n-1}].
inline Matrix observability_matrix(const StateSpace& sys) {
  const Eigen::Index n = sys.n(), l = sys.l();
  Matrix obsv(n * l, n);
  Matrix blk = sys.C;
  for (Eigen::Index i = 0; i < n; ++i) {
    obsv.middleRows(i * l, l) = blk;
    blk = blk * sys.A;
  }
  return obsv;
}

inline bool is_minimal(const StateSpace& sys, double rank_tol = 1e-10) {
  return numerical_rank(controllability_matrix(sys), rank_tol) == sys.n() &&
         numerical_rank(observability_matrix(sys), rank_tol) == sys.n();
}

struct SimulationResult {
  SignalTrace states;   // x(k) for k = start .. start + N (one terminal extra)
  SignalTrace outputs;  // y(k) for k = start .. start + N - 1
};

/// Forward simulation from x0 under the input trace. The state trace keeps
/// the terminal state, so it is one sample longer than the input.
inline SimulationResult simulate(const StateSpace& sys, const Vector& x0, const SignalTrace& u) {
  require(x0.size() == sys.n(), errc::dimension_mismatch, "x0 dimension must equal order");
  require(u.empty() || u.dim() == sys.m(), errc::dimension_mismatch,
          "input trace dimension must equal input count");
  SimulationResult r;
  r.states = SignalTrace(u.start_index());
  r.outputs = SignalTrace(u.start_index());
  Vector x = x0;
  for (std::int64_t i = 0; i < u.size(); ++i) {
    const Vector& uk = u.sample(i);
    r.states.push_back(x);
    r.outputs.push_back(sys.C * x + sys.D * uk);
    x = sys.A * x + sys.B * uk;
  }
  r.states.push_back(x);
  return r;
}

/// Stacked output-window matrices over a horizon of n steps:
///   Y(k) = Cn x(k) + Dn U(k),   x(k+1) = A x(k) + B In U(k)
/// with Y(k) = [y(k); ...; y(k+n-1)] and U(k) = [u(k); ...; u(k+n-1)].
struct BlockMatrices {
  Matrix Cn;           // (n l) x n, block row i equals C A^i
  Matrix Dn;           // (n l) x (n m), lower block Toeplitz
  Matrix In_selector;  // m x (n m), [I 0 ... 0]
};

inline BlockMatrices stack_block_matrices(const StateSpace& sys) {
  require(sys.square(), errc::unsupported_system, "block matrices require a square system");
  const Eigen::Index n = sys.n(), m = sys.m(), l = sys.l();
  BlockMatrices bm;
  bm.Cn = observability_matrix(sys);
  bm.Dn = Matrix::Zero(n * l, n * m);
  // Markov parameters D, CB, CAB, ... down the block diagonals.
  std::vector<Matrix> markov(static_cast<std::size_t>(n));
  markov[0] = sys.D;
  Matrix pow = sys.B;
  for (Eigen::Index i = 1; i < n; ++i) {
    markov[static_cast<std::size_t>(i)] = sys.C * pow;
    pow = sys.A * pow;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      bm.Dn.block(i * l, j * m, l, m) = markov[static_cast<std::size_t>(i - j)];
    }
  }
  bm.In_selector = Matrix::Zero(m, n * m);
  bm.In_selector.leftCols(m) = Matrix::Identity(m, m);
  return bm;
}

}  // namespace invobs
