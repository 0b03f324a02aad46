#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "invobs/demo_cases.hpp"
#include "invobs/hinf.hpp"
#include "invobs/partition.hpp"
#include "invobs/pinv.hpp"
#include "invobs/realization.hpp"
#include "invobs/state_space.hpp"
#include "invobs/uio.hpp"
#include "invobs/zeros.hpp"
#include "support/test_support.hpp"

using namespace invobs;
using invobs::testing::impulse_response_oracle;
using invobs::testing::random_minimal_square;
using invobs::testing::random_trace;
using invobs::testing::randn_matrix;

TEST_CASE("simulate: zero state and zero input stay at zero", "[lti_core]") {
  const StateSpace sys = case1_system();
  const SignalTrace u = SignalTrace::zeros(0, 20, sys.m());
  const auto res = simulate(sys, Vector::Zero(sys.n()), u);
  for (std::int64_t i = 0; i < res.outputs.size(); ++i)
    REQUIRE(res.outputs.sample(i).norm() == 0.0);
}

TEST_CASE("simulate: free response is C A^k x0", "[lti_core]") {
  std::mt19937_64 rng(11);
  const StateSpace sys = random_minimal_square(rng, {});
  Vector x0 = randn_matrix(rng, sys.n(), 1);
  const auto res = simulate(sys, x0, SignalTrace::zeros(0, 12, sys.m()));
  Matrix apow = Matrix::Identity(sys.n(), sys.n());
  for (std::int64_t k = 0; k < 12; ++k) {
    REQUIRE((res.outputs.sample(k) - sys.C * apow * x0).norm() < 1e-12);
    apow = sys.A * apow;
  }
}

TEST_CASE("simulate: impulse response of the two-zero study plant", "[lti_core]") {
  // numerator (z-1.5)(z-0.5), denominator z^2, expanded by the polynomial
  // long-division oracle
  const auto h = impulse_response_oracle(poly_mul({1.0, -1.5}, {1.0, -0.5}), {1.0, 0.0, 0.0}, 6);
  REQUIRE(h[0] == Catch::Approx(1.0));
  REQUIRE(h[1] == Catch::Approx(-2.0));
  REQUIRE(h[2] == Catch::Approx(0.75));

  const StateSpace sys = case1_system();
  SignalTrace u = SignalTrace::zeros(0, 6, 1);
  u.sample(0)(0) = 1.0;
  const auto res = simulate(sys, Vector::Zero(2), u);
  for (std::size_t k = 0; k < h.size(); ++k)
    REQUIRE(res.outputs.sample(static_cast<std::int64_t>(k))(0) == Catch::Approx(h[k]).margin(1e-12));
}

TEST_CASE("simulate is linear in state and input", "[lti_core]") {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 20; ++trial) {
    const StateSpace sys = random_minimal_square(rng, {});
    const Vector x0 = randn_matrix(rng, sys.n(), 1);
    const SignalTrace u1 = random_trace(rng, 0, 30, sys.m());
    const SignalTrace u2 = random_trace(rng, 0, 30, sys.m());
    SignalTrace u_sum(0);
    for (std::int64_t i = 0; i < u1.size(); ++i) u_sum.push_back(u1.sample(i) + u2.sample(i));
    const auto combined = simulate(sys, x0, u_sum);
    const auto first = simulate(sys, x0, u1);
    const auto second = simulate(sys, Vector::Zero(sys.n()), u2);
    for (std::int64_t i = 0; i < combined.outputs.size(); ++i) {
      const Vector lhs = combined.outputs.sample(i);
      const Vector rhs = first.outputs.sample(i) + second.outputs.sample(i);
      REQUIRE((lhs - rhs).norm() <= 1e-10 * (1.0 + lhs.norm()));
    }
  }
}

TEST_CASE("simulate rejects mismatched dimensions", "[lti_core]") {
  const StateSpace sys = case1_system();
  REQUIRE_THROWS_MATCHES(simulate(sys, Vector::Zero(3), SignalTrace::zeros(0, 4, 1)), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                           return e.code() == errc::dimension_mismatch;
                         }));
  REQUIRE_THROWS_AS(simulate(sys, Vector::Zero(2), SignalTrace::zeros(0, 4, 2)), Error);
}

TEST_CASE("stacked window matrices", "[lti_core]") {
  SECTION("order one collapses to C and D") {
    const StateSpace sys(Matrix::Constant(1, 1, 0.3), Matrix::Constant(1, 1, 2.0),
                         Matrix::Constant(1, 1, -1.0), Matrix::Constant(1, 1, 0.5));
    const auto bm = stack_block_matrices(sys);
    REQUIRE(bm.Cn.isApprox(sys.C));
    REQUIRE(bm.Dn.isApprox(sys.D));
    REQUIRE(bm.In_selector.isApprox(Matrix::Identity(1, 1)));
  }
  SECTION("study plant: Toeplitz with the Markov block CB") {
    const StateSpace sys = case1_system();
    const auto bm = stack_block_matrices(sys);
    Matrix dn_expect(2, 2);
    const double cb = (sys.C * sys.B)(0, 0);
    dn_expect << 1, 0, cb, 1;
    REQUIRE(bm.Dn.isApprox(dn_expect, 1e-14));
    REQUIRE(cb == Catch::Approx(-2.0));
  }
  SECTION("row block r of Cn advanced by A is row block r+1") {
    std::mt19937_64 rng(33);
    const StateSpace sys = random_minimal_square(rng, {});
    const auto bm = stack_block_matrices(sys);
    const Eigen::Index l = sys.l();
    for (Eigen::Index r = 0; r + 1 < sys.n(); ++r) {
      REQUIRE((bm.Cn.middleRows(r * l, l) * sys.A - bm.Cn.middleRows((r + 1) * l, l)).norm() <
              1e-12);
    }
  }
}

TEST_CASE("pinv basics", "[lti_core]") {
  REQUIRE(pinv(Matrix::Identity(3, 3)).isApprox(Matrix::Identity(3, 3), 1e-14));
  const Matrix z = Matrix::Zero(2, 4);
  const Matrix zp = pinv(z);
  REQUIRE(zp.rows() == 4);
  REQUIRE(zp.cols() == 2);
  REQUIRE(zp.norm() == 0.0);
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 2.0;
  const Matrix dp = pinv(d);
  REQUIRE(dp(0, 0) == Catch::Approx(0.5));
  REQUIRE(dp(1, 1) == 0.0);
}

TEST_CASE("pinv satisfies the four Penrose conditions", "[lti_core][property]") {
  std::mt19937_64 rng(44);
  std::uniform_int_distribution<Eigen::Index> dim(1, 7);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const Eigen::Index r = dim(rng), c = dim(rng);
    Matrix mx;
    if (coin(rng) < 0.4) {
      const Eigen::Index k = std::max<Eigen::Index>(1, std::min(r, c) - 1);
      mx = randn_matrix(rng, r, k) * randn_matrix(rng, k, c);  // rank deficient
    } else {
      mx = randn_matrix(rng, r, c);
    }
    const Matrix p = pinv(mx);
    const double tol = 1e-10 * (1.0 + mx.norm());
    REQUIRE((mx * p * mx - mx).norm() <= tol);
    REQUIRE((p * mx * p - p).norm() <= tol);
    REQUIRE(((mx * p).transpose() - mx * p).norm() <= tol);
    REQUIRE(((p * mx).transpose() - p * mx).norm() <= tol);
  }
}

TEST_CASE("transmission zeros of the study plants", "[lti_core]") {
  SECTION("two-zero SISO plant") {
    const auto zc = transmission_zeros(case1_system());
    REQUIRE(zc.padding_count == 0);
    REQUIRE(zc.mp_zeros.size() == 1);
    REQUIRE(zc.nmp_zeros.size() == 1);
    REQUIRE(std::abs(zc.mp_zeros[0] - Complex(0.5, 0)) < 1e-10);
    REQUIRE(std::abs(zc.nmp_zeros[0] - Complex(1.5, 0)) < 1e-10);
  }
  SECTION("four-state MIMO plant") {
    const auto zc = transmission_zeros(case3_system());
    REQUIRE(zc.padding_count == 2);
    REQUIRE(zc.mp_zeros.size() == 1);
    REQUIRE(zc.nmp_zeros.size() == 1);
    REQUIRE(std::abs(zc.mp_zeros[0] - Complex(0.6072, 0)) < 1e-3);
    REQUIRE(std::abs(zc.nmp_zeros[0] - Complex(1.9928, 0)) < 1e-3);
  }
  SECTION("plant with a zero on the unit circle") {
    const auto zc = transmission_zeros(case4_system());
    REQUIRE(zc.unit_circle_zeros.size() == 1);
    REQUIRE(std::abs(zc.unit_circle_zeros[0] - Complex(-1, 0)) < 1e-8);
    REQUIRE(zc.nmp_zeros.size() == 1);
    REQUIRE(std::abs(zc.nmp_zeros[0] - Complex(-3, 0)) < 1e-8);
    REQUIRE(zc.mp_zeros.size() == 2);
  }
  SECTION("non-square systems are rejected") {
    const StateSpace sys(Matrix::Identity(2, 2) * 0.5, Matrix::Ones(2, 1), Matrix::Ones(2, 2),
                         Matrix::Zero(2, 1));
    REQUIRE_THROWS_MATCHES(transmission_zeros(sys), Error,
                           Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.code() == errc::unsupported_system;
                           }));
  }
}

TEST_CASE("factored SISO systems report the numerator roots", "[lti_core][property]") {
  std::mt19937_64 rng(55);
  std::uniform_int_distribution<int> n_dist(1, 5);
  std::uniform_real_distribution<double> mag(0.1, 3.0);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  int done = 0;
  while (done < 100) {
    const int n = n_dist(rng);
    std::vector<Complex> zeros, poles;
    for (int i = 0; i < n; ++i) {
      double r = mag(rng);
      if (std::abs(r - 1.0) < 5e-3) continue;  // stay clear of the band
      zeros.emplace_back((coin(rng) < 0.5 ? -1.0 : 1.0) * r, 0.0);
      poles.emplace_back((coin(rng) < 0.5 ? -1.0 : 1.0) * mag(rng) * 0.3, 0.0);
    }
    if (static_cast<int>(zeros.size()) != n) continue;
    bool separated = true;
    for (std::size_t i = 0; i < zeros.size(); ++i)
      for (std::size_t j = i + 1; j < zeros.size(); ++j)
        if (std::abs(zeros[i] - zeros[j]) < 5e-2) separated = false;
    if (!separated) continue;
    const StateSpace sys = zpk_to_ss(zeros, poles, 1.0);
    if (!is_minimal(sys)) continue;
    const auto zc = transmission_zeros(sys);
    REQUIRE(complex_set_distance(zc.all_finite(), zeros) < 1e-8);
    ++done;
  }
}

TEST_CASE("grid infinity norm", "[lti_core]") {
  SECTION("static gain") {
    const StateSpace sys(Matrix::Zero(1, 1), Matrix::Zero(1, 1), Matrix::Zero(1, 1),
                         Matrix::Constant(1, 1, -3.25));
    REQUIRE(hinf_norm_grid(sys, 64) == Catch::Approx(3.25));
  }
  SECTION("first-order peak at dc") {
    const StateSpace sys(Matrix::Constant(1, 1, 0.5), Matrix::Constant(1, 1, 1.0),
                         Matrix::Constant(1, 1, 1.0), Matrix::Zero(1, 1));
    REQUIRE(hinf_norm_grid(sys, 256) == Catch::Approx(2.0).epsilon(1e-12));
  }
  SECTION("study plant state path matches a dense-grid evaluation") {
    const StateSpace sys = case1_system();
    const auto gains = synthesize_uio(sys, transmission_zeros(sys));
    const auto pr = partition_states(gains, sys);
    const StateSpace state_path(pr.A1(), pr.B1_full(), Matrix::Identity(2, 2), Matrix::Zero(2, 1));
    const double coarse = hinf_norm_grid(state_path, 4096);
    const double dense = hinf_norm_grid(state_path, 1000000);
    REQUIRE(coarse <= dense);
    REQUIRE(dense - coarse < 1e-5 * dense);
  }
  SECTION("monotone under integer grid refinement") {
    std::mt19937_64 rng(66);
    for (int trial = 0; trial < 10; ++trial) {
      const StateSpace sys = random_minimal_square(rng, {});
      double prev = hinf_norm_grid(sys, 37);
      for (int g = 74; g <= 296; g *= 2) {
        const double next = hinf_norm_grid(sys, g);
        REQUIRE(next >= prev);
        prev = next;
      }
    }
  }
  SECTION("pole on the unit circle is rejected") {
    const StateSpace sys(Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, 1.0),
                         Matrix::Constant(1, 1, 1.0), Matrix::Zero(1, 1));
    REQUIRE_THROWS_MATCHES(hinf_norm_grid(sys, 64), Error,
                           Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.code() == errc::norm_undefined;
                           }));
  }
}
