#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "invobs/demo_cases.hpp"
#include "invobs/partition.hpp"
#include "invobs/uio.hpp"
#include "invobs/zeros.hpp"
#include "support/test_support.hpp"

using namespace invobs;
using invobs::testing::random_minimal_square;
using invobs::testing::random_nmp_siso;
using invobs::testing::sign_insensitive_distance;

namespace {
struct Built {
  StateSpace sys;
  ZeroClassification zc;
  ObserverGains gains;
  PartitionedRealization pr;
};

Built build(const StateSpace& sys) {
  Built b{sys, transmission_zeros(sys), {}, {}};
  b.gains = synthesize_uio(sys, b.zc);
  b.pr = partition_states(b.gains, sys);
  return b;
}
}  // namespace

TEST_CASE("partition invariants", "[partition][property]") {
  std::mt19937_64 rng(201);
  for (int trial = 0; trial < 40; ++trial) {
    const auto b = build(random_minimal_square(rng, {}));
    const Eigen::Index n = b.sys.n(), q = b.gains.q;
    REQUIRE((b.pr.T1 * b.pr.T1.transpose() - Matrix::Identity(n, n)).norm() < 1e-10);
    REQUIRE((b.gains.M - b.pr.L * b.pr.T1).norm() < 1e-10 * (1.0 + b.gains.M.norm()));
    REQUIRE((b.pr.L.leftCols(q) - b.pr.Mq).norm() == 0.0);
    REQUIRE(b.pr.L.rightCols(n - q).norm() == 0.0);
    // assembled blocks reproduce the transformed quadruple
    REQUIRE((b.pr.A1() - b.pr.T1 * b.sys.A * b.pr.T1.transpose()).norm() < 1e-12);
    REQUIRE((b.pr.B1_full() - b.pr.T1 * b.sys.B).norm() < 1e-12);
    REQUIRE((b.pr.C1_full() - b.sys.C * b.pr.T1.transpose()).norm() < 1e-12);
  }
}

TEST_CASE("partition of the study plant matches the published transform", "[partition]") {
  const auto b = build(case1_system());
  Matrix t1_expect(2, 2);
  t1_expect << -0.5547, 0.8321, 0.8321, 0.5547;
  for (Eigen::Index r = 0; r < 2; ++r) {
    REQUIRE(sign_insensitive_distance(b.pr.T1.row(r).transpose(), t1_expect.row(r).transpose()) <
            1e-3);
  }
  REQUIRE(b.pr.L.rows() == 1);
  REQUIRE(std::abs(b.pr.L(0, 0)) == Catch::Approx(1.0).margin(1e-10));
  REQUIRE(b.pr.L(0, 1) == 0.0);
}

TEST_CASE("partition of the MIMO plant matches the published transform", "[partition]") {
  const auto b = build(case3_system());
  // the last row of T1 (the obstructed direction) is unique up to sign
  Vector t1_last(4);
  t1_last << -0.8487, -0.0855, 0.5067, -0.1252;
  REQUIRE(sign_insensitive_distance(b.pr.T1.row(3).transpose(), t1_last) < 1e-3);
  // rows 1..3 span the published M row space
  Matrix published(3, 4);
  published << 0.0488, 0.9650, 0.2063, -0.1547,
               0.2523, 0.0953, 0.6205, 0.7364,
               0.2013, 0.3012, 0.5700, 0.7375;
  REQUIRE(testing::rowspace_gap(b.pr.T1.topRows(3), published) < 1e-3);
}

TEST_CASE("fully minimum-phase partition has no obstructed block", "[partition]") {
  std::mt19937_64 rng(202);
  StateSpace sys = [&] {
    for (;;) {
      ZeroClassification zc;
      StateSpace s = random_minimal_square(rng, {}, &zc);
      if (zc.beta() == 0) return s;
    }
  }();
  const auto b = build(sys);
  REQUIRE(b.gains.q == sys.n());
  REQUIRE(b.pr.Mq.rows() == sys.n());
  const auto zd = zero_dynamics(b.pr);
  REQUIRE(zd.empty());
}

TEST_CASE("rank-deficient M is refused", "[partition]") {
  const StateSpace sys = case3_system();
  auto gains = synthesize_uio(sys, transmission_zeros(sys));
  gains.M.row(2) = gains.M.row(1);  // break the row rank on purpose
  REQUIRE_THROWS_MATCHES(partition_states(gains, sys), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                           return e.code() == errc::rank_loss;
                         }));
}

TEST_CASE("zero dynamics of the study plant", "[partition]") {
  const auto b = build(case1_system());
  const auto zd = zero_dynamics(b.pr);
  REQUIRE(zd.path == ZeroDynamics::Path::B1);
  REQUIRE(zd.Az(0, 0) == Catch::Approx(1.5).margin(1e-12));
  Vector bz_expect(2);
  bz_expect << -1.5, -1.0;
  REQUIRE(sign_insensitive_distance(zd.Bz.row(0).transpose(), bz_expect) < 1e-3);
  REQUIRE(zd.Cz2.norm() < 1e-8);
  REQUIRE((zd.Az_inv * zd.Az - Matrix::Identity(1, 1)).norm() < 1e-12);
  REQUIRE(zd.Az_inv.eigenvalues().cwiseAbs().maxCoeff() < 1.0);
}

TEST_CASE("zero dynamics of the MIMO plant", "[partition]") {
  const auto b = build(case3_system());
  const auto zd = zero_dynamics(b.pr);
  REQUIRE(zd.path == ZeroDynamics::Path::B1);
  REQUIRE(zd.Az(0, 0) == Catch::Approx(1.9928).margin(1e-3));
  REQUIRE(zd.Bz.rows() == 1);
  REQUIRE(zd.Bz.cols() == 6);
  REQUIRE(zd.Cz2.norm() < 1e-8);
  const auto rep = verify_zero_dynamics(zd, b.zc);
  REQUIRE(rep.eigenvalue_distance < 1e-6);
}

TEST_CASE("the D path engages when B1 loses column rank", "[partition]") {
  // force B1 = 0 by building a plant whose M row annihilates B
  const auto b = build(case1_system());
  PartitionedRealization pr = b.pr;
  pr.B1.setZero();  // surgically disable the B1 route
  const auto zd = zero_dynamics(pr);
  REQUIRE(zd.path == ZeroDynamics::Path::D);
  // both eliminations share the spectrum (Az = Azd here)
  REQUIRE(zd.Az(0, 0) == Catch::Approx(1.5).margin(1e-6));
  REQUIRE(zd.Bz.cols() == pr.q + pr.l);
}

TEST_CASE("neither elimination route leaves a reconstructible system", "[partition]") {
  const auto b = build(case3_system());  // D = 0 here
  PartitionedRealization pr = b.pr;
  pr.B1.setZero();
  REQUIRE_THROWS_MATCHES(zero_dynamics(pr), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                           return e.code() == errc::not_reconstructible;
                         }));
}

TEST_CASE("zero-dynamics spectra over random plants", "[partition][property]") {
  std::mt19937_64 rng(203);
  for (int trial = 0; trial < 40; ++trial) {
    ZeroClassification zc;
    testing::RandomSystemOptions opt;
    opt.require_nmp = true;
    const StateSpace sys = random_minimal_square(rng, opt, &zc);
    const auto gains = synthesize_uio(sys, zc);
    const auto pr = partition_states(gains, sys);
    const auto zd = zero_dynamics(pr);
    const auto rep = verify_zero_dynamics(zd, zc);
    REQUIRE(rep.eigenvalue_distance < 1e-6);
    if (zd.path == ZeroDynamics::Path::B1) REQUIRE(rep.cz2_norm < 1e-8);
  }
}

TEST_CASE("column dependence of the blocked directions", "[partition][property]") {
  // [C2 D; A12 B1] must lose column rank whenever zeros obstruct estimation
  std::mt19937_64 rng(204);
  for (int trial = 0; trial < 30; ++trial) {
    ZeroClassification zc;
    testing::RandomSystemOptions opt;
    opt.require_nmp = true;
    const StateSpace sys = random_minimal_square(rng, opt, &zc);
    const auto gains = synthesize_uio(sys, zc);
    const auto pr = partition_states(gains, sys);
    Matrix stacked(pr.l + pr.q, (pr.n - pr.q) + pr.m);
    stacked << pr.C2, pr.D, pr.A12, pr.B1;
    Eigen::JacobiSVD<Matrix> svd(stacked);
    const auto& sv = svd.singularValues();
    REQUIRE(sv(sv.size() - 1) <= 1e-8 * sv(0));
  }
}

TEST_CASE("partitioned subsystems inherit the plant's zeros", "[partition][property]") {
  std::mt19937_64 rng(205);
  int via_d_checked = 0, via_b1_checked = 0;
  while (via_d_checked < 20 || via_b1_checked < 8) {
    ZeroClassification zc;
    testing::RandomSystemOptions opt;
    opt.require_nmp = true;
    opt.m_min = 1;
    opt.m_max = 1;
    const StateSpace sys = random_minimal_square(rng, opt, &zc);
    const auto gains = synthesize_uio(sys, zc);
    const auto pr = partition_states(gains, sys);
    const std::vector<Complex> all = zc.all_finite();
    auto subset_of_zeros = [&](const ZeroClassification& sub) {
      for (const Complex& z : sub.all_finite()) {
        double best = 1e9;
        for (const Complex& w : all) best = std::min(best, std::abs(z - w));
        if (best > 1e-6) return false;
      }
      return true;
    };
    // each route is checked under its own operating condition (full column
    // rank of B1 or of D) and where the square zero computation applies
    if (pr.q == pr.m && numerical_rank(pr.B1) == pr.B1.cols()) {
      const StateSpace via_b1(pr.A22, pr.B2, pr.A12, pr.B1);
      if (is_minimal(via_b1)) {
        REQUIRE(subset_of_zeros(transmission_zeros(via_b1)));
        ++via_b1_checked;
      }
    }
    const StateSpace via_d(pr.A22, pr.B2, pr.C2, pr.D);
    if (numerical_rank(pr.D) == pr.D.cols() && is_minimal(via_d)) {
      REQUIRE(subset_of_zeros(transmission_zeros(via_d)));
      ++via_d_checked;
    }
  }
}

TEST_CASE("both eliminations agree when both ranks are full", "[partition][property]") {
  std::mt19937_64 rng(206);
  int checked = 0;
  while (checked < 25) {
    ZeroClassification zc;
    const StateSpace sys = random_nmp_siso(rng, &zc);
    const auto gains = synthesize_uio(sys, zc);
    const auto pr = partition_states(gains, sys);
    if (numerical_rank(pr.B1) != pr.B1.cols() || numerical_rank(pr.D) != pr.D.cols()) continue;
    const Matrix lhs = pinv(pr.B1) * pr.A12;
    const Matrix rhs = pinv(pr.D) * pr.C2;
    REQUIRE((lhs - rhs).norm() <= 1e-8 * (1.0 + lhs.norm()));
    ++checked;
  }
}

TEST_CASE("similarity preserves the transfer function", "[partition][property]") {
  std::mt19937_64 rng(207);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  for (int trial = 0; trial < 10; ++trial) {
    const StateSpace sys = random_minimal_square(rng, {});
    const auto gains = synthesize_uio(sys, transmission_zeros(sys));
    const auto pr = partition_states(gains, sys);
    const StateSpace transformed = pr.transformed_system();
    for (int p = 0; p < 64; ++p) {
      const double th = angle(rng);
      const Complex z(1.7 * std::cos(th), 1.7 * std::sin(th));
      const ComplexMatrix a = sys.response(z);
      const ComplexMatrix b = transformed.response(z);
      REQUIRE((a - b).norm() <= 1e-9 * (1.0 + a.norm()));
    }
  }
}
