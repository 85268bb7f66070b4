#include <doctest.h>

#include "dgc/errors.hpp"
#include "dgc/grid_model.hpp"
#include "support.hpp"

using namespace dgc;
using dgc::test::smib;

TEST_CASE("two-bus machine against infinite bus") {
  const ReducedModel m = build_reduced_model(smib(false));
  REQUIRE(m.machines() == 1);
  CHECK(m.b_a(0, 0) == doctest::Approx(2.0));
  CHECK(m.a(0, 1) == doctest::Approx(kNominalOmegaS));
  CHECK(m.a(1, 0) == doctest::Approx(-2.0 / 7.0));
  CHECK(m.x_e(0) == doctest::Approx(0.0));
  CHECK(m.x_e(1) == 1.0);
  CHECK(m.infinite_bus == 2);
}

TEST_CASE("mid-point bus is eliminated by hand-computed Kron reduction") {
  // Two 0.25 pu reactances in series behave like 0.5 pu; half of an injection
  // at the mid-point reaches the machine.
  GridSystem s = smib(true);
  s.loads = {{3, 0.4}};
  const ReducedModel m = build_reduced_model(s);
  CHECK(m.b_a(0, 0) == doctest::Approx(2.0));
  REQUIRE(m.b_b.cols() == 1);
  CHECK(m.b_b(0, 0) == doctest::Approx(-0.5));
  CHECK(m.b_c(0, 0) == doctest::Approx(-0.5));
  CHECK(m.injection_gain(3)(0) == doctest::Approx(0.5));
  CHECK(m.injection_gain(1)(0) == doctest::Approx(1.0));
  CHECK(m.injection_gain(2)(0) == 0.0);
  CHECK_THROWS_AS(m.injection_gain(99), ModelError);

  // 0.4 pu drawn at the mid-point: delta = -0.5 * 0.4 / 2.
  CHECK(m.x_e(0) == doctest::Approx(-0.1));

  InjectionVector dp(1);
  dp << 0.4;
  const StateVector xc = equilibrium_shifted(m, dp);
  CHECK(xc(0) - m.x_e(0) == doctest::Approx(0.1));
  CHECK(xc(1) == 1.0);
  CHECK_THROWS_AS(equilibrium_shifted(m, InjectionVector::Zero(2)), DimensionError);
}

TEST_CASE("three machines on a ring, reduction against a direct Schur complement") {
  GridSystem s;
  s.buses = {{1, BusType::generator}, {2, BusType::generator}, {3, BusType::generator},
             {4, BusType::non_generator}, {5, BusType::non_generator}};
  s.branches = {{1, 4, 0.1, true}, {2, 4, 0.2, true}, {4, 5, 0.05, true},
                {5, 3, 0.15, true}, {1, 2, 0.4, true}, {2, 5, 0.3, true}};
  s.generators = {{1, 5.0, 0.8, false}, {2, 3.0, 0.5, false}, {3, 100.0, 0.0, true}};
  s.loads = {{4, 0.6}, {5, 0.7}};
  s.ccs = {{5, 0.1}};
  const ReducedModel m = build_reduced_model(s);

  // Buses ordered 1, 2 | 4, 5 | 3 with bus 3 grounded.
  Matrix y = Matrix::Zero(4, 4);
  auto add = [&](int i, int j, double x) {
    y(i, i) += 1 / x;
    y(j, j) += 1 / x;
    y(i, j) -= 1 / x;
    y(j, i) -= 1 / x;
  };
  add(0, 2, 0.1);
  add(1, 2, 0.2);
  add(2, 3, 0.05);
  add(0, 1, 0.4);
  add(1, 3, 0.3);
  y(3, 3) += 1 / 0.15;
  const Matrix gg = y.topLeftCorner(2, 2);
  const Matrix gl = y.topRightCorner(2, 2);
  const Matrix ll = y.bottomRightCorner(2, 2);
  const Matrix ba = gg - gl * ll.inverse() * gl.transpose();
  CHECK((m.b_a - ba).norm() < 1e-10);
  CHECK((m.b_b - gl * ll.inverse()).norm() < 1e-10);

  // Equilibrium balances the reduced power flow.
  Vector p(2);
  p << 0.8, 0.5;
  const Vector rhs = p + m.b_b * m.p_load - m.b_c * m.p0;
  CHECK((ba * m.x_e.head(2) - rhs).norm() < 1e-10);
}

TEST_CASE("structural validation") {
  SUBCASE("duplicate bus") {
    GridSystem s = smib(false);
    s.buses.push_back({1, BusType::generator});
    CHECK_THROWS_AS(build_reduced_model(s), ModelError);
  }
  SUBCASE("disconnected bus") {
    GridSystem s = smib(false);
    s.buses.push_back({7, BusType::non_generator});
    CHECK_THROWS_AS(build_reduced_model(s), ModelError);
  }
  SUBCASE("no infinite bus") {
    GridSystem s = smib(false);
    s.generators[1].infinite_bus = false;
    CHECK_THROWS_AS(build_reduced_model(s), ModelError);
  }
  SUBCASE("non-positive reactance") {
    GridSystem s = smib(false);
    s.branches[0].x = 0.0;
    CHECK_THROWS_AS(build_reduced_model(s), ModelError);
  }
  SUBCASE("controllable component on a generator bus") {
    GridSystem s = smib(false);
    s.ccs = {{1, 0.0}};
    CHECK_THROWS_AS(build_reduced_model(s), ModelError);
  }
  SUBCASE("out-of-service branch can disconnect the network") {
    GridSystem s = smib(false);
    s.branches[0].in_service = false;
    CHECK_THROWS_AS(build_reduced_model(s), ModelError);
  }
}

TEST_CASE("bundled 9-bus and 39-bus systems reduce") {
  const ReducedModel m9 = dgc::test::load_model("wscc9.json");
  CHECK(m9.machines() == 2);
  CHECK(m9.cc_count() == 6);
  CHECK((m9.b_a - m9.b_a.transpose()).norm() == 0.0);

  const ReducedModel m39 = dgc::test::load_model("ne39.json");
  CHECK(m39.machines() == 9);
  CHECK(m39.cc_count() == 39);
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(m39.b_a);
  CHECK(eig.eigenvalues().minCoeff() > 0.0);
}
