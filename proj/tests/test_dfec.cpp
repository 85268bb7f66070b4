#include <doctest.h>

#include <cmath>

#include "dgc/dfec.hpp"
#include "dgc/errors.hpp"
#include "support.hpp"

using namespace dgc;

namespace {

DfecScenario bundled() { return load_dfec_scenario(dgc::test::data_path("dfec.json")); }

}  // namespace

TEST_CASE("equilibrium has zero derivatives") {
  const TwoMachineModel m = bundled().model;
  const auto x = dfec_initial_state(m);
  REQUIRE(x.size() == kDfecStates);
  std::vector<double> dx(kDfecStates);
  dfec_dynamics(m, x, dx, 1.0, {}, false);
  for (double v : dx) CHECK(std::abs(v) < 1e-12);
  // Line flow carries the setpoint.
  CHECK(m.e1 * m.e2 / m.x * std::sin(x[0] - x[2]) == doctest::Approx(m.p_set));
}

TEST_CASE("doubling both inertias halves the initial rate of change") {
  TwoMachineModel m = bundled().model;
  std::vector<double> dx(kDfecStates);
  dfec_dynamics(m, dfec_initial_state(m), dx, 0.0, {}, true);
  const double rocof = 0.5 * (dx[1] + dx[3]);
  CHECK(rocof < 0.0);
  m.h1 *= 2.0;
  m.h2 *= 2.0;
  dfec_dynamics(m, dfec_initial_state(m), dx, 0.0, {}, true);
  CHECK(0.5 * (dx[1] + dx[3]) == doctest::Approx(0.5 * rocof).epsilon(1e-12));
}

TEST_CASE("injection acts only inside its window") {
  const TwoMachineModel m = bundled().model;
  const auto x = dfec_initial_state(m);
  std::vector<double> off(kDfecStates), on(kDfecStates);
  const DfecAction a{0.1, 1.0, 2.0};
  dfec_dynamics(m, x, off, 0.5, a, false);
  dfec_dynamics(m, x, on, 1.5, a, false);
  CHECK(off[1] == doctest::Approx(0.0));
  CHECK(on[1] == doctest::Approx(0.1 / (2.0 * m.h1)));
  CHECK(on[3] == doctest::Approx(0.0));
}

TEST_CASE("no disturbance gives zero cost") {
  const DfecScenario sc = bundled();
  DfecSimOptions sim = sc.sim;
  sim.disturbed = false;
  CHECK(std::abs(nadir_cost(sc.model, {}, sim)) < 1e-9);

  OptimizerOptions o = sc.optimizer;
  o.grid = 3;
  o.starts = 1;
  const DfecResult r = optimize_action(sc.model, o, sim);
  CHECK(r.action.dp == doctest::Approx(0.0));
  CHECK(std::abs(r.cost) < 1e-9);
}

TEST_CASE("steady-state speed follows the droop relation") {
  const DfecScenario sc = bundled();
  const auto& m = sc.model;
  const DfecRun run = simulate_dfec(m, {}, sc.sim);
  const double droop = m.load_step / (m.governor.k1 + m.d1 + m.d2);
  CHECK(1.0 - run.omega_ss == doctest::Approx(droop).epsilon(0.02));
  CHECK_FALSE(run.unstable);
}

TEST_CASE("calibration hits the nadir target") {
  const DfecScenario sc = bundled();
  const double k1 = calibrate_droop(sc.model, 0.04, sc.sim);
  TwoMachineModel m = sc.model;
  m.governor.k1 = k1;
  CHECK(nadir_depth(simulate_dfec(m, {}, sc.sim)) == doctest::Approx(0.04).epsilon(1e-6));
  CHECK(k1 == doctest::Approx(sc.model.governor.k1).epsilon(1e-3));
  CHECK_THROWS_AS(calibrate_droop(sc.model, 0.9, sc.sim), OptimizationError);
}

TEST_CASE("properties of the bundled optimum") {
  const DfecScenario sc = bundled();
  const DfecResult r = optimize_action(sc.model, sc.optimizer, sc.sim);
  CHECK(r.cost <= r.uncontrolled_cost);
  CHECK(r.controlled_nadir <= r.uncontrolled_nadir);
  CHECK(r.action.t_on < r.action.t_off);
  CHECK(r.action.t_off <= sc.optimizer.bounds.t_max);

  SUBCASE("steady state does not depend on the injection") {
    const DfecRun a = simulate_dfec(sc.model, {}, sc.sim);
    const DfecRun b = simulate_dfec(sc.model, r.action, sc.sim);
    CHECK(std::abs(a.omega_ss - b.omega_ss) < 1e-4);
  }
  SUBCASE("1 ms shift of T_on barely moves the cost") {
    DfecAction a = r.action;
    a.t_on += 1e-3;
    CHECK(std::abs(nadir_cost(sc.model, a, sc.sim) - r.cost) < 1e-3);
  }
  SUBCASE("cost is non-increasing in dp up to the optimum at a fixed window") {
    double prev = r.uncontrolled_cost;
    for (int i = 1; i <= 10; ++i) {
      DfecAction a = r.action;
      a.dp = r.action.dp * i / 10.0;
      const double c = nadir_cost(sc.model, a, sc.sim);
      CHECK(c <= prev * (1.0 + 1e-9));
      prev = c;
    }
  }
  SUBCASE("single-cell contour equals the cost") {
    const ContourGrid g = contour_sweep(sc.model, r.action.dp, {r.action.t_on}, {r.action.t_off},
                                        sc.sim);
    CHECK(g.cost_x1000(0, 0) == doctest::Approx(1000.0 * r.cost).epsilon(1e-12));
  }
}

TEST_CASE("contour marks invalid cells and is worker-independent") {
  const DfecScenario sc = bundled();
  const auto on = linspace(0.0, 4.0, 5);
  const auto off = linspace(0.0, 8.0, 5);
  const ContourGrid a = contour_sweep(sc.model, 0.05, on, off, sc.sim, 1);
  const ContourGrid b = contour_sweep(sc.model, 0.05, on, off, sc.sim, 3);
  for (Eigen::Index i = 0; i < 5; ++i) {
    for (Eigen::Index k = 0; k < 5; ++k) {
      const bool valid = on[static_cast<std::size_t>(i)] < off[static_cast<std::size_t>(k)];
      CHECK(std::isnan(a.cost_x1000(i, k)) == !valid);
      if (valid) CHECK(a.cost_x1000(i, k) == b.cost_x1000(i, k));
    }
  }
  const auto [i, k] = a.argmin();
  CHECK(on[static_cast<std::size_t>(i)] < off[static_cast<std::size_t>(k)]);
}

TEST_CASE("model and optimiser input validation") {
  TwoMachineModel m = bundled().model;
  m.x = 5.0;  // setpoint beyond the transfer limit
  CHECK_THROWS_AS(m.validate(), ModelError);
  OptimizerOptions o;
  o.bounds.t_max = 100.0;
  CHECK_THROWS_AS(optimize_action(bundled().model, o), OptimizationError);
  CHECK(linspace(1.0, 2.0, 1) == std::vector<double>{1.0});
  CHECK(linspace(0.0, 1.0, 3) == std::vector<double>{0.0, 0.5, 1.0});
}
