#include <doctest.h>

#include <cmath>
#include <numbers>

#include "dgc/deoc.hpp"
#include "dgc/errors.hpp"
#include "dgc/sim.hpp"
#include "support.hpp"

using namespace dgc;

namespace {

struct SmibCase {
  ReducedModel model = build_reduced_model(dgc::test::smib(true));
  ModalBasis basis = analyze(model);
  double w0 = std::sqrt(kNominalOmegaS / 3.5);
  StateVector x0() const {
    StateVector x = model.x_e;
    x(0) += 0.2;
    return x;
  }
};

}  // namespace

TEST_CASE("switching function vanishes on the orbit through x_e") {
  const ReducedModel m = dgc::test::load_model("wscc9.json");
  const ModalBasis b = analyze(m);
  InjectionVector dp = InjectionVector::LinSpaced(m.cc_count(), -0.3, 0.5);
  const StateVector xc = equilibrium_shifted(m, dp);
  const double scale = (m.x_e - xc).dot(b.d * (m.x_e - xc));
  CHECK(std::abs(switching_function(b, m.x_e, xc, m.x_e)) < 1e-12 * scale);
  for (double t : {0.05, 0.4, 1.3}) {
    const StateVector x = propagate(b, xc, m.x_e, t);
    CHECK(std::abs(switching_function(b, m.x_e, xc, x)) < 1e-9 * scale);
  }
  // Off the orbit the sign tells inside from outside.
  CHECK(switching_function(b, m.x_e, xc, xc) > 0.0);
}

TEST_CASE("single machine switch times match the phase-plane solution") {
  // Amplitude 0.2 rad around delta_e = 0 and x_c at 0.2 rad: the circle through
  // x_e around x_c is met at phase pi/3, and x_e is reached a further pi/3 later.
  SmibCase c;
  InjectionVector dp(1);
  dp << 0.8;
  const StateVector xc = equilibrium_shifted(c.model, dp);
  REQUIRE(xc(0) == doctest::Approx(0.2));
  const auto uncontrolled = orbit_segment(c.basis, c.model.x_e, c.x0(), 0.0);
  const SwitchOn on = find_switch_on(c.basis, c.model, xc, uncontrolled, 0.0, 2.0);
  CHECK(on.t == doctest::Approx(std::numbers::pi / (3.0 * c.w0)).epsilon(1e-9));

  const auto controlled = orbit_segment(c.basis, xc, uncontrolled(on.t), on.t);
  const SwitchOff off = find_switch_off(c.model, controlled, on.t, on.t + 2.0);
  CHECK_FALSE(off.window_limited);
  CHECK(off.t == doctest::Approx(2.0 * std::numbers::pi / (3.0 * c.w0)).epsilon(1e-7));
  const double e_on = oscillation_energy(c.model, uncontrolled(on.t));
  CHECK(oscillation_energy(c.model, controlled(off.t)) < 1e-10 * e_on);
  CHECK((controlled(off.t) - c.model.x_e).norm() < 1e-6);
}

TEST_CASE("oscillation energy is the kinetic quadratic form") {
  SmibCase c;
  StateVector x = c.model.x_e;
  x(1) = 1.01;
  CHECK(oscillation_energy(c.model, x) == doctest::Approx(kNominalOmegaS * 3.5 * 1e-4));
  CHECK(oscillation_energy(c.model, c.model.x_e) == 0.0);
}

TEST_CASE("too small a shift leaves no switch opportunity") {
  SmibCase c;
  InjectionVector dp(1);
  dp << 0.2;  // x_c at 0.05 rad, inside half the 0.2 rad amplitude
  const StateVector xc = equilibrium_shifted(c.model, dp);
  const auto uncontrolled = orbit_segment(c.basis, c.model.x_e, c.x0(), 0.0);
  try {
    find_switch_on(c.basis, c.model, xc, uncontrolled, 0.0, 2.0);
    FAIL("expected NoSwitchOpportunityError");
  } catch (const NoSwitchOpportunityError& e) {
    CHECK(e.min_abs_h() > 0.0);
  }
  CHECK_THROWS_AS(find_switch_on(c.basis, c.model, xc, uncontrolled, 1.0, 1.0), DimensionError);
}

TEST_CASE("designed dP reaches its target direction when B_c has full row rank") {
  const ReducedModel m = dgc::test::load_model("wscc9.json");
  const ModalBasis b = analyze(m);
  StateVector x0 = m.x_e;
  x0(0) += 0.1;
  x0(1) -= 0.05;
  for (int pair : {0, 1}) {
    const DpDesign d = design_dp(b, m, x0, {pair}, 0.3);
    CHECK(d.reachable);
    CHECK(d.residual < 1e-10);
    CHECK(d.direction.norm() == doctest::Approx(1.0));
    const Vector shift = m.solve_angles(m.b_c * d.dp);
    CHECK((shift - 0.3 * d.direction).norm() < 1e-10);
    // Minimum norm: no component in the null space of B_c.
    const Eigen::CompleteOrthogonalDecomposition<Matrix> cod(m.b_c);
    CHECK((cod.pseudoInverse() * (m.b_c * d.dp) - d.dp).norm() < 1e-10);
  }
  CHECK_THROWS_AS(design_dp(b, m, x0, {5}, 0.3), DimensionError);
}

TEST_CASE("excitation order sorts by modal content") {
  const ReducedModel m = dgc::test::load_model("ne39.json");
  const ModalBasis b = analyze(m);
  StateVector x0 = m.x_e;
  x0.head(m.machines()) += 0.02 * Vector::LinSpaced(m.machines(), 1, 2);
  const auto order = excitation_order(b, m, x0);
  REQUIRE(order.size() == b.modes.size());
  const ComplexVector z = b.modal_coordinates(x0, m.x_e);
  for (std::size_t k = 1; k < order.size(); ++k)
    CHECK(ModalBasis::pair_energy(z, order[k - 1]) >= ModalBasis::pair_energy(z, order[k]));
}

TEST_CASE("schedule validation") {
  DeocSchedule s;
  ControlStage a;
  a.dp = InjectionVector::Zero(2);
  a.t_on = 1.0;
  a.t_off = 1.5;
  ControlStage b = a;
  b.t_on = 1.4;
  b.t_off = 2.0;
  s.stages = {a, b};
  CHECK_THROWS_AS(s.validate(2), ScheduleError);
  s.stages[1].t_on = 1.6;
  CHECK_NOTHROW(s.validate(2));
  CHECK_THROWS_AS(s.validate(3), ScheduleError);
  s.stages[0].t_off = 0.5;
  CHECK_THROWS_AS(s.validate(2), ScheduleError);
}

TEST_CASE("designed 9-bus schedule removes energy stage by stage") {
  const auto [scenario, grid] = load_deoc_scenario(dgc::test::data_path("wscc9_designed.json"));
  const ReducedModel m = build_reduced_model(grid);
  const ModalBasis b = analyze(m);
  const StateVector x0 = apply_disturbance(m, scenario.disturbance);
  const DeocSchedule s =
      build_schedule(b, m, x0, clearing_time(scenario.disturbance), scenario.request);
  REQUIRE(s.stages.size() == 2);
  CHECK_NOTHROW(s.validate(m.cc_count()));
  for (const auto& st : s.stages) {
    CHECK(st.diagnostics.energy_off < st.diagnostics.energy_on);
    CHECK(st.diagnostics.amplitude_off < st.diagnostics.amplitude_on);
    CHECK(st.diagnostics.h_residual < 1e-6);
  }
  CHECK(s.final_time == doctest::Approx(s.stages.back().t_off));
}

TEST_CASE("dP override count must match the stage list") {
  const ReducedModel m = dgc::test::load_model("wscc9.json");
  const ModalBasis b = analyze(m);
  ScheduleRequest r;
  r.targets = {{0}, {1}};
  r.dp_overrides = {InjectionVector::Zero(6)};
  StateVector x0 = m.x_e;
  x0(0) += 0.1;
  CHECK_THROWS_AS(build_schedule(b, m, x0, 0.0, r), DimensionError);
}
