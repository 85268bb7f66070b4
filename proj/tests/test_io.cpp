#include <doctest.h>

#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "dgc/errors.hpp"
#include "dgc/report_io.hpp"
#include "support.hpp"

using namespace dgc;

namespace {

Json smib_json() {
  return Json::parse(R"({
    "schema_version": 1, "name": "t", "base_mva": 100, "units": "MW",
    "buses": [{"id": 1, "type": "generator"}, {"id": 2, "type": "generator"},
              {"id": 3, "type": "non-generator"}],
    "branches": [{"from": 1, "to": 3, "x": 0.25}, {"from": 3, "to": 2, "x": 0.25}],
    "generators": [{"bus": 1, "H": 3.5, "Pm": 50},
                   {"bus": 2, "H": 1000, "Pm": 0, "infinite_bus": true}],
    "loads": [{"bus": 3, "P": 20}],
    "ccs": [{"bus": 3, "P0": 10}]
  })");
}

}  // namespace

TEST_CASE("MW quantities convert to pu on the system base") {
  const GridSystem s = grid_from_json(smib_json());
  CHECK(s.generators[0].p_mech == doctest::Approx(0.5));
  CHECK(s.loads[0].p == doctest::Approx(0.2));
  CHECK(s.ccs[0].p0 == doctest::Approx(0.1));

  Json j = smib_json();
  j["units"] = "pu";
  j["generators"][0]["Pm"] = 0.5;
  CHECK(grid_from_json(j).generators[0].p_mech == 0.5);
}

TEST_CASE("grid JSON round-trips through the pu writer") {
  const GridSystem a = load_grid(dgc::test::data_path("ne39.json"));
  const GridSystem b = grid_from_json(grid_to_json(a));
  const ReducedModel ma = build_reduced_model(a);
  const ReducedModel mb = build_reduced_model(b);
  CHECK(ma.b_a == mb.b_a);
  CHECK(ma.x_e == mb.x_e);
  CHECK(ma.machine_buses == mb.machine_buses);
}

TEST_CASE("schema problems are InputErrors") {
  Json j = smib_json();
  j.erase("units");
  CHECK_THROWS_AS(grid_from_json(j), InputError);
  j = smib_json();
  j["schema_version"] = 7;
  CHECK_THROWS_AS(grid_from_json(j), InputError);
  j = smib_json();
  j["buses"][0]["type"] = "slack";
  CHECK_THROWS_AS(grid_from_json(j), InputError);
  j = smib_json();
  j["branches"][0]["x"] = "small";
  CHECK_THROWS_AS(grid_from_json(j), InputError);
  j = smib_json();
  j["branches"][0]["x"] = -0.1;
  CHECK_THROWS_AS(grid_from_json(j), ModelError);

  const auto bad = dgc::test::scratch("io") / "broken.json";
  std::ofstream(bad) << "{\"schema_version\": 1, \"buses\": [";
  CHECK_THROWS_AS(read_json(bad), InputError);
  CHECK_THROWS_AS(read_json(dgc::test::scratch("io") / "missing.json"), InputError);
}

TEST_CASE("scenario files load with MW overrides scaled") {
  const auto [sc, grid] = load_deoc_scenario(dgc::test::data_path("wscc9_deoc.json"));
  REQUIRE(sc.request.dp_overrides.size() == 2);
  CHECK(sc.request.dp_overrides[0](0) == doctest::Approx(-0.168));
  const auto& pulse = std::get<PowerPulse>(sc.disturbance);
  CHECK(pulse.magnitude == doctest::Approx(1.63));
  CHECK(grid.base_mva == 100.0);

  const DfecScenario d = load_dfec_scenario(dgc::test::data_path("dfec.json"));
  CHECK(d.target_nadir.value() == 0.04);
  CHECK(d.sweep.has_value());
  CHECK(d.optimizer.bounds.t_max <= d.sim.horizon);
}

TEST_CASE("schedule and trajectory JSON round-trip") {
  const auto [scenario, grid] = load_deoc_scenario(dgc::test::data_path("wscc9_designed.json"));
  const ReducedModel m = build_reduced_model(grid);
  const ModalBasis b = analyze(m);
  const DeocSchedule s = build_schedule(b, m, apply_disturbance(m, scenario.disturbance),
                                        clearing_time(scenario.disturbance), scenario.request);
  const Json sj = schedule_to_json(s, m);
  const DeocSchedule s2 = schedule_from_json(Json::parse(sj.dump()));
  REQUIRE(s2.stages.size() == s.stages.size());
  for (std::size_t k = 0; k < s.stages.size(); ++k) {
    CHECK(s2.stages[k].dp == s.stages[k].dp);
    CHECK(s2.stages[k].t_on == s.stages[k].t_on);
    CHECK(s2.stages[k].t_off == s.stages[k].t_off);
  }
  CHECK(s2.final_state == s.final_state);

  const Trajectory t = simulate_deoc(m, b, scenario.disturbance, s, 1.5, 0.05);
  const Trajectory t2 = trajectory_from_json(Json::parse(trajectory_to_json(t, m).dump()));
  CHECK(t2.time == t.time);
  CHECK(t2.energy == t.energy);
  REQUIRE(t2.h.size() == t.h.size());
  for (std::size_t i = 0; i < t.h.size(); ++i) {
    if (std::isnan(t.h[i]))
      CHECK(std::isnan(t2.h[i]));
    else
      CHECK(t2.h[i] == t.h[i]);
  }
  CHECK(t2.events.size() == t.events.size());
  CHECK_THROWS_AS(schedule_from_json(trajectory_to_json(t, m)), InputError);
}

TEST_CASE("DFEC result JSON round-trip") {
  DfecResult r;
  r.action = {0.05, 1.25, 14.5};
  r.cost = 0.002;
  r.uncontrolled_cost = 0.0096;
  r.uncontrolled_nadir = 0.04;
  r.controlled_nadir = 0.032;
  r.evaluations = 17;
  r.history = {{3, {0.1, 0.2, 0.3}, 0.005}, {17, r.action, r.cost}};
  const DfecResult q = dfec_result_from_json(Json::parse(dfec_result_to_json(r, {}).dump()));
  CHECK(q.action.t_off == r.action.t_off);
  CHECK(q.cost == r.cost);
  CHECK(q.evaluations == 17);
  REQUIRE(q.history.size() == 2);
  CHECK(q.history[0].action.t_on == 0.2);
}

TEST_CASE("numbers print in shortest round-trip form") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng);
    CHECK(std::stod(format_number(v)) == v);
  }
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(std::numeric_limits<double>::quiet_NaN()) == "nan");
}

TEST_CASE("contour CSV carries grid values in the header row and first column") {
  ContourGrid g;
  g.t_on = {0.0, 1.0};
  g.t_off = {0.5, 2.0};
  g.cost_x1000 = Matrix(2, 2);
  g.cost_x1000 << 3.0, 2.5, std::numeric_limits<double>::quiet_NaN(), 1.5;
  std::ostringstream os;
  write_contour_csv(os, g);
  CHECK(os.str() == "t_on\\t_off,0.5,2\n0,3,2.5\n1,,1.5\n");
}
