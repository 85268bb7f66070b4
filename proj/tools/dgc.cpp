// dgc: modal analysis, DEOC scheduling and DFEC studies from JSON inputs.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "dgc/deoc.hpp"
#include "dgc/dfec.hpp"
#include "dgc/errors.hpp"
#include "dgc/grid_io.hpp"
#include "dgc/modal.hpp"
#include "dgc/numeric.hpp"
#include "dgc/report_io.hpp"
#include "dgc/sim.hpp"

namespace fs = std::filesystem;
using namespace dgc;

namespace {

enum Exit { kOk = 0, kNumeric = 1, kInput = 2 };

struct Common {
  std::string system;
  std::string scenario;
  std::string out = ".";
  double dt_out = 0.0;  // 0: scenario value
  double t_end = 0.0;   // 0: scenario value
  std::size_t workers = numeric::default_workers();
};

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

template <class Writer>
void write_with(const fs::path& path, Writer&& w) {
  std::ostringstream os;
  w(os);
  write_text(path, os.str());
}

int cmd_validate(const Common& c) {
  if (c.system.empty() && c.scenario.empty())
    throw InputError("validate needs --system or --scenario");
  if (!c.system.empty()) {
    const GridSystem sys = load_grid(c.system);
    build_reduced_model(sys);
    std::cout << c.system << ": ok (" << sys.buses.size() << " buses, " << sys.branches.size()
              << " branches)\n";
  }
  if (!c.scenario.empty()) {
    const Json j = read_json(c.scenario);
    if (j.contains("system")) {
      load_deoc_scenario(c.scenario);
      std::cout << c.scenario << ": ok (deoc scenario)\n";
    } else {
      load_dfec_scenario(c.scenario);
      std::cout << c.scenario << ": ok (dfec scenario)\n";
    }
  }
  return kOk;
}

int cmd_modes(const Common& c) {
  if (c.system.empty()) throw InputError("modes needs --system");
  const ReducedModel model = build_reduced_model(load_grid(c.system));
  const ModalBasis basis = analyze(model);
  write_text(fs::path(c.out) / "modes.json", dump(modes_to_json(model, basis)));
  std::printf("%-5s %14s %12s  %s\n", "pair", "lambda (rad/s)", "f (Hz)", "dominant machine");
  for (const auto& m : basis.modes) {
    Eigen::Index k = 0;
    m.participation.maxCoeff(&k);
    std::printf("%-5d %14.6f %12.6f  bus %d (%.3f)\n", m.pair, m.frequency,
                m.frequency / (2.0 * std::numbers::pi), model.machine_buses[static_cast<std::size_t>(k)],
                m.participation(k));
  }
  return kOk;
}

int cmd_deoc(const Common& c, bool zero_dp) {
  if (c.scenario.empty()) throw InputError("deoc needs --scenario");
  auto [sc, sys] = load_deoc_scenario(c.scenario);
  if (!c.system.empty()) {
    sys = load_grid(c.system);
    sc = deoc_scenario_from_json(read_json(c.scenario), sys.base_mva, c.scenario);
  }
  if (c.dt_out > 0.0) sc.dt_out = c.dt_out;
  if (c.t_end > 0.0) sc.t_end = c.t_end;
  const ReducedModel model = build_reduced_model(sys);
  const ModalBasis basis = analyze(model);
  if (zero_dp) {
    sc.request.dp_overrides.assign(std::max<std::size_t>(sc.request.targets.size(), 1),
                                   InjectionVector::Zero(model.cc_count()));
  }

  const StateVector x0 = apply_disturbance(model, sc.disturbance);
  const double t0 = clearing_time(sc.disturbance);
  const DeocSchedule schedule = build_schedule(basis, model, x0, t0, sc.request);
  const Trajectory controlled =
      simulate_deoc(model, basis, sc.disturbance, schedule, sc.t_end, sc.dt_out);
  const Trajectory uncontrolled =
      simulate_deoc(model, basis, sc.disturbance, DeocSchedule{}, sc.t_end, sc.dt_out);

  const fs::path out(c.out);
  write_text(out / "deoc_schedule.json", dump(schedule_to_json(schedule, model)));
  write_text(out / "deoc_controlled.json", dump(trajectory_to_json(controlled, model)));
  write_text(out / "deoc_uncontrolled.json", dump(trajectory_to_json(uncontrolled, model)));
  write_with(out / "deoc_controlled.csv",
             [&](std::ostream& os) { write_trajectory_csv(os, controlled, model); });
  write_with(out / "deoc_uncontrolled.csv",
             [&](std::ostream& os) { write_trajectory_csv(os, uncontrolled, model); });

  for (std::size_t i = 0; i < schedule.stages.size(); ++i) {
    const auto& s = schedule.stages[i];
    std::printf("stage %zu: t_on %.4f s  t_off %.4f s  E_k %.4g -> %.4g\n", i, s.t_on, s.t_off,
                s.diagnostics.energy_on, s.diagnostics.energy_off);
  }
  for (const auto& s : schedule.skipped) std::printf("skipped: %s\n", s.reason.c_str());
  const double from = schedule.stages.empty() ? t0 : schedule.stages.back().t_off;
  std::printf("peak E_k after %.3f s: controlled %.4g, uncontrolled %.4g\n", from,
              peak_energy(controlled, from), peak_energy(uncontrolled, from));
  return kOk;
}

struct DfecFlags {
  double rel_tol = 0.0;
  double abs_tol = 0.0;
  int grid = 0;
  double target = 0.0;
  std::optional<double> dp, t_on, t_off;
};

DfecScenario dfec_inputs(const Common& c, const DfecFlags& f) {
  if (c.scenario.empty()) throw InputError("dfec needs --scenario");
  DfecScenario sc = load_dfec_scenario(c.scenario);
  if (c.dt_out > 0.0) sc.sim.dt_out = c.dt_out;
  if (c.t_end > 0.0) sc.sim.horizon = c.t_end;
  if (f.rel_tol > 0.0) sc.sim.integrator.rel_tol = f.rel_tol;
  if (f.abs_tol > 0.0) sc.sim.integrator.abs_tol = f.abs_tol;
  sc.optimizer.workers = c.workers;
  return sc;
}

int cmd_dfec_optimize(const Common& c, const DfecFlags& f) {
  DfecScenario sc = dfec_inputs(c, f);
  if (f.grid > 0) sc.optimizer.grid = f.grid;
  const DfecResult r = optimize_action(sc.model, sc.optimizer, sc.sim, sc.initial_guess);
  const fs::path out(c.out);
  write_text(out / "dfec_result.json", dump(dfec_result_to_json(r, sc.model)));
  const DfecRun run = simulate_dfec(sc.model, r.action, sc.sim);
  write_with(out / "dfec_trajectory.csv",
             [&](std::ostream& os) { write_dfec_trajectory_csv(os, run, sc.model); });
  std::printf("dp %.4f pu  T_on %.3f s  T_off %.3f s\n", r.action.dp, r.action.t_on,
              r.action.t_off);
  std::printf("cost %.5f (uncontrolled %.5f)  nadir %.4f (uncontrolled %.4f)  %d evaluations\n",
              r.cost, r.uncontrolled_cost, r.controlled_nadir, r.uncontrolled_nadir,
              r.evaluations);
  return kOk;
}

int cmd_dfec_sweep(const Common& c, const DfecFlags& f) {
  const DfecScenario sc = dfec_inputs(c, f);
  SweepSpec sp = sc.sweep.value_or(SweepSpec{});
  if (!sc.sweep && !f.dp) throw InputError("scenario has no sweep section; pass --dp");
  if (f.dp) sp.dp = *f.dp;
  if (f.grid > 0) sp.t_on_n = sp.t_off_n = f.grid;
  const ContourGrid grid =
      contour_sweep(sc.model, sp.dp, linspace(sp.t_on_lo, sp.t_on_hi, sp.t_on_n),
                    linspace(sp.t_off_lo, sp.t_off_hi, sp.t_off_n), sc.sim, c.workers);
  write_with(fs::path(c.out) / "dfec_contour.csv",
             [&](std::ostream& os) { write_contour_csv(os, grid); });
  const auto [i, k] = grid.argmin();
  if (i >= 0) {
    std::printf("grid best: T_on %.3f s  T_off %.3f s  cost x1000 %.4f\n",
                grid.t_on[static_cast<std::size_t>(i)], grid.t_off[static_cast<std::size_t>(k)],
                grid.cost_x1000(i, k));
  }
  return kOk;
}

int cmd_dfec_simulate(const Common& c, const DfecFlags& f) {
  const DfecScenario sc = dfec_inputs(c, f);
  DfecAction a = sc.action.value_or(DfecAction{});
  if (f.dp) a.dp = *f.dp;
  if (f.t_on) a.t_on = *f.t_on;
  if (f.t_off) a.t_off = *f.t_off;
  const DfecRun run = simulate_dfec(sc.model, a, sc.sim);
  const double cost = run.unstable ? std::numeric_limits<double>::infinity()
                                   : std::max(0.0, run.omega_ss - run.min_speed);
  Json j{{"schema_version", kSchemaVersion},
         {"kind", "dfec_simulation"},
         {"action", {{"dp", a.dp}, {"t_on", a.t_on}, {"t_off", a.t_off}}},
         {"cost", cost},
         {"nadir", nadir_depth(run)},
         {"nadir_time", run.nadir_time},
         {"omega_ss", run.omega_ss},
         {"unstable", run.unstable}};
  const fs::path out(c.out);
  write_text(out / "dfec_simulation.json", dump(j));
  write_with(out / "dfec_trajectory.csv",
             [&](std::ostream& os) { write_dfec_trajectory_csv(os, run, sc.model); });
  std::printf("nadir %.4f at %.3f s  omega_ss %.6f  cost %.5f%s\n", nadir_depth(run),
              run.nadir_time, run.omega_ss, cost, run.unstable ? "  (unstable)" : "");
  return kOk;
}

int cmd_dfec_calibrate(const Common& c, const DfecFlags& f) {
  const DfecScenario sc = dfec_inputs(c, f);
  const double target = f.target > 0.0 ? f.target : sc.target_nadir.value_or(0.04);
  const double k1 = calibrate_droop(sc.model, target, sc.sim);
  TwoMachineModel m = sc.model;
  m.governor.k1 = k1;
  const double achieved = nadir_depth(simulate_dfec(m, {}, sc.sim));
  Json j{{"schema_version", kSchemaVersion},
         {"kind", "dfec_calibration"},
         {"target_nadir", target},
         {"k1", k1},
         {"nadir", achieved},
         {"model", dfec_model_to_json(m)}};
  write_text(fs::path(c.out) / "dfec_calibration.json", dump(j));
  std::printf("K1 %.6f gives nadir %.6f (target %.4f)\n", k1, achieved, target);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete power-injection control studies"};
  app.require_subcommand(1);
  Common c;
  DfecFlags f;
  bool zero_dp = false;

  auto add_common = [&](CLI::App* s) {
    s->add_option("--out", c.out, "Output directory")->capture_default_str();
    s->add_option("--workers", c.workers, "Worker threads")->capture_default_str();
  };

  auto* validate = app.add_subcommand("validate", "Schema and structure check of an input file");
  validate->add_option("--system", c.system, "Grid JSON file");
  validate->add_option("--scenario", c.scenario, "DEOC or DFEC scenario JSON file");

  auto* modes = app.add_subcommand("modes", "Eigenvalues and participation of the swing model");
  modes->add_option("--system", c.system, "Grid JSON file")->required();
  add_common(modes);

  auto* deoc = app.add_subcommand("deoc", "Schedule DEOC stages and simulate the scenario");
  deoc->add_option("--scenario", c.scenario, "DEOC scenario JSON file")->required();
  deoc->add_option("--system", c.system, "Grid JSON file, overrides the scenario's");
  deoc->add_option("--dt-out", c.dt_out, "Output sample spacing, s");
  deoc->add_option("--t-end", c.t_end, "Simulation end time, s");
  deoc->add_flag("--zero-dp", zero_dp, "Replace every stage's dP with zeros");
  add_common(deoc);

  auto* dfec = app.add_subcommand("dfec", "Two-machine frequency excursion studies");
  dfec->require_subcommand(1);
  auto dfec_common = [&](CLI::App* s) {
    s->add_option("--scenario", c.scenario, "DFEC scenario JSON file")->required();
    s->add_option("--dt-out", c.dt_out, "Output sample spacing, s");
    s->add_option("--t-end", c.t_end, "Simulation horizon, s");
    s->add_option("--rel-tol", f.rel_tol, "Integrator relative tolerance");
    s->add_option("--abs-tol", f.abs_tol, "Integrator absolute tolerance");
    add_common(s);
  };
  auto* optimize = dfec->add_subcommand("optimize", "Search (dP, T_on, T_off)");
  dfec_common(optimize);
  optimize->add_option("--grid", f.grid, "Multi-start grid points per axis");
  auto* sweep = dfec->add_subcommand("sweep", "Cost contour over T_on and T_off");
  dfec_common(sweep);
  sweep->add_option("--grid", f.grid, "Points per axis");
  sweep->add_option("--dp", f.dp, "Injected power, pu");
  auto* simulate = dfec->add_subcommand("simulate", "Single run for one action");
  dfec_common(simulate);
  simulate->add_option("--dp", f.dp, "Injected power, pu");
  simulate->add_option("--t-on", f.t_on, "Switch-on time, s");
  simulate->add_option("--t-off", f.t_off, "Switch-off time, s");
  auto* calibrate = dfec->add_subcommand("calibrate", "Governor gain for a target nadir");
  dfec_common(calibrate);
  calibrate->add_option("--target", f.target, "Nadir depth, pu");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInput;
  }

  try {
    if (*validate) return cmd_validate(c);
    if (*modes) return cmd_modes(c);
    if (*deoc) return cmd_deoc(c, zero_dp);
    if (*optimize) return cmd_dfec_optimize(c, f);
    if (*sweep) return cmd_dfec_sweep(c, f);
    if (*simulate) return cmd_dfec_simulate(c, f);
    if (*calibrate) return cmd_dfec_calibrate(c, f);
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kInput;
  } catch (const ModelError& e) {
    std::cerr << "model error: " << e.what() << '\n';
    return kInput;
  } catch (const DimensionError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kInput;
  } catch (const ScheduleError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kInput;
  } catch (const Error& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kNumeric;
  }
  return kOk;
}
