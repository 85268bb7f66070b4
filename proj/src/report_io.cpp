#include "dgc/report_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

#include "dgc/errors.hpp"

namespace dgc {

namespace {

Json vector_json(const Eigen::Ref<const Vector>& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Vector json_vector(const Json& a) {
  const auto values = a.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

double number_or_nan(const Json& v) {
  return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
}

void expect_kind(const Json& j, const char* kind) {
  if (!j.is_object() || j.value("kind", std::string()) != kind)
    throw InputError(std::string("expected a document of kind '") + kind + "'");
  if (j.value("schema_version", 0) != kSchemaVersion)
    throw InputError(std::string(kind) + ": unsupported schema_version");
}

// Wraps nlohmann type errors so callers see InputError only.
template <class F>
auto parsing(const char* what, F&& f) {
  try {
    return f();
  } catch (const Json::exception& e) {
    throw InputError(std::string(what) + ": " + e.what());
  }
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
  if (!out) throw InputError("cannot write " + path.string());
}

Json modes_to_json(const ReducedModel& model, const ModalBasis& basis) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "modes";
  j["omega_s"] = model.omega_s;
  j["infinite_bus"] = model.infinite_bus;
  j["machine_buses"] = model.machine_buses;
  j["modes"] = Json::array();
  for (const auto& m : basis.modes) {
    const auto lam = basis.lambda(2 * m.pair);
    j["modes"].push_back({{"pair", m.pair},
                          {"eigenvalue", {lam.real(), lam.imag()}},
                          {"frequency_rad_s", m.frequency},
                          {"frequency_hz", m.frequency / (2.0 * std::numbers::pi)},
                          {"participation", vector_json(m.participation)}});
  }
  return j;
}

Json schedule_to_json(const DeocSchedule& schedule, const ReducedModel& model) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "deoc_schedule";
  j["base_mva"] = model.base_mva;
  j["cc_buses"] = model.cc_buses;
  j["stages"] = Json::array();
  for (const auto& s : schedule.stages) {
    const auto& d = s.diagnostics;
    j["stages"].push_back({{"target_modes", s.target_modes},
                           {"dp_pu", vector_json(s.dp)},
                           {"dp_mw", vector_json(s.dp * model.base_mva)},
                           {"t_on", s.t_on},
                           {"t_off", s.t_off},
                           {"energy_on", d.energy_on},
                           {"energy_off", d.energy_off},
                           {"amplitude_on", d.amplitude_on},
                           {"amplitude_off", d.amplitude_off},
                           {"h_residual", d.h_residual},
                           {"closest_approach", d.closest_approach},
                           {"window_limited", d.window_limited},
                           {"reachable", d.reachable},
                           {"reach_residual", d.reach_residual}});
  }
  j["skipped"] = Json::array();
  for (const auto& s : schedule.skipped)
    j["skipped"].push_back({{"target_modes", s.target_modes}, {"reason", s.reason}});
  j["final_time"] = schedule.final_time;
  j["final_state"] = vector_json(schedule.final_state);
  return j;
}

DeocSchedule schedule_from_json(const Json& j) {
  expect_kind(j, "deoc_schedule");
  return parsing("deoc_schedule", [&] {
    DeocSchedule s;
    for (const auto& st : j.at("stages")) {
      ControlStage c;
      c.target_modes = st.at("target_modes").get<std::vector<int>>();
      c.dp = json_vector(st.at("dp_pu"));
      c.t_on = st.at("t_on").get<double>();
      c.t_off = st.at("t_off").get<double>();
      auto& d = c.diagnostics;
      d.energy_on = st.at("energy_on").get<double>();
      d.energy_off = st.at("energy_off").get<double>();
      d.amplitude_on = st.at("amplitude_on").get<double>();
      d.amplitude_off = st.at("amplitude_off").get<double>();
      d.h_residual = st.at("h_residual").get<double>();
      d.closest_approach = st.at("closest_approach").get<double>();
      d.window_limited = st.at("window_limited").get<bool>();
      d.reachable = st.at("reachable").get<bool>();
      d.reach_residual = st.at("reach_residual").get<double>();
      s.stages.push_back(std::move(c));
    }
    for (const auto& sk : j.at("skipped"))
      s.skipped.push_back(
          {sk.at("target_modes").get<std::vector<int>>(), sk.at("reason").get<std::string>()});
    s.final_time = j.at("final_time").get<double>();
    s.final_state = json_vector(j.at("final_state"));
    return s;
  });
}

Json trajectory_to_json(const Trajectory& traj, const ReducedModel& model) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "trajectory";
  j["machine_buses"] = model.machine_buses;
  j["time"] = traj.time;
  j["states"] = Json::array();
  for (const auto& x : traj.states) j["states"].push_back(vector_json(x));
  j["energy"] = traj.energy;
  j["orbit"] = traj.orbit;
  j["h"] = Json::array();
  for (double h : traj.h) j["h"].push_back(std::isnan(h) ? Json(nullptr) : Json(h));
  j["stage"] = traj.stage;
  j["events"] = Json::array();
  for (const auto& e : traj.events)
    j["events"].push_back({{"t", e.t}, {"kind", to_string(e.kind)}, {"stage", e.stage}});
  return j;
}

Trajectory trajectory_from_json(const Json& j) {
  expect_kind(j, "trajectory");
  return parsing("trajectory", [&] {
    Trajectory t;
    t.time = j.at("time").get<std::vector<double>>();
    for (const auto& x : j.at("states")) t.states.push_back(json_vector(x));
    t.energy = j.at("energy").get<std::vector<double>>();
    t.orbit = j.at("orbit").get<std::vector<double>>();
    for (const auto& h : j.at("h")) t.h.push_back(number_or_nan(h));
    t.stage = j.at("stage").get<std::vector<int>>();
    for (const auto& e : j.at("events"))
      t.events.push_back({e.at("t").get<double>(),
                          event_kind_from_string(e.at("kind").get<std::string>()),
                          e.at("stage").get<int>()});
    const std::size_t n = t.time.size();
    if (t.states.size() != n || t.energy.size() != n || t.orbit.size() != n ||
        t.h.size() != n || t.stage.size() != n)
      throw InputError("trajectory: arrays differ in length");
    return t;
  });
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj, const ReducedModel& model) {
  const auto& buses = model.machine_buses;
  out << "t";
  for (int b : buses) out << ",delta_" << b;
  for (int b : buses) out << ",omega_" << b;
  for (int b : buses) out << ",f_hz_" << b;
  out << ",E_k,orbit_value,h,stage\n";
  const double f0 = model.omega_s / (2.0 * std::numbers::pi);
  for (std::size_t i = 0; i < traj.time.size(); ++i) {
    const auto& x = traj.states[i];
    const Eigen::Index m = x.size() / 2;
    out << format_number(traj.time[i]);
    for (Eigen::Index k = 0; k < m; ++k) out << ',' << format_number(x(k));
    for (Eigen::Index k = 0; k < m; ++k) out << ',' << format_number(x(m + k));
    for (Eigen::Index k = 0; k < m; ++k) out << ',' << format_number(f0 * x(m + k));
    out << ',' << format_number(traj.energy[i]) << ',' << format_number(traj.orbit[i]) << ',';
    if (!std::isnan(traj.h[i])) out << format_number(traj.h[i]);
    out << ',' << traj.stage[i] << '\n';
  }
}

Json dfec_result_to_json(const DfecResult& r, const TwoMachineModel& model) {
  auto action = [](const DfecAction& a) {
    return Json{{"dp", a.dp}, {"t_on", a.t_on}, {"t_off", a.t_off}};
  };
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "dfec_result";
  j["model"] = dfec_model_to_json(model);
  j["action"] = action(r.action);
  j["cost"] = r.cost;
  j["uncontrolled_cost"] = r.uncontrolled_cost;
  j["uncontrolled_nadir"] = r.uncontrolled_nadir;
  j["controlled_nadir"] = r.controlled_nadir;
  j["evaluations"] = r.evaluations;
  j["history"] = Json::array();
  for (const auto& h : r.history) {
    Json e = action(h.action);
    e["evaluation"] = h.evaluation;
    e["cost"] = h.cost;
    j["history"].push_back(std::move(e));
  }
  return j;
}

DfecResult dfec_result_from_json(const Json& j) {
  expect_kind(j, "dfec_result");
  return parsing("dfec_result", [&] {
    auto action = [](const Json& a) {
      return DfecAction{a.at("dp").get<double>(), a.at("t_on").get<double>(),
                        a.at("t_off").get<double>()};
    };
    DfecResult r;
    r.action = action(j.at("action"));
    r.cost = j.at("cost").get<double>();
    r.uncontrolled_cost = j.at("uncontrolled_cost").get<double>();
    r.uncontrolled_nadir = j.at("uncontrolled_nadir").get<double>();
    r.controlled_nadir = j.at("controlled_nadir").get<double>();
    r.evaluations = j.at("evaluations").get<int>();
    for (const auto& h : j.at("history"))
      r.history.push_back({h.at("evaluation").get<int>(), action(h), h.at("cost").get<double>()});
    return r;
  });
}

void write_contour_csv(std::ostream& out, const ContourGrid& grid) {
  out << "t_on\\t_off";
  for (double t : grid.t_off) out << ',' << format_number(t);
  out << '\n';
  for (std::size_t i = 0; i < grid.t_on.size(); ++i) {
    out << format_number(grid.t_on[i]);
    for (std::size_t k = 0; k < grid.t_off.size(); ++k) {
      const double c =
          grid.cost_x1000(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
      out << ',';
      if (!std::isnan(c)) out << format_number(c);
    }
    out << '\n';
  }
}

void write_dfec_trajectory_csv(std::ostream& out, const DfecRun& run,
                               const TwoMachineModel& model) {
  const auto& g = model.governor;
  out << "t,delta1,omega1,delta2,omega2,mean_omega,p_mech\n";
  for (std::size_t i = 0; i < run.solution.time.size(); ++i) {
    const auto& s = run.solution.states[i];
    const double p_mech = (1.0 - g.k2) * s[6] + g.k2 * ((1.0 - g.k3) * s[7] + g.k3 * s[8]);
    out << format_number(run.solution.time[i]) << ',' << format_number(s[0]) << ','
        << format_number(s[1]) << ',' << format_number(s[2]) << ',' << format_number(s[3]) << ','
        << format_number(run.mean_speed[i]) << ',' << format_number(p_mech) << '\n';
  }
}

}  // namespace dgc
