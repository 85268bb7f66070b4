#include "dgc/grid_io.hpp"

#include <fstream>
#include <sstream>

#include "dgc/errors.hpp"

namespace dgc {

namespace {

const Json& field(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object()) throw InputError(where + " must be an object");
  auto it = j.find(key);
  if (it == j.end()) throw InputError(where + ": missing field '" + key + "'");
  return *it;
}

template <class T>
T as(const Json& v, const std::string& what) {
  try {
    return v.get<T>();
  } catch (const Json::exception& e) {
    throw InputError(what + ": " + e.what());
  }
}

template <class T>
T get(const Json& j, const char* key, const std::string& where) {
  return as<T>(field(j, key, where), where + "." + key);
}

template <class T>
T get_or(const Json& j, const char* key, T fallback, const std::string& where) {
  if (!j.is_object()) throw InputError(where + " must be an object");
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  return as<T>(*it, where + "." + key);
}

const Json& array(const Json& j, const char* key, const std::string& where) {
  const Json& a = field(j, key, where);
  if (!a.is_array()) throw InputError(where + "." + key + " must be an array");
  return a;
}

void check_schema(const Json& j, const std::string& where) {
  const int v = get<int>(j, "schema_version", where);
  if (v != kSchemaVersion)
    throw InputError(where + ": unsupported schema_version " + std::to_string(v));
}

// Multiplier taking file powers to pu.
double power_scale(const Json& j, double base_mva, const std::string& where, bool required) {
  const std::string units =
      required ? get<std::string>(j, "units", where) : get_or<std::string>(j, "units", "pu", where);
  if (units == "pu") return 1.0;
  if (units == "MW") return 1.0 / base_mva;
  throw InputError(where + ": units must be \"MW\" or \"pu\", got \"" + units + "\"");
}

Vector as_vector(const Json& v, const std::string& what) {
  const auto values = as<std::vector<double>>(v, what);
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

std::string context(const std::string& base, std::size_t i) {
  return base + "[" + std::to_string(i) + "]";
}

}  // namespace

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

GridSystem grid_from_json(const Json& j) {
  const std::string w = "grid";
  check_schema(j, w);
  GridSystem sys;
  sys.name = get_or<std::string>(j, "name", "", w);
  sys.base_mva = get<double>(j, "base_mva", w);
  if (!(sys.base_mva > 0.0)) throw InputError("grid.base_mva must be positive");
  sys.omega_s = get_or<double>(j, "omega_s", kNominalOmegaS, w);
  const double k = power_scale(j, sys.base_mva, w, true);

  const Json& buses = array(j, "buses", w);
  for (std::size_t i = 0; i < buses.size(); ++i) {
    const std::string c = context("buses", i);
    Bus b;
    b.id = get<int>(buses[i], "id", c);
    const auto type = get<std::string>(buses[i], "type", c);
    if (type == "generator") {
      b.type = BusType::generator;
    } else if (type == "non-generator") {
      b.type = BusType::non_generator;
    } else {
      throw InputError(c + ".type must be \"generator\" or \"non-generator\"");
    }
    sys.buses.push_back(b);
  }
  const Json& branches = array(j, "branches", w);
  for (std::size_t i = 0; i < branches.size(); ++i) {
    const std::string c = context("branches", i);
    sys.branches.push_back({get<int>(branches[i], "from", c), get<int>(branches[i], "to", c),
                            get<double>(branches[i], "x", c),
                            get_or<bool>(branches[i], "in_service", true, c)});
  }
  const Json& gens = array(j, "generators", w);
  for (std::size_t i = 0; i < gens.size(); ++i) {
    const std::string c = context("generators", i);
    sys.generators.push_back({get<int>(gens[i], "bus", c), get<double>(gens[i], "H", c),
                              k * get<double>(gens[i], "Pm", c),
                              get_or<bool>(gens[i], "infinite_bus", false, c)});
  }
  if (j.contains("loads")) {
    const Json& loads = array(j, "loads", w);
    for (std::size_t i = 0; i < loads.size(); ++i) {
      const std::string c = context("loads", i);
      sys.loads.push_back({get<int>(loads[i], "bus", c), k * get<double>(loads[i], "P", c)});
    }
  }
  if (j.contains("ccs")) {
    const Json& ccs = array(j, "ccs", w);
    for (std::size_t i = 0; i < ccs.size(); ++i) {
      const std::string c = context("ccs", i);
      sys.ccs.push_back({get<int>(ccs[i], "bus", c), k * get_or<double>(ccs[i], "P0", 0.0, c)});
    }
  }
  sys.validate();
  return sys;
}

GridSystem load_grid(const std::filesystem::path& path) {
  try {
    return grid_from_json(read_json(path));
  } catch (const InputError& e) {
    if (std::string(e.what()).rfind(path.string(), 0) == 0) throw;
    throw InputError(path.string() + ": " + e.what());
  }
}

Json grid_to_json(const GridSystem& sys) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["name"] = sys.name;
  j["base_mva"] = sys.base_mva;
  j["omega_s"] = sys.omega_s;
  j["units"] = "pu";
  j["buses"] = Json::array();
  for (const auto& b : sys.buses)
    j["buses"].push_back(
        {{"id", b.id}, {"type", b.type == BusType::generator ? "generator" : "non-generator"}});
  j["branches"] = Json::array();
  for (const auto& br : sys.branches)
    j["branches"].push_back(
        {{"from", br.from}, {"to", br.to}, {"x", br.x}, {"in_service", br.in_service}});
  j["generators"] = Json::array();
  for (const auto& g : sys.generators)
    j["generators"].push_back(
        {{"bus", g.bus}, {"H", g.inertia}, {"Pm", g.p_mech}, {"infinite_bus", g.infinite_bus}});
  j["loads"] = Json::array();
  for (const auto& l : sys.loads) j["loads"].push_back({{"bus", l.bus}, {"P", l.p}});
  j["ccs"] = Json::array();
  for (const auto& c : sys.ccs) j["ccs"].push_back({{"bus", c.bus}, {"P0", c.p0}});
  return j;
}

DeocScenario deoc_scenario_from_json(const Json& j, double base_mva,
                                     const std::filesystem::path& origin) {
  const std::string w = "deoc scenario";
  check_schema(j, w);
  DeocScenario sc;
  sc.name = get_or<std::string>(j, "name", "", w);
  const auto system = get<std::string>(j, "system", w);
  sc.system = origin.empty() ? std::filesystem::path(system) : origin.parent_path() / system;
  const double k = power_scale(j, base_mva, w, false);
  sc.t_end = get_or<double>(j, "t_end", sc.t_end, w);
  sc.dt_out = get_or<double>(j, "dt_out", sc.dt_out, w);
  if (!(sc.dt_out > 0.0)) throw InputError(w + ": dt_out must be positive");

  const Json& d = field(j, "disturbance", w);
  const std::string dw = "disturbance";
  const auto type = get<std::string>(d, "type", dw);
  if (type == "pulse") {
    PowerPulse p;
    p.bus = get<int>(d, "bus", dw);
    p.magnitude = k * get<double>(d, "magnitude", dw);
    p.start = get_or<double>(d, "start", 0.0, dw);
    p.duration = get<double>(d, "duration", dw);
    sc.disturbance = p;
  } else if (type == "initial_state") {
    InitialState s;
    s.x0 = as_vector(field(d, "x0", dw), dw + ".x0");
    s.t0 = get_or<double>(d, "t0", 0.0, dw);
    sc.disturbance = s;
  } else {
    throw InputError(dw + ".type must be \"pulse\" or \"initial_state\"");
  }

  if (j.contains("schedule")) {
    const Json& s = j["schedule"];
    const std::string sw = "schedule";
    auto& r = sc.request;
    if (s.contains("targets")) r.targets = as<std::vector<std::vector<int>>>(s["targets"], sw + ".targets");
    r.stage_count = get_or<std::size_t>(s, "stage_count", r.stage_count, sw);
    if (s.contains("dp_overrides")) {
      const Json& o = array(s, "dp_overrides", sw);
      for (std::size_t i = 0; i < o.size(); ++i)
        r.dp_overrides.push_back(k * as_vector(o[i], context(sw + ".dp_overrides", i)));
    }
    r.amplitude_ratio = get_or<double>(s, "amplitude_ratio", r.amplitude_ratio, sw);
    if (s.contains("scale")) r.scale = get<double>(s, "scale", sw);
    if (s.contains("t_arm")) r.t_arm = get<double>(s, "t_arm", sw);
    r.search_window = get_or<double>(s, "search_window", r.search_window, sw);
    r.off_window = get_or<double>(s, "off_window", r.off_window, sw);
    r.step = get_or<double>(s, "step", r.step, sw);
  }
  return sc;
}

std::pair<DeocScenario, GridSystem> load_deoc_scenario(const std::filesystem::path& path) {
  const Json j = read_json(path);
  const std::string system = get<std::string>(j, "system", path.string());
  GridSystem sys = load_grid(path.parent_path() / system);
  DeocScenario sc = deoc_scenario_from_json(j, sys.base_mva, path);
  return {std::move(sc), std::move(sys)};
}

DfecScenario dfec_scenario_from_json(const Json& j) {
  const std::string w = "dfec scenario";
  check_schema(j, w);
  DfecScenario sc;
  sc.name = get_or<std::string>(j, "name", "", w);

  if (j.contains("model")) {
    const Json& m = j["model"];
    const std::string mw = "model";
    auto& md = sc.model;
    md.h1 = get_or(m, "h1", md.h1, mw);
    md.h2 = get_or(m, "h2", md.h2, mw);
    md.e1 = get_or(m, "e1", md.e1, mw);
    md.e2 = get_or(m, "e2", md.e2, mw);
    md.x = get_or(m, "x", md.x, mw);
    md.d1 = get_or(m, "d1", md.d1, mw);
    md.d2 = get_or(m, "d2", md.d2, mw);
    md.omega_s = get_or(m, "omega_s", md.omega_s, mw);
    md.p_set = get_or(m, "p_set", md.p_set, mw);
    md.load_step = get_or(m, "load_step", md.load_step, mw);
    md.t_disturbance = get_or(m, "t_disturbance", md.t_disturbance, mw);
    if (m.contains("governor")) {
      const Json& g = m["governor"];
      const std::string gw = "model.governor";
      auto& gv = md.governor;
      gv.k1 = get_or(g, "k1", gv.k1, gw);
      gv.t1 = get_or(g, "t1", gv.t1, gw);
      gv.t2 = get_or(g, "t2", gv.t2, gw);
      gv.t3 = get_or(g, "t3", gv.t3, gw);
      gv.t4 = get_or(g, "t4", gv.t4, gw);
      gv.t5 = get_or(g, "t5", gv.t5, gw);
      gv.t6 = get_or(g, "t6", gv.t6, gw);
      gv.k2 = get_or(g, "k2", gv.k2, gw);
      gv.k3 = get_or(g, "k3", gv.k3, gw);
      gv.p_max = get_or(g, "p_max", gv.p_max, gw);
      gv.p_min = get_or(g, "p_min", gv.p_min, gw);
    }
  }
  sc.model.validate();

  if (j.contains("simulation")) {
    const Json& s = j["simulation"];
    const std::string sw = "simulation";
    auto& o = sc.sim;
    o.horizon = get_or(s, "horizon", o.horizon, sw);
    o.tail = get_or(s, "tail", o.tail, sw);
    o.dt_out = get_or(s, "dt_out", o.dt_out, sw);
    o.integrator.rel_tol = get_or(s, "rel_tol", o.integrator.rel_tol, sw);
    o.integrator.abs_tol = get_or(s, "abs_tol", o.integrator.abs_tol, sw);
    o.integrator.max_step = get_or(s, "max_step", o.integrator.max_step, sw);
    if (!(o.dt_out > 0.0) || !(o.horizon > o.tail) || !(o.tail > 0.0))
      throw InputError(sw + ": need dt_out > 0 and horizon > tail > 0");
  }
  if (j.contains("bounds")) {
    const Json& b = j["bounds"];
    auto& bd = sc.optimizer.bounds;
    bd.dp_max = get_or(b, "dp_max", bd.dp_max, "bounds");
    bd.t_max = get_or(b, "t_max", bd.t_max, "bounds");
  }
  if (j.contains("optimizer")) {
    const Json& o = j["optimizer"];
    const std::string ow = "optimizer";
    auto& op = sc.optimizer;
    op.grid = get_or(o, "grid", op.grid, ow);
    op.starts = get_or(o, "starts", op.starts, ow);
    op.tolerance = get_or(o, "tolerance", op.tolerance, ow);
    op.max_evaluations = get_or(o, "max_evaluations", op.max_evaluations, ow);
    op.window_tolerance = get_or(o, "window_tolerance", op.window_tolerance, ow);
    op.window_step = get_or(o, "window_step", op.window_step, ow);
    if (o.contains("fixed_dp")) op.fixed_dp = get<double>(o, "fixed_dp", ow);
  }
  auto read_action = [](const Json& a, const std::string& aw) {
    DfecAction act{get<double>(a, "dp", aw), get<double>(a, "t_on", aw),
                   get<double>(a, "t_off", aw)};
    if (act.t_on < 0.0 || act.dp < 0.0) throw InputError(aw + ": need dp >= 0 and t_on >= 0");
    return act;
  };
  if (j.contains("action")) sc.action = read_action(j["action"], "action");
  if (j.contains("initial_guess")) sc.initial_guess = read_action(j["initial_guess"], "initial_guess");
  if (j.contains("sweep")) {
    const Json& s = j["sweep"];
    const std::string sw = "sweep";
    SweepSpec sp;
    sp.dp = get<double>(s, "dp", sw);
    auto range = [&](const char* key, double& lo, double& hi, int& n) {
      const auto r = as<std::vector<double>>(field(s, key, sw), sw + "." + key);
      if (r.size() != 3 || r[2] < 1.0 || r[2] != std::floor(r[2]))
        throw InputError(sw + "." + key + " must be [lo, hi, count]");
      lo = r[0];
      hi = r[1];
      n = static_cast<int>(r[2]);
    };
    range("t_on", sp.t_on_lo, sp.t_on_hi, sp.t_on_n);
    range("t_off", sp.t_off_lo, sp.t_off_hi, sp.t_off_n);
    sc.sweep = sp;
  }
  if (j.contains("calibration")) {
    sc.target_nadir = get<double>(j["calibration"], "target_nadir", "calibration");
  }
  return sc;
}

DfecScenario load_dfec_scenario(const std::filesystem::path& path) {
  try {
    return dfec_scenario_from_json(read_json(path));
  } catch (const InputError& e) {
    if (std::string(e.what()).rfind(path.string(), 0) == 0) throw;
    throw InputError(path.string() + ": " + e.what());
  }
}

Json dfec_model_to_json(const TwoMachineModel& m) {
  const auto& g = m.governor;
  return {{"h1", m.h1},
          {"h2", m.h2},
          {"e1", m.e1},
          {"e2", m.e2},
          {"x", m.x},
          {"d1", m.d1},
          {"d2", m.d2},
          {"omega_s", m.omega_s},
          {"p_set", m.p_set},
          {"load_step", m.load_step},
          {"t_disturbance", m.t_disturbance},
          {"governor",
           {{"k1", g.k1},
            {"t1", g.t1},
            {"t2", g.t2},
            {"t3", g.t3},
            {"t4", g.t4},
            {"t5", g.t5},
            {"t6", g.t6},
            {"k2", g.k2},
            {"k3", g.k3},
            {"p_max", g.p_max},
            {"p_min", g.p_min}}}};
}

}  // namespace dgc
