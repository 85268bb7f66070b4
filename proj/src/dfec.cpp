#include "dgc/dfec.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "dgc/errors.hpp"
#include "dgc/numeric.hpp"

namespace dgc {

void TwoMachineModel::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw ModelError(std::string(name) + " must be positive");
  };
  positive(h1, "h1");
  positive(h2, "h2");
  positive(e1, "e1");
  positive(e2, "e2");
  positive(x, "x");
  positive(omega_s, "omega_s");
  positive(governor.t1, "governor t1");
  positive(governor.t3, "governor t3");
  positive(governor.t4, "governor t4");
  positive(governor.t5, "governor t5");
  positive(governor.t6, "governor t6");
  if (governor.t2 < 0.0) throw ModelError("governor t2 must be non-negative");
  if (d1 < 0.0 || d2 < 0.0) throw ModelError("damping must be non-negative");
  if (!(governor.p_min < governor.p_max)) throw ModelError("governor p_min must be below p_max");
  if (p_set < governor.p_min || p_set > governor.p_max)
    throw ModelError("power setpoint lies outside the governor limits");
  if (!(std::abs(p_set * x / (e1 * e2)) < 1.0))
    throw ModelError("no equilibrium: setpoint exceeds the line transfer limit");
}

std::vector<double> dfec_initial_state(const TwoMachineModel& model) {
  model.validate();
  const double delta = std::asin(model.p_set * model.x / (model.e1 * model.e2));
  const double p = model.p_set;
  return {delta, 1.0, 0.0, 1.0, 0.0, 0.0, p, p, p};
}

void dfec_dynamics(const TwoMachineModel& model, const std::vector<double>& s,
                   std::vector<double>& ds, double t, const DfecAction& action, bool disturbed) {
  const auto& g = model.governor;
  const double delta12 = s[0] - s[2];
  const double p_line = model.e1 * model.e2 / model.x * std::sin(delta12);
  const double injection = (t >= action.t_on && t < action.t_off) ? action.dp : 0.0;
  const double motor_load =
      model.p_set + ((disturbed && t >= model.t_disturbance) ? model.load_step : 0.0);

  const double dw1 = s[1] - 1.0;
  const double dw2 = s[3] - 1.0;
  const double p_mech =
      (1.0 - g.k2) * s[6] + g.k2 * ((1.0 - g.k3) * s[7] + g.k3 * s[8]);

  const double lead_lag = s[5] + g.t2 / g.t3 * (s[4] - s[5]);
  const double valve = std::clamp(model.p_set - lead_lag, g.p_min, g.p_max);

  ds[0] = model.omega_s * dw1;
  ds[1] = (p_mech - (p_line - injection) - model.d1 * dw1) / (2.0 * model.h1);
  ds[2] = model.omega_s * dw2;
  ds[3] = (p_line - motor_load - model.d2 * dw2) / (2.0 * model.h2);
  ds[4] = (g.k1 * dw1 - s[4]) / g.t1;
  ds[5] = (s[4] - s[5]) / g.t3;
  ds[6] = (valve - s[6]) / g.t4;
  ds[7] = (s[6] - s[7]) / g.t5;
  ds[8] = (s[7] - s[8]) / g.t6;
}

DfecRun simulate_dfec(const TwoMachineModel& model, const DfecAction& action,
                      const DfecSimOptions& options) {
  auto dynamics = [&](const std::vector<double>& x, std::vector<double>& dx, double t) {
    dfec_dynamics(model, x, dx, t, action, options.disturbed);
  };
  std::vector<double> breaks{model.t_disturbance};
  if (action.dp != 0.0 && action.t_on < action.t_off) {
    breaks.push_back(action.t_on);
    breaks.push_back(action.t_off);
  }

  DfecRun run;
  run.solution = integrate_nonlinear(dynamics, dfec_initial_state(model), 0.0, options.horizon,
                                     breaks, options.dt_out, options.integrator);
  const auto& states = run.solution.states;
  const auto& time = run.solution.time;
  const std::size_t n = states.size();

  run.mean_speed.resize(n);
  double max_sep = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    run.mean_speed[i] = 0.5 * (states[i][1] + states[i][3]);
    max_sep = std::max(max_sep, std::abs(states[i][0] - states[i][2]));
  }
  const double final_sep = std::abs(run.solution.final_state[0] - run.solution.final_state[2]);
  run.unstable = max_sep > std::numbers::pi || final_sep > std::numbers::pi / 2.0;

  double tail_sum = 0.0;
  int tail_count = 0;
  std::size_t i_min = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (time[i] >= options.horizon - options.tail - 1e-9) {
      tail_sum += run.mean_speed[i];
      ++tail_count;
    }
    if (run.mean_speed[i] < run.mean_speed[i_min]) i_min = i;
  }
  run.omega_ss = tail_count > 0 ? tail_sum / tail_count : run.mean_speed.back();

  // Parabola through the lowest sample and its neighbours.
  run.min_speed = run.mean_speed[i_min];
  run.nadir_time = time[i_min];
  if (i_min > 0 && i_min + 1 < n) {
    const double a = run.mean_speed[i_min - 1];
    const double b = run.mean_speed[i_min];
    const double c = run.mean_speed[i_min + 1];
    const double curv = a - 2.0 * b + c;
    if (curv > 0.0) {
      run.min_speed = b - (c - a) * (c - a) / (8.0 * curv);
      run.nadir_time += 0.5 * (a - c) / curv * options.dt_out;
    }
  }
  return run;
}

double nadir_depth(const DfecRun& run) { return 1.0 - run.min_speed; }

double nadir_cost(const TwoMachineModel& model, const DfecAction& action,
                  const DfecSimOptions& options) {
  const DfecRun run = simulate_dfec(model, action, options);
  if (run.unstable) return std::numeric_limits<double>::infinity();
  return std::max(0.0, run.omega_ss - run.min_speed);
}

namespace {

struct ScaledProblem {
  const TwoMachineModel& model;
  const OptimizerOptions& options;
  const DfecSimOptions& sim;
  double uncontrolled = 0.0;

  int dims() const { return options.fixed_dp ? 2 : 3; }

  DfecAction to_action(const Vector& u) const {
    DfecAction a;
    const Eigen::Index o = options.fixed_dp ? 0 : 1;
    a.dp = options.fixed_dp ? *options.fixed_dp : u(0) * options.bounds.dp_max;
    a.t_on = u(o) * options.bounds.t_max;
    a.t_off = u(o + 1) * options.bounds.t_max;
    return a;
  }

  Vector to_scaled(const DfecAction& a) const {
    Vector u(dims());
    Eigen::Index o = 0;
    if (!options.fixed_dp) u(o++) = a.dp / options.bounds.dp_max;
    u(o) = a.t_on / options.bounds.t_max;
    u(o + 1) = a.t_off / options.bounds.t_max;
    return u;
  }

  /// Box violations and an empty window are penalised relative to the
  /// uncontrolled cost, which is what an empty window achieves.
  double operator()(const Vector& raw) const {
    Vector u = raw;
    double violation = 0.0;
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      if (u(i) < 0.0) {
        violation -= u(i);
        u(i) = 0.0;
      } else if (u(i) > 1.0) {
        violation += u(i) - 1.0;
        u(i) = 1.0;
      }
    }
    const Eigen::Index o = options.fixed_dp ? 0 : 1;
    const double gap = u(o + 1) - u(o);
    const double penalty_scale = std::max(uncontrolled, 1e-6) * 10.0;
    if (gap <= 0.0) return uncontrolled + penalty_scale * (violation - gap + 1e-6);
    double c;
    try {
      c = nadir_cost(model, to_action(u), sim);
    } catch (const StiffnessError&) {
      c = std::numeric_limits<double>::infinity();
    }
    return c + penalty_scale * violation;
  }
};

struct SimplexRun {
  Vector best;
  double cost = std::numeric_limits<double>::infinity();
  int evaluations = 0;
  std::vector<DfecIterate> history;
};

SimplexRun nelder_mead(const ScaledProblem& problem, const Vector& start, double step) {
  const int d = problem.dims();
  std::vector<Vector> pts(d + 1, start);
  std::vector<double> f(d + 1);
  SimplexRun run;
  auto eval = [&](const Vector& u) {
    const double c = problem(u);
    ++run.evaluations;
    if (c < run.cost) {
      run.cost = c;
      run.best = u;
      run.history.push_back({run.evaluations, problem.to_action(u), c});
    }
    return c;
  };
  for (int i = 0; i < d; ++i) {
    pts[i + 1](i) += (start(i) + step <= 1.0) ? step : -step;
  }
  for (int i = 0; i <= d; ++i) f[i] = eval(pts[i]);

  std::vector<int> order(d + 1);
  while (run.evaluations < problem.options.max_evaluations) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return f[a] < f[b]; });
    const Vector& best = pts[order[0]];
    double diameter = 0.0;
    for (int i = 1; i <= d; ++i) diameter = std::max(diameter, (pts[order[i]] - best).norm());
    if (diameter < problem.options.tolerance) break;

    Vector centroid = Vector::Zero(d);
    for (int i = 0; i < d; ++i) centroid += pts[order[i]];
    centroid /= d;
    const int worst = order[d];
    const Vector reflected = centroid + (centroid - pts[worst]);
    const double fr = eval(reflected);
    if (fr < f[order[0]]) {
      const Vector expanded = centroid + 2.0 * (centroid - pts[worst]);
      const double fe = eval(expanded);
      if (fe < fr) {
        pts[worst] = expanded;
        f[worst] = fe;
      } else {
        pts[worst] = reflected;
        f[worst] = fr;
      }
    } else if (fr < f[order[d - 1]]) {
      pts[worst] = reflected;
      f[worst] = fr;
    } else {
      const bool outside = fr < f[worst];
      const Vector contracted = outside ? Vector(centroid + 0.5 * (reflected - centroid))
                                        : Vector(centroid + 0.5 * (pts[worst] - centroid));
      const double fc = eval(contracted);
      if (fc < (outside ? fr : f[worst])) {
        pts[worst] = contracted;
        f[worst] = fc;
      } else {
        for (int i = 1; i <= d; ++i) {
          Vector& p = pts[order[i]];
          p = best + 0.5 * (p - best);
          f[order[i]] = eval(p);
        }
      }
    }
  }
  return run;
}

// Moves `from` toward `limit_edge` while cost_at stays <= limit; returns the
// furthest passing position, refined by bisection.
template <class Cost>
double shrink_edge(Cost&& cost_at, double from, double limit_edge, double step, double limit,
                   int& evaluations) {
  const double dir = limit_edge > from ? 1.0 : -1.0;
  double pass = from;
  for (;;) {
    const double next = pass + dir * step;
    if ((limit_edge - next) * dir < 1e-3) return pass;
    ++evaluations;
    if (cost_at(next) > limit) {
      double fail = next;
      for (int i = 0; i < 12; ++i) {
        const double mid = 0.5 * (pass + fail);
        ++evaluations;
        (cost_at(mid) > limit ? fail : pass) = mid;
      }
      return pass;
    }
    pass = next;
  }
}

}  // namespace

DfecResult optimize_action(const TwoMachineModel& model, const OptimizerOptions& options,
                           const DfecSimOptions& sim, std::optional<DfecAction> initial_guess) {
  model.validate();
  if (!(options.bounds.dp_max > 0.0) || !(options.bounds.t_max > 0.0) ||
      options.bounds.t_max > sim.horizon)
    throw OptimizationError("invalid optimisation bounds");
  if (options.grid < 2 || options.starts < 1) throw OptimizationError("invalid multi-start setup");

  DfecResult result;
  result.uncontrolled_cost = nadir_cost(model, {}, sim);
  result.uncontrolled_nadir = nadir_depth(simulate_dfec(model, {}, sim));

  ScaledProblem problem{model, options, sim, result.uncontrolled_cost};
  const int d = problem.dims();

  // Coarse grid over the box, valid windows only.
  std::vector<Vector> grid;
  const int g = options.grid;
  const int grid_dims = d;
  std::vector<int> idx(grid_dims, 0);
  for (;;) {
    Vector u(d);
    for (int i = 0; i < d; ++i) u(i) = static_cast<double>(idx[i]) / (g - 1);
    const Eigen::Index o = options.fixed_dp ? 0 : 1;
    if (u(o) < u(o + 1)) grid.push_back(u);
    int k = 0;
    while (k < grid_dims && ++idx[k] == g) idx[k++] = 0;
    if (k == grid_dims) break;
  }
  std::vector<double> grid_cost(grid.size());
  numeric::parallel_for(grid.size(), options.workers,
                        [&](std::size_t i) { grid_cost[i] = problem(grid[i]); });
  result.evaluations = static_cast<int>(grid.size());

  std::vector<std::size_t> rank(grid.size());
  std::iota(rank.begin(), rank.end(), 0);
  std::stable_sort(rank.begin(), rank.end(),
                   [&](std::size_t a, std::size_t b) { return grid_cost[a] < grid_cost[b]; });

  std::vector<Vector> starts;
  if (initial_guess) starts.push_back(problem.to_scaled(*initial_guess));
  for (std::size_t i = 0; i < rank.size() && static_cast<int>(starts.size()) <
                                                 options.starts + (initial_guess ? 1 : 0);
       ++i) {
    starts.push_back(grid[rank[i]]);
  }
  if (!rank.empty()) {
    result.history.push_back({1, problem.to_action(grid[rank[0]]), grid_cost[rank[0]]});
  }

  const double step = 0.5 / (g - 1);
  std::vector<SimplexRun> runs(starts.size());
  numeric::parallel_for(starts.size(), options.workers,
                        [&](std::size_t i) { runs[i] = nelder_mead(problem, starts[i], step); });

  double best_cost = rank.empty() ? std::numeric_limits<double>::infinity() : grid_cost[rank[0]];
  Vector best_u = rank.empty() ? Vector::Zero(d) : grid[rank[0]];
  for (const auto& run : runs) {
    for (const auto& it : run.history) {
      if (it.cost < best_cost) {
        result.history.push_back({result.evaluations + it.evaluation, it.action, it.cost});
        best_cost = it.cost;
        best_u = problem.to_scaled(it.action);
      }
    }
    result.evaluations += run.evaluations;
  }
  if (!std::isfinite(best_cost)) {
    std::ostringstream os;
    os << "every start diverged after " << result.evaluations << " evaluations";
    throw OptimizationError(os.str());
  }

  result.action = problem.to_action(best_u.cwiseMax(0.0).cwiseMin(1.0));
  result.cost = nadir_cost(model, result.action, sim);

  if (options.window_tolerance > 0.0 && result.action.dp > 0.0) {
    const double limit = result.cost * (1.0 + options.window_tolerance);
    DfecAction a = result.action;
    for (int round = 0; round < 10; ++round) {
      const DfecAction before = a;
      a.t_off = shrink_edge(
          [&](double t) { return nadir_cost(model, {a.dp, a.t_on, t}, sim); }, a.t_off, a.t_on,
          options.window_step, limit, result.evaluations);
      a.t_on = shrink_edge(
          [&](double t) { return nadir_cost(model, {a.dp, t, a.t_off}, sim); }, a.t_on, a.t_off,
          options.window_step, limit, result.evaluations);
      if (before.t_off - a.t_off < 1e-3 && a.t_on - before.t_on < 1e-3) break;
    }
    result.action = a;
    result.cost = nadir_cost(model, a, sim);
    result.history.push_back({result.evaluations, a, result.cost});
  }
  result.controlled_nadir = nadir_depth(simulate_dfec(model, result.action, sim));
  return result;
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(static_cast<std::size_t>(std::max(n, 0)));
  if (n == 1) {
    v[0] = lo;
    return v;
  }
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
  return v;
}

std::pair<Eigen::Index, Eigen::Index> ContourGrid::argmin() const {
  std::pair<Eigen::Index, Eigen::Index> best{-1, -1};
  double best_cost = std::numeric_limits<double>::infinity();
  double best_len = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < cost_x1000.rows(); ++i) {
    for (Eigen::Index j = 0; j < cost_x1000.cols(); ++j) {
      const double c = cost_x1000(i, j);
      if (std::isnan(c)) continue;
      const double len = t_off[static_cast<std::size_t>(j)] - t_on[static_cast<std::size_t>(i)];
      if (c < best_cost || (c == best_cost && len < best_len)) {
        best_cost = c;
        best_len = len;
        best = {i, j};
      }
    }
  }
  return best;
}

ContourGrid contour_sweep(const TwoMachineModel& model, double dp,
                          const std::vector<double>& t_on, const std::vector<double>& t_off,
                          const DfecSimOptions& sim, std::size_t workers) {
  model.validate();
  ContourGrid grid;
  grid.dp = dp;
  grid.t_on = t_on;
  grid.t_off = t_off;
  const auto rows = static_cast<Eigen::Index>(t_on.size());
  const auto cols = static_cast<Eigen::Index>(t_off.size());
  grid.cost_x1000 = Matrix::Constant(rows, cols, std::numeric_limits<double>::quiet_NaN());
  numeric::parallel_for(t_on.size() * t_off.size(), workers, [&](std::size_t k) {
    const std::size_t i = k / t_off.size();
    const std::size_t j = k % t_off.size();
    if (!(t_on[i] < t_off[j])) return;
    grid.cost_x1000(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
        1000.0 * nadir_cost(model, {dp, t_on[i], t_off[j]}, sim);
  });
  return grid;
}

double calibrate_droop(const TwoMachineModel& model, double target, const DfecSimOptions& sim) {
  // Depth falls with gain until the loop goes unstable; NaN marks that region.
  auto excess = [&](double k1) {
    TwoMachineModel m = model;
    m.governor.k1 = k1;
    try {
      const DfecRun run = simulate_dfec(m, {}, sim);
      if (run.unstable) return std::numeric_limits<double>::quiet_NaN();
      return nadir_depth(run) - target;
    } catch (const StiffnessError&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  };
  auto unreachable = [&] {
    std::ostringstream os;
    os << "target nadir " << target << " is not reachable by tuning the governor gain";
    return OptimizationError(os.str());
  };
  double lo = 0.5;
  if (!(excess(lo) > 0.0)) throw unreachable();
  double hi = lo;
  double f_hi = 0.0;
  do {
    lo = hi;
    hi *= 1.5;
    f_hi = excess(hi);
    if (std::isnan(f_hi) || hi > 1e4) throw unreachable();
  } while (f_hi > 0.0);
  for (int it = 0; it < 100 && hi - lo > 1e-9 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double f = excess(mid);
    if (std::isnan(f)) throw unreachable();
    if (std::abs(f) < 1e-10) return mid;
    (f > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace dgc
