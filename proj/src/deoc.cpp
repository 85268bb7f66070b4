#include "dgc/deoc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "dgc/errors.hpp"
#include "dgc/numeric.hpp"

namespace dgc {

TrajectoryFn orbit_segment(const ModalBasis& basis, StateVector center, StateVector x_ref,
                           double t_ref) {
  return [&basis, center = std::move(center), x_ref = std::move(x_ref), t_ref](double t) {
    return propagate(basis, center, x_ref, t - t_ref);
  };
}

void DeocSchedule::validate(Eigen::Index cc_count) const {
  for (std::size_t k = 0; k < stages.size(); ++k) {
    const auto& s = stages[k];
    if (!(s.t_on < s.t_off)) {
      std::ostringstream os;
      os << "stage " << k << " has t_on " << s.t_on << " >= t_off " << s.t_off;
      throw ScheduleError(os.str());
    }
    if (s.dp.size() != cc_count) {
      throw ScheduleError("stage " + std::to_string(k) + " dp length does not match the model");
    }
    if (k + 1 < stages.size() && s.t_off > stages[k + 1].t_on) {
      std::ostringstream os;
      os << "stage " << k << " (off at " << s.t_off << ") overlaps stage " << k + 1
         << " (on at " << stages[k + 1].t_on << ")";
      throw ScheduleError(os.str());
    }
  }
}

double switching_function(const ModalBasis& basis, const StateVector& x_e,
                          const StateVector& x_c, const StateVector& x) {
  const Vector shift = x_e - x_c;
  const Vector y = x - x_c;
  const Matrix metric = basis.d + basis.a.transpose() * basis.e * basis.a;
  return 2.0 * shift.dot(basis.d * shift) - y.dot(metric * y);
}

double oscillation_energy(const ReducedModel& model, const StateVector& x) {
  const Vector dw = speeds(x).array() - 1.0;
  return model.omega_s * dw.dot(model.inertia.asDiagonal() * dw);
}

namespace {

void check_targets(const ModalBasis& basis, const std::vector<int>& targets) {
  if (targets.empty()) throw DimensionError("no target modes given");
  for (int p : targets) {
    if (p < 0 || p >= basis.pairs())
      throw DimensionError("target mode " + std::to_string(p) + " out of range");
  }
}

ComplexVector targeted_part(const ComplexVector& z, const std::vector<int>& targets) {
  ComplexVector zp = ComplexVector::Zero(z.size());
  for (int p : targets) {
    zp(2 * p) = z(2 * p);
    zp(2 * p + 1) = z(2 * p + 1);
  }
  return zp;
}

}  // namespace

Vector target_direction(const ModalBasis& basis, const ReducedModel& model,
                        const StateVector& x0, const std::vector<int>& target_modes) {
  check_targets(basis, target_modes);
  const ComplexVector z = basis.modal_coordinates(x0, model.x_e);
  const ComplexVector zp = targeted_part(z, target_modes);
  if (zp.norm() == 0.0) return Vector::Zero(model.machines());

  const Vector y = (basis.m * zp).real();
  Vector v = angles(y);
  // At the instant a pair sits at peak speed its angle projection vanishes;
  // fall back to the pair's mode shape weighted by its amplitude.
  if (v.norm() <= 1e-9 * y.norm()) {
    v = Vector::Zero(model.machines());
    for (int p : target_modes) {
      const Vector shape = basis.m.col(2 * p).head(model.machines()).real();
      v += std::sqrt(ModalBasis::pair_energy(z, p)) * shape;
    }
  }
  return v / v.norm();
}

DpDesign design_dp(const ModalBasis& basis, const ReducedModel& model, const StateVector& x0,
                   const std::vector<int>& target_modes, double scale) {
  if (model.cc_count() == 0) throw DimensionError("model has no controllable components");
  DpDesign out;
  out.direction = target_direction(basis, model, x0, target_modes);
  out.dp = InjectionVector::Zero(model.cc_count());
  if (out.direction.norm() == 0.0 || scale == 0.0) return out;

  const Matrix gain = model.solve_angles(model.b_c);
  const Vector goal = scale * out.direction;
  out.dp = gain.completeOrthogonalDecomposition().solve(goal);
  out.residual = (gain * out.dp - goal).norm();
  out.reachable = out.residual <= 1e-6 * std::abs(scale);
  return out;
}

double modal_scale(const ModalBasis& basis, const ReducedModel& model, const StateVector& x0,
                   const std::vector<int>& target_modes, double ratio) {
  const Vector v = target_direction(basis, model, x0, target_modes);
  if (v.norm() == 0.0) return 0.0;
  const ComplexVector z = basis.modal_coordinates(x0, model.x_e);
  double amp2 = 0.0;
  for (int p : target_modes) amp2 += ModalBasis::pair_energy(z, p);

  StateVector unit_shift = StateVector::Zero(model.states());
  angles(unit_shift) = v;
  const double unit_modal = (basis.m_inv * unit_shift.cast<std::complex<double>>()).norm();
  return ratio * std::sqrt(amp2) / unit_modal;
}

std::vector<int> excitation_order(const ModalBasis& basis, const ReducedModel& model,
                                  const StateVector& x0) {
  const ComplexVector z = basis.modal_coordinates(x0, model.x_e);
  std::vector<int> order(static_cast<std::size_t>(basis.pairs()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return ModalBasis::pair_energy(z, a) > ModalBasis::pair_energy(z, b);
  });
  return order;
}

SwitchOn find_switch_on(const ModalBasis& basis, const ReducedModel& model,
                        const StateVector& x_c, const TrajectoryFn& trajectory, double t_arm,
                        double t_max, double step) {
  if (!(t_arm < t_max)) throw DimensionError("switch-on window is empty");
  const StateVector& x_e = model.x_e;
  auto h_at = [&](double t) { return switching_function(basis, x_e, x_c, trajectory(t)); };

  const Vector shift = x_e - x_c;
  const double h_scale = 2.0 * shift.dot(basis.d * shift);
  const double ftol = 1e-10 * std::max(h_scale, std::numeric_limits<double>::min());

  double t_prev = t_arm;
  double h_prev = h_at(t_prev);
  double min_abs = std::abs(h_prev);
  if (h_prev == 0.0) return {t_prev, 0.0};

  for (long k = 1;; ++k) {
    const double t = std::min(t_arm + static_cast<double>(k) * step, t_max);
    const double h = h_at(t);
    min_abs = std::min(min_abs, std::abs(h));
    if (h == 0.0) return {t, 0.0};
    if ((h < 0.0) != (h_prev < 0.0)) {
      auto [root, h_root] = numeric::bisect(h_at, t_prev, t, h_prev, ftol);
      return {root, h_root};
    }
    if (t >= t_max) break;
    t_prev = t;
    h_prev = h;
  }
  std::ostringstream os;
  os << "switching function has no root in [" << t_arm << ", " << t_max
     << "] s (min |h| = " << min_abs << ")";
  throw NoSwitchOpportunityError(os.str(), min_abs);
}

SwitchOff find_switch_off(const ReducedModel& model, const TrajectoryFn& controlled,
                          double t_on, double t_max,
                          double step) {
  auto energy_at = [&](double t) { return oscillation_energy(model, controlled(t)); };

  const long n = static_cast<long>(std::floor((t_max - t_on) / step));
  if (n < 2) return {t_max, true};

  double e_prev = energy_at(t_on);
  double e_cur = energy_at(t_on + step);
  for (long k = 1; k < n; ++k) {
    const double t_next = t_on + static_cast<double>(k + 1) * step;
    const double e_next = energy_at(t_next);
    if (e_cur < e_prev && e_cur <= e_next) {
      const double lo = t_on + static_cast<double>(k - 1) * step;
      return {numeric::golden_min(energy_at, lo, t_next).first, false};
    }
    e_prev = e_cur;
    e_cur = e_next;
  }
  return {t_max, true};
}

namespace {

double closest_approach(const ReducedModel& model, const TrajectoryFn& controlled, double t_on,
                        double t_off, double step, double shift_norm) {
  if (shift_norm == 0.0) return 0.0;
  auto dist = [&](double t) { return (controlled(t) - model.x_e).norm(); };
  double best_t = t_on;
  double best = dist(t_on);
  for (double t = t_on + step; t < t_off; t += step) {
    const double d = dist(t);
    if (d < best) {
      best = d;
      best_t = t;
    }
  }
  if (dist(t_off) < best) {
    best = dist(t_off);
    best_t = t_off;
  }
  const double lo = std::max(t_on, best_t - step);
  const double hi = std::min(t_off, best_t + step);
  if (hi > lo) best = std::min(best, numeric::golden_min(dist, lo, hi).second);
  return best / shift_norm;
}

std::string describe(const std::vector<int>& targets) {
  std::ostringstream os;
  for (std::size_t i = 0; i < targets.size(); ++i) os << (i ? "," : "") << targets[i];
  return os.str();
}

}  // namespace

DeocSchedule build_schedule(const ModalBasis& basis, const ReducedModel& model,
                            const StateVector& x0, double t0, const ScheduleRequest& request) {
  std::vector<std::vector<int>> targets = request.targets;
  if (targets.empty()) {
    const auto order = excitation_order(basis, model, x0);
    const std::size_t count =
        std::min<std::size_t>(request.stage_count, order.size());
    for (std::size_t i = 0; i < count; ++i) targets.push_back({order[i]});
  }
  if (!request.dp_overrides.empty() && request.dp_overrides.size() != targets.size()) {
    throw DimensionError("dp override count does not match the number of stages");
  }

  DeocSchedule schedule;
  StateVector x = x0;
  double t = t0;
  double arm_floor = request.t_arm.value_or(t0);

  for (std::size_t k = 0; k < targets.size(); ++k) {
    const auto& target = targets[k];
    StageDiagnostics diag;
    InjectionVector dp;
    if (!request.dp_overrides.empty()) {
      dp = request.dp_overrides[k];
      if (dp.size() != model.cc_count()) throw DimensionError("dp override has wrong length");
    } else {
      const double scale = request.scale.value_or(
          modal_scale(basis, model, x, target, request.amplitude_ratio));
      DpDesign design = design_dp(basis, model, x, target, scale);
      dp = std::move(design.dp);
      diag.reachable = design.reachable;
      diag.reach_residual = design.residual;
    }
    if (dp.cwiseAbs().maxCoeff() == 0.0) {
      schedule.skipped.push_back({target, "zero injection change"});
      continue;
    }

    const StateVector x_c = equilibrium_shifted(model, dp);
    const double shift_norm = (model.x_e - x_c).norm();
    const TrajectoryFn free_run = orbit_segment(basis, model.x_e, x, t);
    const double window_start = std::max(arm_floor, t);
    const double window_end = window_start + request.search_window;

    double arm = window_start;
    bool placed = false;
    std::string reason;
    while (arm < window_end) {
      SwitchOn on;
      try {
        on = find_switch_on(basis, model, x_c, free_run, arm, window_end, request.step);
      } catch (const NoSwitchOpportunityError& e) {
        reason = e.what();
        break;
      }
      const StateVector x_on = free_run(on.t);
      const TrajectoryFn controlled = orbit_segment(basis, x_c, x_on, on.t);
      const SwitchOff off =
          find_switch_off(model, controlled, on.t, on.t + request.off_window, request.step);
      const StateVector x_off = controlled(off.t);

      diag.h_residual = std::abs(on.h);
      diag.energy_on = oscillation_energy(model, x_on);
      diag.energy_off = oscillation_energy(model, x_off);
      diag.amplitude_on = basis.modal_coordinates(x_on, model.x_e).norm();
      diag.amplitude_off = basis.modal_coordinates(x_off, model.x_e).norm();
      diag.window_limited = off.window_limited;

      // A root is kept only if the stage shrinks the oscillation about x_e;
      // the other root of the pair sends the orbit away from x_e first.
      if (diag.amplitude_off < diag.amplitude_on && diag.energy_off <= diag.energy_on) {
        diag.closest_approach =
            closest_approach(model, controlled, on.t, off.t, request.step, shift_norm);
        schedule.stages.push_back({dp, target, on.t, off.t, diag});
        x = x_off;
        t = off.t;
        arm_floor = off.t;
        placed = true;
        break;
      }
      reason = "no switching root reduces the oscillation";
      arm = on.t + request.step;
    }
    if (!placed) {
      if (reason.empty()) reason = "search window exhausted";
      schedule.skipped.push_back({target, "modes " + describe(target) + ": " + reason});
    }
  }
  schedule.final_state = x;
  schedule.final_time = t;
  return schedule;
}

}  // namespace dgc
