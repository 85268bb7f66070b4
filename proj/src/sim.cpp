#include "dgc/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/numeric/odeint.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include "dgc/errors.hpp"

namespace dgc {

namespace odeint = boost::numeric::odeint;

std::string to_string(EventKind kind) {
  switch (kind) {
    case EventKind::fault_on: return "fault-on";
    case EventKind::fault_clear: return "fault-clear";
    case EventKind::switch_on: return "switch-on";
    case EventKind::switch_off: return "switch-off";
  }
  return "unknown";
}

EventKind event_kind_from_string(const std::string& s) {
  for (auto k : {EventKind::fault_on, EventKind::fault_clear, EventKind::switch_on,
                 EventKind::switch_off}) {
    if (to_string(k) == s) return k;
  }
  throw InputError("unknown event kind '" + s + "'");
}

double clearing_time(const Disturbance& disturbance) {
  return std::visit(
      [](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, InitialState>) {
          return d.t0;
        } else {
          return d.start + d.duration;
        }
      },
      disturbance);
}

namespace {

void check_pulse(const PowerPulse& p) {
  if (!(p.duration > 0.0)) throw ModelError("power pulse duration must be positive");
}

/// Equilibrium while a pulse is applied.
StateVector pulse_center(const ReducedModel& model, const PowerPulse& p) {
  StateVector c = model.x_e;
  angles(c) += model.solve_angles(model.injection_gain(p.bus) * p.magnitude);
  return c;
}

struct Segment {
  double t_from = 0.0;
  StateVector center;
  StateVector x_from;
  int stage = -1;    // active stage
  int pending = -1;  // stage whose x_c the h diagnostic refers to
};

struct Plan {
  double start = 0.0;
  std::vector<Segment> segments;
  std::vector<Event> events;
  std::vector<StateVector> stage_centers;
};

Plan make_plan(const ReducedModel& model, const ModalBasis& basis, const Disturbance& disturbance,
               const DeocSchedule& schedule, double t_end) {
  schedule.validate(model.cc_count());
  const double t0 = clearing_time(disturbance);
  for (const auto& s : schedule.stages) {
    if (s.t_on < t0 || s.t_off > t_end) {
      std::ostringstream os;
      os << "stage [" << s.t_on << ", " << s.t_off << "] lies outside [" << t0 << ", " << t_end
         << "]";
      throw ScheduleError(os.str());
    }
  }

  Plan plan;
  for (const auto& s : schedule.stages) plan.stage_centers.push_back(equilibrium_shifted(model, s.dp));
  const int first_pending = schedule.stages.empty() ? -1 : 0;

  if (const auto* pulse = std::get_if<PowerPulse>(&disturbance)) {
    check_pulse(*pulse);
    plan.start = pulse->start;
    plan.segments.push_back({pulse->start, pulse_center(model, *pulse), model.x_e, -1, -1});
    plan.events.push_back({pulse->start, EventKind::fault_on, -1});
    plan.events.push_back({t0, EventKind::fault_clear, -1});
  } else {
    plan.start = t0;
  }
  plan.segments.push_back({t0, model.x_e, apply_disturbance(model, disturbance), -1, first_pending});

  for (std::size_t k = 0; k < schedule.stages.size(); ++k) {
    const auto& s = schedule.stages[k];
    const int id = static_cast<int>(k);
    const Segment& prev = plan.segments.back();
    const StateVector x_on = propagate(basis, prev.center, prev.x_from, s.t_on - prev.t_from);
    plan.segments.push_back({s.t_on, plan.stage_centers[k], x_on, id, id});
    const StateVector x_off = propagate(basis, plan.stage_centers[k], x_on, s.t_off - s.t_on);
    const int next = k + 1 < schedule.stages.size() ? id + 1 : -1;
    plan.segments.push_back({s.t_off, model.x_e, x_off, -1, next});
    plan.events.push_back({s.t_on, EventKind::switch_on, id});
    plan.events.push_back({s.t_off, EventKind::switch_off, id});
  }
  return plan;
}

std::size_t sample_count(double start, double t_end, double dt_out) {
  if (!(dt_out > 0.0)) throw DimensionError("dt_out must be positive");
  if (t_end < start) return 0;
  return static_cast<std::size_t>(std::floor((t_end - start) / dt_out + 1e-9)) + 1;
}

const Segment& segment_at(const Plan& plan, double t) {
  auto it = std::upper_bound(plan.segments.begin(), plan.segments.end(), t,
                             [](double v, const Segment& s) { return v < s.t_from; });
  return it == plan.segments.begin() ? plan.segments.front() : *std::prev(it);
}

void append_sample(Trajectory& traj, const ReducedModel& model, const ModalBasis& basis,
                   const Plan& plan, double t, StateVector x) {
  const Segment& seg = segment_at(plan, t);
  traj.time.push_back(t);
  traj.energy.push_back(oscillation_energy(model, x));
  traj.orbit.push_back(orbit_value(basis, seg.center, x));
  traj.h.push_back(seg.pending >= 0
                       ? switching_function(basis, model.x_e,
                                            plan.stage_centers[static_cast<std::size_t>(seg.pending)], x)
                       : std::numeric_limits<double>::quiet_NaN());
  traj.stage.push_back(seg.stage);
  traj.states.push_back(std::move(x));
}

}  // namespace

StateVector apply_disturbance(const ReducedModel& model, const Disturbance& disturbance) {
  if (const auto* init = std::get_if<InitialState>(&disturbance)) {
    if (init->x0.size() != model.states()) throw DimensionError("initial state has wrong length");
    return init->x0;
  }
  const auto& pulse = std::get<PowerPulse>(disturbance);
  check_pulse(pulse);
  const StateVector c = pulse_center(model, pulse);
  const Matrix phi = (model.a * pulse.duration).exp();
  return c + phi * (model.x_e - c);
}

Trajectory simulate_deoc(const ReducedModel& model, const ModalBasis& basis,
                         const Disturbance& disturbance, const DeocSchedule& schedule,
                         double t_end, double dt_out) {
  const Plan plan = make_plan(model, basis, disturbance, schedule, t_end);
  Trajectory traj;
  traj.events = plan.events;
  const std::size_t n = sample_count(plan.start, t_end, dt_out);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = plan.start + static_cast<double>(i) * dt_out;
    const Segment& seg = segment_at(plan, t);
    append_sample(traj, model, basis, plan, t,
                  propagate(basis, seg.center, seg.x_from, t - seg.t_from));
  }
  return traj;
}

DenseSolution integrate_nonlinear(const Dynamics& dynamics, std::vector<double> x0,
                                  double t_start, double t_end, std::vector<double> breaks,
                                  double dt_out, const IntegratorOptions& options) {
  using State = std::vector<double>;
  const std::size_t n_out = sample_count(t_start, t_end, dt_out);

  std::vector<double> edges{t_start};
  std::sort(breaks.begin(), breaks.end());
  // Breaks closer than this are merged; odeint cannot step across less than
  // one ulp-scale interval.
  const double merge = 1e-9 * std::max(1.0, std::abs(t_end));
  for (double b : breaks) {
    if (b > edges.back() + merge && b < t_end - merge) edges.push_back(b);
  }
  edges.push_back(t_end);

  DenseSolution sol;
  sol.time.reserve(n_out);
  sol.states.reserve(n_out);
  State x = std::move(x0);
  std::size_t next_sample = 0;

  for (std::size_t seg = 0; seg + 1 < edges.size(); ++seg) {
    const double a = edges[seg];
    const double b = edges[seg + 1];
    const bool last = seg + 2 == edges.size();
    // Stages evaluated at the segment end still belong to this segment.
    const double t_in = std::nextafter(b, a);
    auto system = [&dynamics, t_in](const State& s, State& ds, double t) {
      dynamics(s, ds, std::min(t, t_in));
    };

    // Samples within `merge` of the segment start take the start state.
    std::vector<double> times{a};
    std::vector<std::size_t> sample_ids;
    std::vector<std::size_t> sample_obs;
    while (next_sample < n_out) {
      const double t = t_start + static_cast<double>(next_sample) * dt_out;
      if (t < a) {
        ++next_sample;
        continue;
      }
      if (t > b || (t == b && !last)) break;
      if (t > a + merge) times.push_back(t);
      sample_ids.push_back(next_sample);
      sample_obs.push_back(times.size() - 1);
      ++next_sample;
    }
    if (times.back() < b) times.push_back(b);

    std::vector<State> observed;
    observed.reserve(times.size());
    auto observer = [&observed](const State& s, double) { observed.push_back(s); };
    if (b - a > merge) {
      auto stepper = odeint::make_dense_output(options.abs_tol, options.rel_tol, options.max_step,
                                               odeint::runge_kutta_dopri5<State>());
      try {
        odeint::integrate_times(stepper, system, x, times.begin(), times.end(),
                                std::min(1e-3, b - a), observer,
                                odeint::max_step_checker(options.max_steps_between_outputs));
      } catch (const odeint::odeint_error& e) {
        std::ostringstream os;
        os << "integrator stalled in [" << a << ", " << b << "]: " << e.what();
        throw StiffnessError(os.str());
      }
    } else {
      observed.assign(times.size(), x);
    }
    for (double v : observed.back()) {
      if (!std::isfinite(v)) throw StiffnessError("integrator produced a non-finite state");
    }

    for (std::size_t i = 0; i < sample_ids.size(); ++i) {
      sol.time.push_back(t_start + static_cast<double>(sample_ids[i]) * dt_out);
      sol.states.push_back(observed[sample_obs[i]]);
    }
    x = observed.back();
  }
  sol.final_state = x;
  return sol;
}

Trajectory simulate_deoc_numeric(const ReducedModel& model, const ModalBasis& basis,
                                 const Disturbance& disturbance, const DeocSchedule& schedule,
                                 double t_end, double dt_out, const IntegratorOptions& options) {
  const Plan plan = make_plan(model, basis, disturbance, schedule, t_end);
  const Eigen::Index m = model.machines();
  const Vector half_h_inv = 0.5 * model.inertia.cwiseInverse();
  const Vector base_input = model.p_mech + model.b_b * model.p_load - model.b_c * model.p0;

  Vector pulse_gain = Vector::Zero(m);
  double pulse_on = 0.0;
  double pulse_off = 0.0;
  StateVector x_start;
  std::vector<double> breaks;
  if (const auto* pulse = std::get_if<PowerPulse>(&disturbance)) {
    pulse_gain = model.injection_gain(pulse->bus) * pulse->magnitude;
    pulse_on = pulse->start;
    pulse_off = pulse->start + pulse->duration;
    x_start = model.x_e;
    breaks = {pulse_on, pulse_off};
  } else {
    x_start = apply_disturbance(model, disturbance);
  }
  for (const auto& s : schedule.stages) {
    breaks.push_back(s.t_on);
    breaks.push_back(s.t_off);
  }

  auto dynamics = [&](const std::vector<double>& xs, std::vector<double>& dx, double t) {
    Vector input = base_input;
    if (t >= pulse_on && t < pulse_off) input += pulse_gain;
    for (const auto& s : schedule.stages) {
      if (t >= s.t_on && t < s.t_off) input -= model.b_c * s.dp;
    }
    const Eigen::Map<const Vector> x(xs.data(), 2 * m);
    Eigen::Map<Vector> out(dx.data(), 2 * m);
    out.head(m) = model.omega_s * (x.tail(m).array() - 1.0);
    out.tail(m) = half_h_inv.cwiseProduct(input - model.b_a * x.head(m));
  };

  std::vector<double> x0(x_start.data(), x_start.data() + x_start.size());
  const DenseSolution sol =
      integrate_nonlinear(dynamics, std::move(x0), plan.start, t_end, breaks, dt_out, options);

  Trajectory traj;
  traj.events = plan.events;
  for (std::size_t i = 0; i < sol.time.size(); ++i) {
    append_sample(traj, model, basis, plan, sol.time[i],
                  Eigen::Map<const Vector>(sol.states[i].data(), 2 * m));
  }
  return traj;
}

double peak_energy(const Trajectory& traj, double t_from) {
  double peak = 0.0;
  for (std::size_t i = 0; i < traj.time.size(); ++i) {
    if (traj.time[i] >= t_from) peak = std::max(peak, traj.energy[i]);
  }
  return peak;
}

}  // namespace dgc
