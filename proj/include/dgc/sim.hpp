#pragma once

#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "dgc/deoc.hpp"
#include "dgc/grid_model.hpp"
#include "dgc/modal.hpp"

namespace dgc {

enum class EventKind { fault_on, fault_clear, switch_on, switch_off };

std::string to_string(EventKind kind);
EventKind event_kind_from_string(const std::string& s);

struct Event {
  double t = 0.0;
  EventKind kind = EventKind::fault_on;
  int stage = -1;
};

/// Sampled simulation output. Diagnostic arrays are aligned with `time`;
/// `h` is NaN where no stage is pending or active.
struct Trajectory {
  std::vector<double> time;
  std::vector<Vector> states;
  std::vector<double> energy;
  std::vector<double> orbit;
  std::vector<double> h;
  std::vector<int> stage;
  std::vector<Event> events;
};

/// Post-clearing state given verbatim.
struct InitialState {
  StateVector x0;
  double t0 = 0.0;
};

/// Accelerating-power pulse injected at one bus, starting from x_e. A stand-in
/// for a fault inside the DC model, not a fault model.
struct PowerPulse {
  int bus = 0;
  double magnitude = 0.0;  // pu
  double start = 0.0;
  double duration = 0.0;
};

using Disturbance = std::variant<InitialState, PowerPulse>;

/// Time at which the post-disturbance state is known (t0).
double clearing_time(const Disturbance& disturbance);

/// Post-disturbance state x0 at clearing_time(). Pulses are integrated in
/// closed form with the matrix exponential of A.
StateVector apply_disturbance(const ReducedModel& model, const Disturbance& disturbance);

/// Exact piecewise propagation with the centre switched between x_e and each
/// stage's x_c. Samples at start + k * dt_out, where start is the pulse start
/// or t0.
Trajectory simulate_deoc(const ReducedModel& model, const ModalBasis& basis,
                         const Disturbance& disturbance, const DeocSchedule& schedule,
                         double t_end, double dt_out);

struct IntegratorOptions {
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  double max_step = 0.05;
  int max_steps_between_outputs = 200000;
};

using Dynamics = std::function<void(const std::vector<double>& x, std::vector<double>& dxdt,
                                    double t)>;

struct DenseSolution {
  std::vector<double> time;
  std::vector<std::vector<double>> states;
  std::vector<double> final_state;
};

/// Adaptive Dormand-Prince integration from t_start to t_end, restarted at each
/// time in `breaks`; within a segment `dynamics` sees times strictly before its
/// closing break, so step inputs switch exactly there. Output at t_start + k * dt_out for every such time <=
/// t_end. Throws StiffnessError when the step controller stalls.
DenseSolution integrate_nonlinear(const Dynamics& dynamics, std::vector<double> x0,
                                  double t_start, double t_end, std::vector<double> breaks,
                                  double dt_out, const IntegratorOptions& options = {});

/// Same scenario as simulate_deoc, integrating the swing equations with their
/// step inputs numerically. Used as an independent cross-check.
Trajectory simulate_deoc_numeric(const ReducedModel& model, const ModalBasis& basis,
                                 const Disturbance& disturbance, const DeocSchedule& schedule,
                                 double t_end, double dt_out,
                                 const IntegratorOptions& options = {});

/// Largest sampled E_k at or after `t_from`.
double peak_energy(const Trajectory& traj, double t_from);

}  // namespace dgc
