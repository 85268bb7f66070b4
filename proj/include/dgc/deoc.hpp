#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dgc/grid_model.hpp"
#include "dgc/modal.hpp"

namespace dgc {

/// State as a function of absolute time.
using TrajectoryFn = std::function<StateVector(double)>;

/// Closed-form orbit around `center` that passes through `x_ref` at `t_ref`.
/// Captures `basis` by reference.
TrajectoryFn orbit_segment(const ModalBasis& basis, StateVector center, StateVector x_ref,
                           double t_ref);

struct StageDiagnostics {
  double h_residual = 0.0;        // |h(x(t_on))|
  double energy_on = 0.0;         // E_k(t_on)
  double energy_off = 0.0;        // E_k(t_off)
  double amplitude_on = 0.0;      // ||M^-1 (x - x_e)|| at t_on
  double amplitude_off = 0.0;     // same at t_off
  double closest_approach = 0.0;  // min ||x - x_e|| on [t_on, t_off] / ||x_e - x_c||
  bool window_limited = false;    // switch-off hit the end of its search window
  bool reachable = true;          // designed dp hit its target direction
  double reach_residual = 0.0;
};

struct ControlStage {
  InjectionVector dp;
  std::vector<int> target_modes;
  double t_on = 0.0;
  double t_off = 0.0;
  StageDiagnostics diagnostics;
};

struct SkippedStage {
  std::vector<int> target_modes;
  std::string reason;
};

struct DeocSchedule {
  std::vector<ControlStage> stages;
  std::vector<SkippedStage> skipped;
  StateVector final_state;
  double final_time = 0.0;

  /// Throws ScheduleError when a stage has t_on >= t_off or overlaps the next.
  void validate(Eigen::Index cc_count) const;
};

/// h(x) = 2 (x_e-x_c)' D (x_e-x_c) - (x-x_c)' (D + A'EA) (x-x_c).
double switching_function(const ModalBasis& basis, const StateVector& x_e,
                          const StateVector& x_c, const StateVector& x);

/// E_k = omega_s (omega-1)' H (omega-1).
double oscillation_energy(const ReducedModel& model, const StateVector& x);

/// Unit angle direction of the targeted modal content of x0 - x_e. Zero when
/// the targeted pairs are not excited.
Vector target_direction(const ModalBasis& basis, const ReducedModel& model,
                        const StateVector& x0, const std::vector<int>& target_modes);

struct DpDesign {
  InjectionVector dp;
  Vector direction;        // unit angle direction the shift aims at
  double residual = 0.0;   // ||B_a^-1 B_c dp - scale * direction||
  bool reachable = true;   // false carries the reachability warning
};

/// Least-squares (minimum-norm) dP with B_a^-1 B_c dP ~= scale * direction;
/// `scale` is the norm of the angle shift in rad.
DpDesign design_dp(const ModalBasis& basis, const ReducedModel& model, const StateVector& x0,
                   const std::vector<int>& target_modes, double scale);

/// Angle-shift norm that places x_c at `ratio` times the current modal
/// amplitude of the targeted pairs (modal-coordinate distance).
double modal_scale(const ModalBasis& basis, const ReducedModel& model, const StateVector& x0,
                   const std::vector<int>& target_modes, double ratio);

/// Pair indices sorted by descending excitation |z_k|^2 of x0 - x_e.
std::vector<int> excitation_order(const ModalBasis& basis, const ReducedModel& model,
                                  const StateVector& x0);

inline constexpr double kDefaultSearchStep = 1e-3;

struct SwitchOn {
  double t = 0.0;
  double h = 0.0;
};

/// Earliest root of h along `trajectory` in [t_arm, t_max], either direction.
/// Throws NoSwitchOpportunityError carrying min |h|.
SwitchOn find_switch_on(const ModalBasis& basis, const ReducedModel& model,
                        const StateVector& x_c, const TrajectoryFn& trajectory, double t_arm,
                        double t_max, double step = kDefaultSearchStep);

struct SwitchOff {
  double t = 0.0;
  bool window_limited = false;
};

/// First local minimum of E_k after t_on along the controlled trajectory;
/// returns t_max flagged window_limited when none is found.
SwitchOff find_switch_off(const ReducedModel& model, const TrajectoryFn& controlled,
                          double t_on, double t_max, double step = kDefaultSearchStep);

struct ScheduleRequest {
  /// Target pairs per stage, in application order. Empty: one stage per
  /// entry of `stage_count` most excited pairs.
  std::vector<std::vector<int>> targets;
  std::size_t stage_count = 1;
  /// Verbatim dP per stage (pu); replaces the design rule when present.
  std::vector<InjectionVector> dp_overrides;
  double amplitude_ratio = 2.0;
  std::optional<double> scale;
  std::optional<double> t_arm;
  double search_window = 5.0;
  double off_window = 3.0;
  double step = kDefaultSearchStep;
};

/// Sequential per-target stages starting from x0 at time t0.
DeocSchedule build_schedule(const ModalBasis& basis, const ReducedModel& model,
                            const StateVector& x0, double t0, const ScheduleRequest& request);

}  // namespace dgc
