#pragma once

#include <optional>
#include <vector>

#include "dgc/grid_model.hpp"
#include "dgc/sim.hpp"

namespace dgc {

/// IEESGO-structure speed governor and turbine, pu on system base.
///
///   dw -> K1 (1 + s T2) / ((1 + s T1)(1 + s T3)) -> P0 - (.) -> [Pmin, Pmax]
///      -> 1 / (1 + s T4) -> y4 -> 1 / (1 + s T5) -> y5 -> 1 / (1 + s T6) -> y6
///   Pmech = (1 - K2) y4 + K2 ((1 - K3) y5 + K3 y6)
struct GovernorParams {
  double k1 = 20.0;
  double t1 = 0.2;
  double t2 = 0.0;
  double t3 = 0.1;
  double t4 = 0.3;
  double t5 = 7.0;
  double t6 = 0.5;
  double k2 = 0.7;
  double k3 = 0.43;
  double p_max = 1.5;
  double p_min = 0.0;
};

/// Generator (with governor) feeding a synchronous motor over a lossless line;
/// the controllable component sits on the generator bus. Internal EMFs are
/// constant.
struct TwoMachineModel {
  double h1 = 4.0;
  double h2 = 2.0;
  double e1 = 1.0;
  double e2 = 1.0;
  double x = 0.3;
  double d1 = 0.0;
  double d2 = 0.0;
  double omega_s = kNominalOmegaS;
  double p_set = 0.75;
  GovernorParams governor;
  double load_step = 0.25;  // motor mechanical power increase, pu
  double t_disturbance = 0.0;

  /// Throws ModelError when a parameter is out of range or no equilibrium exists.
  void validate() const;
};

/// State layout: [delta1, omega1, delta2, omega2, lag, lead_lag, y4, y5, y6].
inline constexpr std::size_t kDfecStates = 9;

struct DfecAction {
  double dp = 0.0;
  double t_on = 0.0;
  double t_off = 0.0;
};

std::vector<double> dfec_initial_state(const TwoMachineModel& model);

/// Right-hand side at time t. `disturbed` switches the motor load step on.
void dfec_dynamics(const TwoMachineModel& model, const std::vector<double>& x,
                   std::vector<double>& dxdt, double t, const DfecAction& action,
                   bool disturbed = true);

struct DfecSimOptions {
  double horizon = 60.0;
  double tail = 2.0;  // omega_ss is the mean average speed over the last `tail` s
  double dt_out = 0.01;
  bool disturbed = true;
  IntegratorOptions integrator{};
};

struct DfecRun {
  DenseSolution solution;
  std::vector<double> mean_speed;  // (omega1 + omega2) / 2 per sample
  double omega_ss = 1.0;
  double min_speed = 1.0;
  double nadir_time = 0.0;
  bool unstable = false;
};

DfecRun simulate_dfec(const TwoMachineModel& model, const DfecAction& action,
                      const DfecSimOptions& options = {});

/// omega_ss - min((omega1 + omega2) / 2); +infinity for an unstable run.
double nadir_cost(const TwoMachineModel& model, const DfecAction& action,
                  const DfecSimOptions& options = {});

/// 1 - min mean speed, i.e. the nadir as a deviation from nominal.
double nadir_depth(const DfecRun& run);

struct DfecBounds {
  double dp_max = 0.25;
  double t_max = 40.0;  // upper bound for both switching times
};

struct OptimizerOptions {
  DfecBounds bounds{};
  int grid = 5;         // coarse multi-start grid per axis
  int starts = 3;       // simplex runs seeded from the best grid points
  double tolerance = 1e-3;  // simplex diameter, scaled coordinates
  int max_evaluations = 1500;
  std::optional<double> fixed_dp;  // optimise the window only
  std::size_t workers = 1;
  /// Relative cost slack used to shrink the window after the search: T_off is
  /// pulled earlier and T_on later while the cost stays within this factor of
  /// the best. Zero disables shrinking.
  double window_tolerance = 1e-3;
  double window_step = 0.25;  // s, scan step of the shrink
};

struct DfecIterate {
  int evaluation = 0;
  DfecAction action;
  double cost = 0.0;
};

struct DfecResult {
  DfecAction action;
  double cost = 0.0;
  double uncontrolled_cost = 0.0;
  double uncontrolled_nadir = 0.0;
  double controlled_nadir = 0.0;
  int evaluations = 0;
  std::vector<DfecIterate> history;  // best-so-far improvements
};

DfecResult optimize_action(const TwoMachineModel& model, const OptimizerOptions& options = {},
                           const DfecSimOptions& sim = {},
                           std::optional<DfecAction> initial_guess = std::nullopt);

struct ContourGrid {
  double dp = 0.0;
  std::vector<double> t_on;
  std::vector<double> t_off;
  Matrix cost_x1000;  // rows t_on, columns t_off; NaN where t_on >= t_off

  /// Grid cell with the lowest cost; ties go to the shorter window.
  std::pair<Eigen::Index, Eigen::Index> argmin() const;
};

std::vector<double> linspace(double lo, double hi, int n);

ContourGrid contour_sweep(const TwoMachineModel& model, double dp,
                          const std::vector<double>& t_on, const std::vector<double>& t_off,
                          const DfecSimOptions& sim = {}, std::size_t workers = 1);

/// Governor gain K1 for which the uncontrolled nadir depth equals `target`.
double calibrate_droop(const TwoMachineModel& model, double target,
                       const DfecSimOptions& sim = {});

}  // namespace dgc
