#pragma once

#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dgc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Swing-model state ordered as [delta_1..delta_m, omega_1..omega_m]; angles in
/// rad, speeds in pu.
using StateVector = Eigen::VectorXd;

/// One entry per controllable component, pu on system base.
using InjectionVector = Eigen::VectorXd;

inline constexpr double kNominalOmegaS = 120.0 * std::numbers::pi;

enum class BusType { generator, non_generator };

struct Bus {
  int id = 0;
  BusType type = BusType::non_generator;
};

struct Branch {
  int from = 0;
  int to = 0;
  double x = 0.0;  // series reactance, pu
  bool in_service = true;
};

/// Classical machine sitting on its internal EMF node.
struct Generator {
  int bus = 0;
  double inertia = 0.0;  // H, s
  double p_mech = 0.0;   // pu
  bool infinite_bus = false;
};

struct Load {
  int bus = 0;
  double p = 0.0;  // pu, consumed
};

struct ControllableComponent {
  int bus = 0;
  double p0 = 0.0;  // pu, injected
};

/// Raw network description. All powers are per-unit on `base_mva`; file
/// readers convert MW at ingestion.
struct GridSystem {
  std::string name;
  double base_mva = 100.0;
  double omega_s = kNominalOmegaS;
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  std::vector<Generator> generators;
  std::vector<Load> loads;
  std::vector<ControllableComponent> ccs;

  /// Throws ModelError on the first violated structural rule.
  void validate() const;
};

/// Linear undamped swing model
///
///   d(delta)/dt = omega_s (omega - 1)
///   d(omega)/dt = 1/2 H^-1 (P_m + B_b P_L - B_c P_0 - B_c dP - B_a delta)
///
/// over the m machines that remain once the infinite bus is grounded. Treat
/// as an immutable value after build_reduced_model().
struct ReducedModel {
  double omega_s = kNominalOmegaS;
  double base_mva = 100.0;

  Matrix a;         // 2m x 2m
  Matrix b_a;       // m x m
  Matrix b_b;       // m x (n - n_g)
  Matrix b_c;       // m x n_c
  Vector inertia;   // diagonal of H
  Vector p_mech;
  Vector p_load;    // indexed like nongen_buses
  Vector p0;        // indexed like cc_buses
  StateVector x_e;

  int infinite_bus = 0;
  std::vector<int> machine_buses;  // state position k -> bus id
  std::vector<int> nongen_buses;   // column of b_b -> bus id
  std::vector<int> cc_buses;       // column of b_c -> bus id

  // Full DC susceptance matrix before grounding, rows ordered like bus_order.
  Matrix susceptance;
  std::vector<int> bus_order;

  Eigen::Index machines() const { return inertia.size(); }
  Eigen::Index states() const { return 2 * inertia.size(); }
  Eigen::Index cc_count() const { return b_c.cols(); }

  /// Accelerating power per pu injected at `bus`, one entry per machine.
  /// Zero for the infinite bus; throws ModelError for an unknown bus.
  Vector injection_gain(int bus) const;

  /// B_a^-1 rhs, column by column.
  Matrix solve_angles(const Matrix& rhs) const;
};

ReducedModel build_reduced_model(const GridSystem& sys);

/// Equilibrium x_c with the controllable components stepped by `dp`.
StateVector equilibrium_shifted(const ReducedModel& model, const InjectionVector& dp);

inline auto angles(const StateVector& x) { return x.head(x.size() / 2); }
inline auto speeds(const StateVector& x) { return x.tail(x.size() / 2); }
inline auto angles(StateVector& x) { return x.head(x.size() / 2); }
inline auto speeds(StateVector& x) { return x.tail(x.size() / 2); }

}  // namespace dgc
