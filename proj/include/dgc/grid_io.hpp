#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "dgc/deoc.hpp"
#include "dgc/dfec.hpp"
#include "dgc/grid_model.hpp"
#include "dgc/sim.hpp"

namespace dgc {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

/// Reads a whole file as JSON. Throws InputError for a missing file or a parse
/// failure, with the parser position in the message.
Json read_json(const std::filesystem::path& path);

/// Parses a grid description; MW quantities are converted to pu on base_mva.
/// Throws InputError on schema problems and ModelError via validate().
GridSystem grid_from_json(const Json& j);
GridSystem load_grid(const std::filesystem::path& path);

/// Inverse of grid_from_json, always written in pu.
Json grid_to_json(const GridSystem& sys);

struct DeocScenario {
  std::string name;
  std::filesystem::path system;  // resolved against the scenario file
  Disturbance disturbance = InitialState{};
  ScheduleRequest request;
  double t_end = 10.0;
  double dt_out = 0.01;
};

/// `base_mva` converts MW fields (pulse magnitude, dp overrides) to pu.
DeocScenario deoc_scenario_from_json(const Json& j, double base_mva,
                                     const std::filesystem::path& origin = {});

/// Reads the scenario, then the grid it names.
std::pair<DeocScenario, GridSystem> load_deoc_scenario(const std::filesystem::path& path);

struct SweepSpec {
  double dp = 0.0;
  double t_on_lo = 0.0, t_on_hi = 10.0;
  int t_on_n = 40;
  double t_off_lo = 0.0, t_off_hi = 40.0;
  int t_off_n = 40;
};

struct DfecScenario {
  std::string name;
  TwoMachineModel model;
  DfecSimOptions sim;
  OptimizerOptions optimizer;
  std::optional<DfecAction> action;
  std::optional<DfecAction> initial_guess;
  std::optional<SweepSpec> sweep;
  std::optional<double> target_nadir;  // used by calibration
};

DfecScenario dfec_scenario_from_json(const Json& j);
DfecScenario load_dfec_scenario(const std::filesystem::path& path);
Json dfec_model_to_json(const TwoMachineModel& model);

}  // namespace dgc
