#pragma once

#include <filesystem>
#include <ostream>
#include <string>

#include "dgc/deoc.hpp"
#include "dgc/dfec.hpp"
#include "dgc/grid_io.hpp"
#include "dgc/modal.hpp"
#include "dgc/sim.hpp"

namespace dgc {

Json modes_to_json(const ReducedModel& model, const ModalBasis& basis);

Json schedule_to_json(const DeocSchedule& schedule, const ReducedModel& model);
DeocSchedule schedule_from_json(const Json& j);

/// NaN entries of `h` are written as null.
Json trajectory_to_json(const Trajectory& traj, const ReducedModel& model);
Trajectory trajectory_from_json(const Json& j);

/// Columns: t, delta_<bus>..., omega_<bus>..., f_hz_<bus>..., E_k, orbit_value,
/// h, stage. `h` is empty where undefined; stage is -1 outside any stage.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj, const ReducedModel& model);

Json dfec_result_to_json(const DfecResult& result, const TwoMachineModel& model);
DfecResult dfec_result_from_json(const Json& j);

/// Header row carries the T_off values, first column the T_on values; invalid
/// cells are empty.
void write_contour_csv(std::ostream& out, const ContourGrid& grid);

/// Columns: t, delta1, omega1, delta2, omega2, mean_omega, p_mech.
void write_dfec_trajectory_csv(std::ostream& out, const DfecRun& run,
                               const TwoMachineModel& model);

/// Shortest decimal form that reads back to the same double.
std::string format_number(double v);

/// Writes `text` to `path`, creating parent directories. Throws InputError
/// when the file cannot be written.
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace dgc
