#pragma once

#include <filesystem>
#include <string>

#include "dgc/grid_io.hpp"
#include "dgc/grid_model.hpp"

namespace dgc::test {

inline std::filesystem::path data_path(const std::string& name) {
  return std::filesystem::path(DGC_DATA_DIR) / name;
}

inline ReducedModel load_model(const std::string& name) {
  return build_reduced_model(load_grid(data_path(name)));
}

inline std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::path(DGC_SCRATCH) / name;
  std::filesystem::create_directories(p);
  return p;
}

/// Machine on bus 1, infinite bus 2, optional mid-point bus 3.
inline GridSystem smib(bool mid_point, double h = 3.5) {
  GridSystem s;
  s.name = "smib";
  s.buses = {{1, BusType::generator}, {2, BusType::generator}};
  s.generators = {{1, h, 0.0, false}, {2, 1000.0, 0.0, true}};
  if (mid_point) {
    s.buses.push_back({3, BusType::non_generator});
    s.branches = {{1, 3, 0.25, true}, {3, 2, 0.25, true}};
    s.ccs = {{3, 0.0}};
  } else {
    s.branches = {{1, 2, 0.5, true}};
  }
  return s;
}

}  // namespace dgc::test
