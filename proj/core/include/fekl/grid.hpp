#pragma once

// Free-energy surfaces on regular grids: evaluation of a kernel model,
// self-describing delimited-text serialization, and log-sum-exp
// marginalization of a 2D surface down to one axis.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fekl/domain.hpp"
#include "fekl/kernel_model.hpp"

namespace fekl {

struct FreeEnergyGrid {
  double beta = 1.0;
  std::vector<std::string> axis_names;      // one per dimension
  std::vector<Eigen::VectorXd> axes;        // ascending grid per dimension
  std::vector<double> values;               // row-major, last axis fastest
  Eigen::VectorXd anchor;
  std::string config_hash;                  // provenance
  std::uint64_t seed = 0;

  int dim() const { return static_cast<int>(axes.size()); }
  std::size_t total_points() const;
  // Flat index of the grid point nearest the anchor (per-axis nearest).
  std::size_t anchor_index() const;

  void validate() const;
};

// Evaluate the model on `points_per_axis` equally spaced points per axis
// (endpoints included).
FreeEnergyGrid evaluate_grid(const FreeEnergyModel& model, const Domain& dom, int points_per_axis,
                             std::vector<std::string> axis_names, std::string config_hash,
                             std::uint64_t seed);

void write_grid(const FreeEnergyGrid& grid, std::ostream& os);
void write_grid_file(const FreeEnergyGrid& grid, const std::string& path);
FreeEnergyGrid read_grid(std::istream& is);
FreeEnergyGrid read_grid_file(const std::string& path);

// Integrate the named axis out of a 2D surface:
//   A_out = -(1/beta) log integral exp(-beta A) d(axis),
// trapezoidal in the integrated coordinate, evaluated in log space, and
// re-anchored so the value at the point nearest the surviving anchor
// coordinate is exactly zero.
FreeEnergyGrid integrate_grid(const FreeEnergyGrid& grid, int axis);

}  // namespace fekl
