#pragma once

#include <Eigen/Core>

#include "fekl/common.hpp"

namespace fekl {

// Axis-aligned box in collective-variable space.  The sampled densities are
// restricted to this box by an indicator factor, and the reference measure is
// the uniform distribution on it.
struct Domain {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  Domain() = default;
  Domain(Eigen::VectorXd lo, Eigen::VectorXd up) : lower(std::move(lo)), upper(std::move(up)) {
    if (lower.size() != upper.size())
      throw ContractViolation("domain bounds have mismatched dimensions");
    if (lower.size() == 0) throw ContractViolation("domain must have at least one axis");
    for (Eigen::Index l = 0; l < lower.size(); ++l)
      if (!(lower[l] < upper[l]))
        throw ContractViolation("domain lower bound must be strictly below upper bound on every axis");
  }

  int dim() const { return static_cast<int>(lower.size()); }

  // Closed box: boundary points count as inside.
  bool contains(const Eigen::VectorXd& z) const {
    if (z.size() != lower.size()) throw ContractViolation("domain: point has wrong dimension");
    for (Eigen::Index l = 0; l < z.size(); ++l)
      if (z[l] < lower[l] || z[l] > upper[l]) return false;
    return true;
  }

  double volume() const { return (upper - lower).prod(); }
};

}  // namespace fekl
