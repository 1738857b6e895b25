#pragma once

// Plain-text configuration snapshots.
//
// Format: a header line "n_atoms dim box" where box is the periodic box side
// or the word "none", followed by one atom per line with dim coordinates,
// written with 17 significant digits.

#include <Eigen/Core>
#include <optional>
#include <string>

namespace fekl {

struct Snapshot {
  int n_atoms = 0;
  int dim = 0;
  std::optional<double> box_side;  // empty for open boundaries
  Eigen::VectorXd coords;          // flat, atom-major
};

std::string snapshot_to_text(const Snapshot& snap);
Snapshot snapshot_from_text(const std::string& text);

void save_snapshot(const Snapshot& snap, const std::string& path);
Snapshot load_snapshot(const std::string& path);

}  // namespace fekl
