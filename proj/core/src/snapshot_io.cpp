#include "fekl/snapshot_io.hpp"

#include <fstream>
#include <sstream>

#include "fekl/common.hpp"

namespace fekl {

std::string snapshot_to_text(const Snapshot& snap) {
  if (snap.n_atoms <= 0 || snap.dim <= 0)
    throw ContractViolation("snapshot must have positive atom count and dimension");
  if (snap.coords.size() != snap.n_atoms * snap.dim)
    throw ContractViolation("snapshot coordinate count does not match header");
  std::ostringstream out;
  out << snap.n_atoms << ' ' << snap.dim << ' '
      << (snap.box_side ? fmt17(*snap.box_side) : std::string("none")) << '\n';
  for (int i = 0; i < snap.n_atoms; ++i) {
    for (int a = 0; a < snap.dim; ++a) {
      if (a) out << ' ';
      out << fmt17(snap.coords[snap.dim * i + a]);
    }
    out << '\n';
  }
  return out.str();
}

Snapshot snapshot_from_text(const std::string& text) {
  std::istringstream in(text);
  Snapshot snap;
  std::string box;
  if (!(in >> snap.n_atoms >> snap.dim >> box))
    throw FileFormatError("snapshot: malformed header (want 'n_atoms dim box')");
  if (snap.n_atoms <= 0 || snap.dim <= 0)
    throw FileFormatError("snapshot: atom count and dimension must be positive");
  if (box != "none") {
    try {
      snap.box_side = std::stod(box);
    } catch (...) {
      throw FileFormatError("snapshot: box must be a number or 'none'");
    }
    if (!(*snap.box_side > 0.0)) throw FileFormatError("snapshot: box side must be positive");
  }
  snap.coords.resize(snap.n_atoms * snap.dim);
  for (Eigen::Index k = 0; k < snap.coords.size(); ++k)
    if (!(in >> snap.coords[k]))
      throw FileFormatError("snapshot: expected " + std::to_string(snap.coords.size()) +
                            " coordinates");
  double extra;
  if (in >> extra) throw FileFormatError("snapshot: trailing data after coordinates");
  return snap;
}

void save_snapshot(const Snapshot& snap, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FileFormatError("cannot open snapshot for writing: " + path);
  out << snapshot_to_text(snap);
  if (!out) throw FileFormatError("failed writing snapshot: " + path);
}

Snapshot load_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileFormatError("cannot open snapshot: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return snapshot_from_text(ss.str());
}

}  // namespace fekl
