#include "fekl/grid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "fekl/common.hpp"

namespace fekl {

std::size_t FreeEnergyGrid::total_points() const {
  std::size_t n = 1;
  for (const Eigen::VectorXd& ax : axes) n *= static_cast<std::size_t>(ax.size());
  return n;
}

std::size_t FreeEnergyGrid::anchor_index() const {
  std::size_t flat = 0;
  for (int d = 0; d < dim(); ++d) {
    const Eigen::VectorXd& ax = axes[d];
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < ax.size(); ++i)
      if (std::abs(ax[i] - anchor[d]) < std::abs(ax[best] - anchor[d])) best = i;
    flat = flat * static_cast<std::size_t>(ax.size()) + static_cast<std::size_t>(best);
  }
  return flat;
}

void FreeEnergyGrid::validate() const {
  if (!(beta > 0.0)) throw FileFormatError("grid: beta must be positive");
  if (axes.empty()) throw FileFormatError("grid: no axes");
  if (axis_names.size() != axes.size()) throw FileFormatError("grid: axis name count mismatch");
  if (anchor.size() != dim()) throw FileFormatError("grid: anchor dimension mismatch");
  for (const Eigen::VectorXd& ax : axes) {
    if (ax.size() < 2) throw FileFormatError("grid: axis needs at least two points");
    for (Eigen::Index i = 1; i < ax.size(); ++i)
      if (!(ax[i] > ax[i - 1])) throw FileFormatError("grid: axis values must increase");
  }
  if (values.size() != total_points()) throw FileFormatError("grid: value count mismatch");
  for (double v : values)
    if (!std::isfinite(v)) throw FileFormatError("grid: non-finite value");
}

FreeEnergyGrid evaluate_grid(const FreeEnergyModel& model, const Domain& dom, int points_per_axis,
                             std::vector<std::string> axis_names, std::string config_hash,
                             std::uint64_t seed) {
  if (points_per_axis < 2) throw ContractViolation("evaluate_grid: need at least two points per axis");
  const int d = dom.dim();
  if (static_cast<int>(axis_names.size()) != d)
    throw ContractViolation("evaluate_grid: axis name count mismatch");

  FreeEnergyGrid g;
  g.beta = model.beta();
  g.axis_names = std::move(axis_names);
  g.anchor = model.anchor();
  g.config_hash = std::move(config_hash);
  g.seed = seed;
  g.axes.resize(d);
  for (int l = 0; l < d; ++l) {
    Eigen::VectorXd ax(points_per_axis);
    const double width = dom.upper[l] - dom.lower[l];
    for (int i = 0; i < points_per_axis; ++i)
      ax[i] = dom.lower[l] + width * i / (points_per_axis - 1);
    g.axes[l] = std::move(ax);
  }

  const std::size_t total = g.total_points();
  g.values.resize(total);
  Eigen::VectorXd z(d);
  std::vector<int> idx(d, 0);
  for (std::size_t c = 0; c < total; ++c) {
    for (int l = 0; l < d; ++l) z[l] = g.axes[l][idx[l]];
    g.values[c] = model.value(z);
    for (int l = d - 1; l >= 0; --l) {
      if (++idx[l] < g.axes[l].size()) break;
      idx[l] = 0;
    }
  }
  return g;
}

void write_grid(const FreeEnergyGrid& grid, std::ostream& os) {
  grid.validate();
  const int d = grid.dim();
  os << "# free-energy grid\n";
  os << "# beta " << fmt17(grid.beta) << "\n";
  os << "# axes " << d << "\n";
  for (int l = 0; l < d; ++l) {
    os << "# axis " << l << " " << grid.axis_names[l] << " " << grid.axes[l].size() << " "
       << fmt17(grid.axes[l][0]) << " " << fmt17(grid.axes[l][grid.axes[l].size() - 1]) << "\n";
  }
  os << "# anchor";
  for (int l = 0; l < d; ++l) os << " " << fmt17(grid.anchor[l]);
  os << "\n";
  os << "# config " << grid.config_hash << "\n";
  os << "# seed " << grid.seed << "\n";
  os << "# columns";
  for (int l = 0; l < d; ++l) os << " " << grid.axis_names[l];
  os << " free_energy\n";

  std::vector<int> idx(d, 0);
  for (std::size_t c = 0; c < grid.values.size(); ++c) {
    for (int l = 0; l < d; ++l) os << fmt17(grid.axes[l][idx[l]]) << "\t";
    os << fmt17(grid.values[c]) << "\n";
    for (int l = d - 1; l >= 0; --l) {
      if (++idx[l] < grid.axes[l].size()) break;
      idx[l] = 0;
    }
  }
}

void write_grid_file(const FreeEnergyGrid& grid, const std::string& path) {
  std::ofstream os(path, std::ios::binary);  // binary: no newline translation anywhere
  if (!os) throw FileFormatError("cannot open grid file for writing: " + path);
  write_grid(grid, os);
  if (!os) throw FileFormatError("failed writing grid file: " + path);
}

namespace {

std::string expect_prefix(const std::string& line, const std::string& prefix,
                          const std::string& what) {
  if (line.rfind(prefix, 0) != 0)
    throw FileFormatError("grid: expected " + what + " header, got: " + line);
  return line.substr(prefix.size());
}

}  // namespace

namespace {
FreeEnergyGrid read_grid_impl(std::istream& is);
}

FreeEnergyGrid read_grid(std::istream& is) {
  try {
    return read_grid_impl(is);
  } catch (const FileFormatError&) {
    throw;
  } catch (const std::exception& e) {
    throw FileFormatError(std::string("grid: parse error: ") + e.what());
  }
}

namespace {

FreeEnergyGrid read_grid_impl(std::istream& is) {
  FreeEnergyGrid g;
  std::string line;

  if (!std::getline(is, line) || line != "# free-energy grid")
    throw FileFormatError("grid: missing magic header line");

  if (!std::getline(is, line)) throw FileFormatError("grid: truncated header");
  g.beta = std::stod(expect_prefix(line, "# beta ", "beta"));

  if (!std::getline(is, line)) throw FileFormatError("grid: truncated header");
  const int d = std::stoi(expect_prefix(line, "# axes ", "axes"));
  if (d < 1 || d > 8) throw FileFormatError("grid: unreasonable axis count");

  std::vector<Eigen::Index> sizes(d);
  g.axis_names.resize(d);
  for (int l = 0; l < d; ++l) {
    if (!std::getline(is, line)) throw FileFormatError("grid: truncated header");
    std::istringstream ss(expect_prefix(line, "# axis ", "axis"));
    int axis_no = 0;
    long n = 0;
    double lo = 0, hi = 0;
    if (!(ss >> axis_no >> g.axis_names[l] >> n >> lo >> hi) || axis_no != l || n < 2)
      throw FileFormatError("grid: malformed axis header: " + line);
    sizes[l] = static_cast<Eigen::Index>(n);
  }

  if (!std::getline(is, line)) throw FileFormatError("grid: truncated header");
  {
    std::istringstream ss(expect_prefix(line, "# anchor", "anchor"));
    g.anchor.resize(d);
    for (int l = 0; l < d; ++l)
      if (!(ss >> g.anchor[l])) throw FileFormatError("grid: malformed anchor header");
  }

  if (!std::getline(is, line)) throw FileFormatError("grid: truncated header");
  g.config_hash = expect_prefix(line, "# config ", "config");

  if (!std::getline(is, line)) throw FileFormatError("grid: truncated header");
  g.seed = std::stoull(expect_prefix(line, "# seed ", "seed"));

  if (!std::getline(is, line)) throw FileFormatError("grid: truncated header");
  expect_prefix(line, "# columns", "columns");

  g.axes.resize(d);
  std::size_t total = 1;
  for (int l = 0; l < d; ++l) {
    g.axes[l].resize(sizes[l]);
    total *= static_cast<std::size_t>(sizes[l]);
  }
  g.values.resize(total);

  std::vector<int> idx(d, 0);
  for (std::size_t c = 0; c < total; ++c) {
    if (!std::getline(is, line)) throw FileFormatError("grid: missing data rows");
    std::istringstream ss(line);
    for (int l = 0; l < d; ++l) {
      double coord;
      if (!(ss >> coord)) throw FileFormatError("grid: malformed data row: " + line);
      // First visit to this axis index defines the coordinate; later visits
      // must agree exactly (the format repeats coordinates per row).
      bool first = true;
      for (int m = 0; m < d; ++m)
        if (m != l && idx[m] != 0) first = false;
      if (first)
        g.axes[l][idx[l]] = coord;
      else if (coord != g.axes[l][idx[l]])
        throw FileFormatError("grid: inconsistent coordinate in data row: " + line);
    }
    if (!(ss >> g.values[c])) throw FileFormatError("grid: malformed data row: " + line);
    for (int l = d - 1; l >= 0; --l) {
      if (++idx[l] < sizes[l]) break;
      idx[l] = 0;
    }
  }
  g.validate();
  return g;
}

}  // namespace

FreeEnergyGrid read_grid_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FileFormatError("cannot open grid file: " + path);
  return read_grid(is);
}

FreeEnergyGrid integrate_grid(const FreeEnergyGrid& grid, int axis) {
  grid.validate();
  if (grid.dim() != 2) throw ContractViolation("integrate_grid: input must be two-dimensional");
  if (axis < 0 || axis > 1) throw ContractViolation("integrate_grid: axis out of range");

  const int keep = 1 - axis;
  const Eigen::VectorXd& ax_out = grid.axes[axis];
  const Eigen::VectorXd& ax_keep = grid.axes[keep];
  const Eigen::Index n_out = ax_out.size();
  const Eigen::Index n_keep = ax_keep.size();

  // Trapezoid weights for a possibly non-uniform integrated axis.
  Eigen::VectorXd w(n_out);
  w[0] = 0.5 * (ax_out[1] - ax_out[0]);
  for (Eigen::Index i = 1; i + 1 < n_out; ++i) w[i] = 0.5 * (ax_out[i + 1] - ax_out[i - 1]);
  w[n_out - 1] = 0.5 * (ax_out[n_out - 1] - ax_out[n_out - 2]);

  const auto value_at = [&](Eigen::Index ik, Eigen::Index io) {
    // Row-major with the last axis fastest.
    const std::size_t flat = axis == 1
                                 ? static_cast<std::size_t>(ik) * n_out + static_cast<std::size_t>(io)
                                 : static_cast<std::size_t>(io) * n_keep + static_cast<std::size_t>(ik);
    return grid.values[flat];
  };

  FreeEnergyGrid out;
  out.beta = grid.beta;
  out.axis_names = {grid.axis_names[keep]};
  out.axes = {ax_keep};
  out.anchor = Eigen::VectorXd::Constant(1, grid.anchor[keep]);
  out.config_hash = grid.config_hash;
  out.seed = grid.seed;
  out.values.resize(static_cast<std::size_t>(n_keep));

  for (Eigen::Index ik = 0; ik < n_keep; ++ik) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index io = 0; io < n_out; ++io) best = std::min(best, value_at(ik, io));
    double accum = 0.0;
    for (Eigen::Index io = 0; io < n_out; ++io)
      accum += w[io] * std::exp(-grid.beta * (value_at(ik, io) - best));
    out.values[static_cast<std::size_t>(ik)] = best - std::log(accum) / grid.beta;
  }

  const double at_anchor = out.values[out.anchor_index()];
  for (double& v : out.values) v -= at_anchor;
  return out;
}

}  // namespace fekl
