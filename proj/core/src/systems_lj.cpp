#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "fekl/steinhardt.hpp"
#include "fekl/systems.hpp"

namespace fekl {

namespace {
constexpr double kCoincident2 = 1e-20;
}

LjClusterSystem::LjClusterSystem(const Params& p) : p_(p) {
  if (p_.n_atoms < 2) throw ContractViolation("cluster needs at least two atoms");
  if (p_.dim != 2 && p_.dim != 3) throw ContractViolation("cluster dimension must be 2 or 3");
  if (!(p_.epsilon > 0.0) || !(p_.sigma > 0.0)) throw ContractViolation("epsilon and sigma must be positive");
  if (p_.order == OrderParameter::kQ4 && p_.dim != 3)
    throw UndefinedOrderParameter("Q4 order parameter requires a 3D cluster");
  wall_radius_ = p_.wall_radius > 0.0
                     ? p_.wall_radius
                     : 2.25 * p_.sigma * std::cbrt(static_cast<double>(p_.n_atoms));
}

double LjClusterSystem::pair_energy(const Eigen::VectorXd& q) const {
  const int n = p_.n_atoms, d = p_.dim;
  if (q.size() != n * d) throw ContractViolation("cluster configuration has wrong size");
  const double sig2 = p_.sigma * p_.sigma;
  double e = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      double r2 = 0.0;
      for (int a = 0; a < d; ++a) {
        const double dd = q[d * i + a] - q[d * j + a];
        r2 += dd * dd;
      }
      if (r2 < kCoincident2) throw SingularConfiguration("coincident atoms in cluster");
      const double s2 = sig2 / r2;
      const double s6 = s2 * s2 * s2;
      e += 4.0 * p_.epsilon * (s6 * s6 - s6);
    }
  }
  return e;
}

RcEvaluation LjClusterSystem::evaluate(const Eigen::VectorXd& q) const {
  const int n = p_.n_atoms, d = p_.dim;
  if (q.size() != n * d) throw ContractViolation("cluster configuration has wrong size");
  const double sig2 = p_.sigma * p_.sigma;

  RcEvaluation ev;
  ev.grad_q = Eigen::VectorXd::Zero(n * d);
  ev.xi = Eigen::VectorXd::Zero(2);
  ev.xi_jacobian = Eigen::MatrixXd::Zero(2, n * d);

  // Pair sum: energy, forces, and the same quantities feed xi_2 = V_lj.
  double e_pair = 0.0;
  Eigen::VectorXd g_pair = Eigen::VectorXd::Zero(n * d);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      double r2 = 0.0;
      double diff[3] = {0, 0, 0};
      for (int a = 0; a < d; ++a) {
        diff[a] = q[d * i + a] - q[d * j + a];
        r2 += diff[a] * diff[a];
      }
      if (r2 < kCoincident2) throw SingularConfiguration("coincident atoms in cluster");
      const double s2 = sig2 / r2;
      const double s6 = s2 * s2 * s2;
      const double s12 = s6 * s6;
      e_pair += 4.0 * p_.epsilon * (s12 - s6);
      const double dv_over_r = 24.0 * p_.epsilon * (s6 - 2.0 * s12) / r2;
      for (int a = 0; a < d; ++a) {
        ev.grad_q[d * i + a] += dv_over_r * diff[a];
        ev.grad_q[d * j + a] -= dv_over_r * diff[a];
      }
    }
  }
  g_pair = ev.grad_q;

  // Confining shell about the instantaneous centroid.
  Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < d; ++a) centroid[a] += q[d * i + a];
  centroid /= n;

  double e_wall = 0.0;
  Eigen::VectorXd g_sum = Eigen::VectorXd::Zero(d);
  for (int i = 0; i < n; ++i) {
    double dist2 = 0.0;
    for (int a = 0; a < d; ++a) {
      const double dd = q[d * i + a] - centroid[a];
      dist2 += dd * dd;
    }
    const double dist = std::sqrt(dist2);
    const double excess = dist - wall_radius_;
    if (excess <= 0.0 || dist == 0.0) continue;
    const double e3 = excess * excess * excess;
    e_wall += p_.wall_k * e3 * excess;
    // d/dq_j of sum_i k (|q_i - qbar| - R)^4: the centroid couples all atoms.
    const double coef = 4.0 * p_.wall_k * e3 / dist;
    for (int a = 0; a < d; ++a) {
      const double comp = coef * (q[d * i + a] - centroid[a]);
      ev.grad_q[d * i + a] += comp;
      g_sum[a] += comp;
    }
  }
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < d; ++a) ev.grad_q[d * i + a] -= g_sum[a] / n;

  ev.energy = e_pair + e_wall;

  // Order parameter row.
  if (p_.order == OrderParameter::kQ4) {
    const Q4Result q4 = steinhardt_q4_with_grad(q, n, p_.q4_cutoff * p_.sigma);
    ev.xi[0] = q4.value;
    ev.xi_jacobian.row(0) = q4.grad.transpose();
  } else {
    // Second moment about the centroid; the centroid shift drops out of the
    // gradient because the deviations sum to zero.
    double m2 = 0.0;
    for (int i = 0; i < n; ++i)
      for (int a = 0; a < d; ++a) {
        const double dd = q[d * i + a] - centroid[a];
        m2 += dd * dd;
        ev.xi_jacobian(0, d * i + a) = 2.0 * dd / n;
      }
    ev.xi[0] = m2 / n;
  }
  ev.xi[1] = e_pair;
  ev.xi_jacobian.row(1) = g_pair.transpose();
  return ev;
}

double LjClusterSystem::energy(const Eigen::VectorXd& q) const { return evaluate(q).energy; }
Eigen::VectorXd LjClusterSystem::grad_q(const Eigen::VectorXd& q) const { return evaluate(q).grad_q; }
Eigen::VectorXd LjClusterSystem::xi(const Eigen::VectorXd& q) const { return evaluate(q).xi; }
Eigen::MatrixXd LjClusterSystem::xi_jacobian(const Eigen::VectorXd& q) const {
  return evaluate(q).xi_jacobian;
}

Eigen::VectorXd LjClusterSystem::initial_q() const {
  if (p_.dim == 3) {
    if (p_.n_atoms != 38)
      throw ContractViolation("built-in 3D cluster geometries are defined for 38 atoms");
    Eigen::VectorXd q0;
    if (p_.initial_geometry == "fcc")
      q0 = fcc_truncated_octahedron_38(1.09 * p_.sigma);
    else if (p_.initial_geometry == "icosahedral")
      q0 = icosahedral_fragment_38(1.09 * p_.sigma);
    else
      throw ContractViolation("unknown cluster initial geometry: " + p_.initial_geometry);
    return relax_configuration(*this, std::move(q0));
  }
  // 2D: triangular packing built as rings of six around a central atom.
  const double a = 1.1 * p_.sigma;
  Eigen::VectorXd q(2 * p_.n_atoms);
  int placed = 0;
  q[0] = 0.0;
  q[1] = 0.0;
  ++placed;
  for (int ring = 1; placed < p_.n_atoms; ++ring) {
    const int on_ring = 6 * ring;
    for (int k = 0; k < on_ring && placed < p_.n_atoms; ++k, ++placed) {
      const double ang = 2.0 * 3.1415926535897932385 * k / on_ring;
      q[2 * placed] = ring * a * std::cos(ang);
      q[2 * placed + 1] = ring * a * std::sin(ang);
    }
  }
  return relax_configuration(*this, std::move(q));
}

Eigen::VectorXd relax_configuration(const ReactionCoordinateSystem& sys, Eigen::VectorXd q,
                                    int max_iters, double grad_tol) {
  // Plain gradient descent with a backtracking step; deterministic and robust
  // enough for producing reference geometries.
  double step = 1e-3;
  double e = sys.energy(q);
  for (int it = 0; it < max_iters; ++it) {
    const Eigen::VectorXd g = sys.grad_q(q);
    if (g.cwiseAbs().maxCoeff() < grad_tol) break;
    Eigen::VectorXd trial = q - step * g;
    double e_trial;
    try {
      e_trial = sys.energy(trial);
    } catch (const SingularConfiguration&) {
      e_trial = std::numeric_limits<double>::infinity();
    }
    if (e_trial < e) {
      q = std::move(trial);
      e = e_trial;
      step = std::min(step * 1.2, 0.1);
    } else {
      step *= 0.5;
      if (step < 1e-16) break;
    }
  }
  return q;
}

Eigen::VectorXd fcc_truncated_octahedron_38(double d_nn) {
  // fcc sites as the odd-parity integer lattice; keep |i|+|j|+|k| <= 3 and
  // drop the six (±3,0,0)-type vertices.  That leaves exactly 38 sites whose
  // hull is the truncated octahedron.  Nearest neighbors sit sqrt(2) apart.
  std::vector<std::array<int, 3>> sites;
  for (int i = -3; i <= 3; ++i)
    for (int j = -3; j <= 3; ++j)
      for (int k = -3; k <= 3; ++k) {
        if (((i + j + k) % 2 + 2) % 2 != 1) continue;
        const int l1 = std::abs(i) + std::abs(j) + std::abs(k);
        if (l1 > 3) continue;
        if (l1 == 3 && (std::abs(i) == 3 || std::abs(j) == 3 || std::abs(k) == 3)) continue;
        sites.push_back({i, j, k});
      }
  if (sites.size() != 38) throw ContractViolation("truncated octahedron construction failed");
  const double scale = d_nn / std::sqrt(2.0);
  Eigen::VectorXd q(3 * 38);
  for (int s = 0; s < 38; ++s)
    for (int a = 0; a < 3; ++a) q[3 * s + a] = scale * sites[s][a];
  return q;
}

Eigen::VectorXd icosahedral_fragment_38(double d_nn) {
  // Two-shell Mackay icosahedron (1 + 12 + 42 = 55 sites) with a 17-site cap
  // removed around one five-fold axis, leaving 38 atoms with icosahedral
  // short-range order.
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Eigen::Vector3d> verts;
  for (double s1 : {-1.0, 1.0})
    for (double s2 : {-1.0, 1.0}) {
      verts.push_back(Eigen::Vector3d(0.0, s1, s2 * phi).normalized());
      verts.push_back(Eigen::Vector3d(s1, s2 * phi, 0.0).normalized());
      verts.push_back(Eigen::Vector3d(s2 * phi, 0.0, s1).normalized());
    }
  const double r1 = d_nn;

  std::vector<Eigen::Vector3d> shell2;
  for (const auto& v : verts) shell2.push_back(2.0 * r1 * v);
  // Edge midpoints: adjacent vertex pairs are the closest ones.
  double min_d = 1e30;
  for (std::size_t i = 0; i < verts.size(); ++i)
    for (std::size_t j = i + 1; j < verts.size(); ++j)
      min_d = std::min(min_d, (verts[i] - verts[j]).norm());
  for (std::size_t i = 0; i < verts.size(); ++i)
    for (std::size_t j = i + 1; j < verts.size(); ++j)
      if ((verts[i] - verts[j]).norm() < 1.2 * min_d)
        shell2.push_back(r1 * (verts[i] + verts[j]));
  if (shell2.size() != 42) throw ContractViolation("icosahedral shell construction failed");

  // Remove the 17 shell-2 sites furthest along the first vertex axis,
  // breaking ties by site index so the construction is deterministic.
  const Eigen::Vector3d axis = verts[0];
  std::vector<std::size_t> order(shell2.size());
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double da = shell2[a].dot(axis), db = shell2[b].dot(axis);
    if (da != db) return da > db;
    return a < b;
  });
  std::vector<bool> removed(shell2.size(), false);
  for (int k = 0; k < 17; ++k) removed[order[static_cast<std::size_t>(k)]] = true;

  std::vector<Eigen::Vector3d> sites;
  sites.push_back(Eigen::Vector3d::Zero());
  for (const auto& v : verts) sites.push_back(r1 * v);
  for (std::size_t s = 0; s < shell2.size(); ++s)
    if (!removed[s]) sites.push_back(shell2[s]);
  if (sites.size() != 38) throw ContractViolation("icosahedral fragment construction failed");

  Eigen::VectorXd q(3 * 38);
  for (int s = 0; s < 38; ++s)
    for (int a = 0; a < 3; ++a) q[3 * s + a] = sites[static_cast<std::size_t>(s)][a];
  return q;
}

}  // namespace fekl
