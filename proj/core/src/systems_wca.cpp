#include <cmath>

#include "fekl/systems.hpp"

namespace fekl {

namespace {
// Squared distance below which two atoms are treated as coincident.
constexpr double kCoincident2 = 1e-20;
}  // namespace

WcaDimerSystem::WcaDimerSystem(const Params& p) : p_(p) {
  if (p_.n_atoms < 2) throw ContractViolation("dimer system needs at least two atoms");
  if (!(p_.box_side > 0.0)) throw ContractViolation("box side must be positive");
  if (!(p_.epsilon > 0.0) || !(p_.sigma > 0.0)) throw ContractViolation("epsilon and sigma must be positive");
  if (!(p_.w > 0.0)) throw ContractViolation("double-well half-width w must be positive");
  const double rc = std::pow(2.0, 1.0 / 6.0) * p_.sigma;
  cutoff2_ = rc * rc;
  if (p_.box_side < 2.0 * rc)
    throw ContractViolation("box side must exceed twice the WCA cutoff for minimum image to be valid");
}

double WcaDimerSystem::bond_potential(double r) const {
  const double u = r - p_.r0 - p_.w;
  const double t = 1.0 - u * u / (p_.w * p_.w);
  return p_.h * t * t;
}

namespace {
// Minimum-image displacement component in a periodic box of side L.
inline double min_image(double d, double L) { return d - L * std::nearbyint(d / L); }
}  // namespace

double WcaDimerSystem::energy(const Eigen::VectorXd& q) const {
  return evaluate(q).energy;
}

Eigen::VectorXd WcaDimerSystem::grad_q(const Eigen::VectorXd& q) const {
  return evaluate(q).grad_q;
}

Eigen::VectorXd WcaDimerSystem::xi(const Eigen::VectorXd& q) const {
  return evaluate(q).xi;
}

Eigen::MatrixXd WcaDimerSystem::xi_jacobian(const Eigen::VectorXd& q) const {
  return evaluate(q).xi_jacobian;
}

RcEvaluation WcaDimerSystem::evaluate(const Eigen::VectorXd& q) const {
  const int n = p_.n_atoms;
  if (q.size() != 2 * n) throw ContractViolation("dimer configuration has wrong size");
  const double L = p_.box_side;
  const double eps = p_.epsilon;
  const double sig2 = p_.sigma * p_.sigma;

  RcEvaluation ev;
  ev.grad_q = Eigen::VectorXd::Zero(2 * n);
  ev.xi = Eigen::VectorXd::Zero(1);
  ev.xi_jacobian = Eigen::MatrixXd::Zero(1, 2 * n);

  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double dx = min_image(q[2 * i] - q[2 * j], L);
      const double dy = min_image(q[2 * i + 1] - q[2 * j + 1], L);
      const double r2 = dx * dx + dy * dy;
      if (r2 < kCoincident2)
        throw SingularConfiguration("coincident atoms in dimer system");

      double dv_over_r = 0.0;  // (dV/dr) / r
      if (i == 0 && j == 1) {
        const double r = std::sqrt(r2);
        ev.energy += bond_potential(r);
        const double u = r - p_.r0 - p_.w;
        const double t = 1.0 - u * u / (p_.w * p_.w);
        dv_over_r = -4.0 * p_.h * u * t / (p_.w * p_.w) / r;
        ev.xi[0] = r;
        ev.xi_jacobian(0, 2 * i) = dx / r;
        ev.xi_jacobian(0, 2 * i + 1) = dy / r;
        ev.xi_jacobian(0, 2 * j) = -dx / r;
        ev.xi_jacobian(0, 2 * j + 1) = -dy / r;
      } else if (r2 < cutoff2_) {
        const double s2 = sig2 / r2;
        const double s6 = s2 * s2 * s2;
        const double s12 = s6 * s6;
        ev.energy += 4.0 * eps * (s12 - s6) + eps;
        dv_over_r = 24.0 * eps * (s6 - 2.0 * s12) / r2;
      } else {
        continue;
      }
      ev.grad_q[2 * i] += dv_over_r * dx;
      ev.grad_q[2 * i + 1] += dv_over_r * dy;
      ev.grad_q[2 * j] -= dv_over_r * dx;
      ev.grad_q[2 * j + 1] -= dv_over_r * dy;
    }
  }
  return ev;
}

Eigen::VectorXd WcaDimerSystem::initial_q() const {
  const int n = p_.n_atoms;
  const int m = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
  const double spacing = p_.box_side / m;
  Eigen::VectorXd q(2 * n);
  for (int k = 0; k < n; ++k) {
    q[2 * k] = (k % m + 0.5) * spacing;
    q[2 * k + 1] = (k / m + 0.5) * spacing;
  }
  // Start the dimer bond at the inner well.
  q[2] = q[0] + p_.r0;
  q[3] = q[1];
  return q;
}

}  // namespace fekl
