#include <cmath>

#include "fekl/systems.hpp"

namespace fekl {

namespace {
constexpr double kTwoPi = 6.2831853071795864769;
}

double ToySystem::energy(const Eigen::VectorXd& q, const Eigen::VectorXd& z) const {
  if (q.size() != 1 || z.size() != 1) throw ContractViolation("toy system is one-dimensional in q and z");
  const double c = std::cos(kTwoPi * z[0]);
  return c * (1.0 + d1_ * q[0]) + d2_ * q[0] * q[0];
}

Eigen::VectorXd ToySystem::grad_q(const Eigen::VectorXd& q, const Eigen::VectorXd& z) const {
  if (q.size() != 1 || z.size() != 1) throw ContractViolation("toy system is one-dimensional in q and z");
  Eigen::VectorXd g(1);
  g[0] = d1_ * std::cos(kTwoPi * z[0]) + 2.0 * d2_ * q[0];
  return g;
}

Eigen::VectorXd ToySystem::grad_z(const Eigen::VectorXd& q, const Eigen::VectorXd& z) const {
  if (q.size() != 1 || z.size() != 1) throw ContractViolation("toy system is one-dimensional in q and z");
  Eigen::VectorXd g(1);
  g[0] = -kTwoPi * std::sin(kTwoPi * z[0]) * (1.0 + d1_ * q[0]);
  return g;
}

double ToySystem::analytic_free_energy(double z, double z0) const {
  // Completing the square in q:
  //   V = d2 (q + d1 c / (2 d2))^2 + c - d1^2 c^2 / (4 d2),  c = cos(2 pi z),
  // so the q integral contributes only a z-independent Gaussian factor and
  //   A(z) = c - d1^2 c^2 / (4 d2)  up to a constant.
  const auto raw = [&](double zz) {
    const double c = std::cos(kTwoPi * zz);
    return c - d1_ * d1_ * c * c / (4.0 * d2_);
  };
  return raw(z) - raw(z0);
}

}  // namespace fekl
