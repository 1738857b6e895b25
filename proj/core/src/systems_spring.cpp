#include "fekl/systems.hpp"

namespace fekl {

SpringExtendedSystem::SpringExtendedSystem(std::shared_ptr<const ReactionCoordinateSystem> inner,
                                           double mu)
    : inner_(std::move(inner)), mu_(mu) {
  if (!inner_) throw ContractViolation("spring extension needs an inner system");
  // mu = 0 is the untethered limit (z feels no spring force) and is a valid
  // starting point for stiffness continuation; only negative mu is rejected.
  if (!(mu_ >= 0.0)) throw ContractViolation("spring stiffness mu must be non-negative");
}

double SpringExtendedSystem::energy(const Eigen::VectorXd& q, const Eigen::VectorXd& z) const {
  if (z.size() != inner_->dim_z()) throw ContractViolation("spring extension: z has wrong dimension");
  const Eigen::VectorXd d = z - inner_->xi(q);
  return inner_->energy(q) + 0.5 * mu_ * d.squaredNorm();
}

Eigen::VectorXd SpringExtendedSystem::grad_q(const Eigen::VectorXd& q,
                                             const Eigen::VectorXd& z) const {
  if (z.size() != inner_->dim_z()) throw ContractViolation("spring extension: z has wrong dimension");
  const RcEvaluation ev = inner_->evaluate(q);
  // d/dq (mu/2)|z - xi(q)|^2 = -mu J_xi^T (z - xi).
  return ev.grad_q - mu_ * ev.xi_jacobian.transpose() * (z - ev.xi);
}

Eigen::VectorXd SpringExtendedSystem::grad_z(const Eigen::VectorXd& q,
                                             const Eigen::VectorXd& z) const {
  if (z.size() != inner_->dim_z()) throw ContractViolation("spring extension: z has wrong dimension");
  return mu_ * (z - inner_->xi(q));
}

}  // namespace fekl
