#pragma once

// Sparse Gaussian expansion of a free-energy estimate.
//
// The model is  A_hat(z) = sum_j theta_j * K'_j(z)  with pinned kernels
// K'_j(z) = K_j(z) - K_j(z0), where K_j is an axis-aligned Gaussian bump
//   K_j(z) = exp(-sum_l tau_{j,l} (z_l - c_{j,l})^2)
// and z0 is a fixed anchor point.  Pinning removes the flat direction of the
// expansion (adding a constant to A_hat leaves every sampled density
// unchanged), so A_hat(z0) = 0 identically.

#include <Eigen/Core>
#include <vector>

#include "fekl/domain.hpp"

namespace fekl {

// One Gaussian bump: center c and per-axis inverse squared widths tau.
struct KernelUnit {
  Eigen::VectorXd center;
  Eigen::VectorXd tau;

  KernelUnit() = default;
  KernelUnit(Eigen::VectorXd c, Eigen::VectorXd t) : center(std::move(c)), tau(std::move(t)) {
    if (center.size() != tau.size())
      throw ContractViolation("kernel center and bandwidth have mismatched dimensions");
    if (center.size() == 0) throw ContractViolation("kernel must have at least one axis");
    for (Eigen::Index l = 0; l < tau.size(); ++l)
      if (!(tau[l] > 0.0)) throw ContractViolation("kernel bandwidths must be positive");
  }

  double eval(const Eigen::VectorXd& z) const {
    if (z.size() != center.size())
      throw ContractViolation("kernel evaluated at point of wrong dimension");
    double e = 0.0;
    for (Eigen::Index l = 0; l < z.size(); ++l) {
      const double d = z[l] - center[l];
      e += tau[l] * d * d;
    }
    return std::exp(-e);
  }

  // Gradient of the bump: dK/dz_l = -2 tau_l (z_l - c_l) K(z).
  Eigen::VectorXd grad(const Eigen::VectorXd& z) const {
    const double k = eval(z);
    Eigen::VectorXd g(z.size());
    for (Eigen::Index l = 0; l < z.size(); ++l)
      g[l] = -2.0 * tau[l] * (z[l] - center[l]) * k;
    return g;
  }

  // Mean of the (unpinned) bump under the uniform distribution on the box,
  // exact via the error function:
  //   (1/|D|) prod_l sqrt(pi/tau_l)/2 [erf(sqrt(tau_l)(b_l-c_l)) - erf(sqrt(tau_l)(a_l-c_l))]
  double uniform_mean(const Domain& dom) const;
};

class FreeEnergyModel {
 public:
  FreeEnergyModel() = default;
  FreeEnergyModel(double beta, Eigen::VectorXd anchor);

  double beta() const { return beta_; }
  void set_beta(double beta) {
    if (!(beta > 0.0)) throw ContractViolation("model temperature beta must be positive");
    beta_ = beta;
  }
  const Eigen::VectorXd& anchor() const { return anchor_; }
  int dim() const { return static_cast<int>(anchor_.size()); }

  int n_kernels() const { return static_cast<int>(kernels_.size()); }
  const KernelUnit& kernel(int j) const { return kernels_.at(j); }
  const std::vector<KernelUnit>& kernels() const { return kernels_; }
  const Eigen::VectorXd& theta() const { return theta_; }
  void set_theta(const Eigen::VectorXd& theta);

  // Append a bump with the given initial weight (usually zero: the model, and
  // hence every sampled density, is unchanged until the weight moves).
  void append_kernel(const KernelUnit& k, double theta0 = 0.0);

  // Remove kernels with |theta_j| <= ratio * max_i |theta_i|; returns the
  // indices (into the old basis) that were kept, in order.  With an all-zero
  // weight vector every kernel is removed.
  std::vector<int> prune(double ratio);

  // Pinned kernel value K'_j(z) = K_j(z) - K_j(z0); lies strictly in (-1, 1).
  double pinned_kernel(int j, const Eigen::VectorXd& z) const;

  // Vector of all pinned kernel values at z.
  Eigen::VectorXd pinned_values(const Eigen::VectorXd& z) const;

  // A_hat(z) with the model's own weights, or with an externally supplied
  // weight vector on the same basis (used by parameter-interpolation bridges).
  double value(const Eigen::VectorXd& z) const { return value_with(theta_, z); }
  double value_with(const Eigen::VectorXd& theta, const Eigen::VectorXd& z) const;

  // d A_hat / dz; the pinning constants carry no z dependence.
  Eigen::VectorXd grad_z(const Eigen::VectorXd& z) const { return grad_z_with(theta_, z); }
  Eigen::VectorXd grad_z_with(const Eigen::VectorXd& theta, const Eigen::VectorXd& z) const;

  // Value and gradient sharing one exponential per kernel.
  void value_and_grad(const Eigen::VectorXd& z, double& value, Eigen::VectorXd& grad) const {
    value_and_grad_with(theta_, z, value, grad);
  }
  void value_and_grad_with(const Eigen::VectorXd& theta, const Eigen::VectorXd& z, double& value,
                           Eigen::VectorXd& grad) const;

  // E_pi[K'_j] under the uniform distribution on dom (exact).
  double pinned_uniform_mean(int j, const Domain& dom) const;
  Eigen::VectorXd pinned_uniform_means(const Domain& dom) const;

  // E_pi[A_hat] under the uniform distribution on dom (exact).
  double uniform_mean(const Domain& dom) const;

 private:
  double beta_ = 1.0;
  Eigen::VectorXd anchor_;
  std::vector<KernelUnit> kernels_;
  Eigen::VectorXd theta_;
  // K_j(z0), maintained alongside the basis so pinning costs nothing extra.
  std::vector<double> anchor_values_;
};

}  // namespace fekl
