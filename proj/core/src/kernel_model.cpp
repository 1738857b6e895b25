#include "fekl/kernel_model.hpp"

#include <cmath>

namespace fekl {

namespace {
constexpr double kSqrtPi = 1.7724538509055160273;
}

double KernelUnit::uniform_mean(const Domain& dom) const {
  if (dom.dim() != center.size())
    throw ContractViolation("kernel and domain have mismatched dimensions");
  double m = 1.0;
  for (Eigen::Index l = 0; l < center.size(); ++l) {
    const double st = std::sqrt(tau[l]);
    const double width = dom.upper[l] - dom.lower[l];
    const double hi = std::erf(st * (dom.upper[l] - center[l]));
    const double lo = std::erf(st * (dom.lower[l] - center[l]));
    m *= kSqrtPi / (2.0 * st * width) * (hi - lo);
  }
  return m;
}

FreeEnergyModel::FreeEnergyModel(double beta, Eigen::VectorXd anchor)
    : beta_(beta), anchor_(std::move(anchor)) {
  if (!(beta_ > 0.0)) throw ContractViolation("model temperature beta must be positive");
  if (anchor_.size() == 0) throw ContractViolation("model anchor must have at least one axis");
  theta_.resize(0);
}

void FreeEnergyModel::set_theta(const Eigen::VectorXd& theta) {
  if (theta.size() != static_cast<Eigen::Index>(kernels_.size()))
    throw ContractViolation("weight vector length does not match kernel count");
  if (!theta.allFinite()) throw ContractViolation("weight vector must be finite");
  theta_ = theta;
}

void FreeEnergyModel::append_kernel(const KernelUnit& k, double theta0) {
  if (k.center.size() != anchor_.size())
    throw ContractViolation("kernel dimension does not match model anchor");
  kernels_.push_back(k);
  anchor_values_.push_back(k.eval(anchor_));
  theta_.conservativeResize(theta_.size() + 1);
  theta_[theta_.size() - 1] = theta0;
}

std::vector<int> FreeEnergyModel::prune(double ratio) {
  std::vector<int> kept;
  const double max_abs = theta_.size() > 0 ? theta_.cwiseAbs().maxCoeff() : 0.0;
  std::vector<KernelUnit> new_kernels;
  std::vector<double> new_anchor_values;
  std::vector<double> new_theta;
  for (int j = 0; j < n_kernels(); ++j) {
    // Removal condition |theta_j| <= ratio * max; with max == 0 all go.
    if (max_abs == 0.0 || std::abs(theta_[j]) <= ratio * max_abs) continue;
    kept.push_back(j);
    new_kernels.push_back(kernels_[j]);
    new_anchor_values.push_back(anchor_values_[j]);
    new_theta.push_back(theta_[j]);
  }
  kernels_ = std::move(new_kernels);
  anchor_values_ = std::move(new_anchor_values);
  theta_ = Eigen::Map<Eigen::VectorXd>(new_theta.data(), static_cast<Eigen::Index>(new_theta.size()));
  return kept;
}

double FreeEnergyModel::pinned_kernel(int j, const Eigen::VectorXd& z) const {
  if (j < 0 || j >= n_kernels()) throw ContractViolation("kernel index out of range");
  return kernels_[j].eval(z) - anchor_values_[j];
}

Eigen::VectorXd FreeEnergyModel::pinned_values(const Eigen::VectorXd& z) const {
  Eigen::VectorXd v(n_kernels());
  for (int j = 0; j < n_kernels(); ++j) v[j] = kernels_[j].eval(z) - anchor_values_[j];
  return v;
}

double FreeEnergyModel::value_with(const Eigen::VectorXd& theta, const Eigen::VectorXd& z) const {
  if (theta.size() != static_cast<Eigen::Index>(kernels_.size()))
    throw ContractViolation("weight vector length does not match kernel count");
  double a = 0.0;
  for (int j = 0; j < n_kernels(); ++j)
    a += theta[j] * (kernels_[j].eval(z) - anchor_values_[j]);
  return a;
}

Eigen::VectorXd FreeEnergyModel::grad_z_with(const Eigen::VectorXd& theta,
                                             const Eigen::VectorXd& z) const {
  if (theta.size() != static_cast<Eigen::Index>(kernels_.size()))
    throw ContractViolation("weight vector length does not match kernel count");
  Eigen::VectorXd g = Eigen::VectorXd::Zero(z.size());
  for (int j = 0; j < n_kernels(); ++j) {
    const KernelUnit& k = kernels_[j];
    const double kv = k.eval(z);
    for (Eigen::Index l = 0; l < z.size(); ++l)
      g[l] += theta[j] * -2.0 * k.tau[l] * (z[l] - k.center[l]) * kv;
  }
  return g;
}

void FreeEnergyModel::value_and_grad_with(const Eigen::VectorXd& theta, const Eigen::VectorXd& z,
                                          double& value, Eigen::VectorXd& grad) const {
  if (theta.size() != static_cast<Eigen::Index>(kernels_.size()))
    throw ContractViolation("weight vector length does not match kernel count");
  value = 0.0;
  grad = Eigen::VectorXd::Zero(z.size());
  for (int j = 0; j < n_kernels(); ++j) {
    const KernelUnit& k = kernels_[j];
    const double kv = k.eval(z);
    value += theta[j] * (kv - anchor_values_[j]);
    for (Eigen::Index l = 0; l < z.size(); ++l)
      grad[l] += theta[j] * -2.0 * k.tau[l] * (z[l] - k.center[l]) * kv;
  }
}

double FreeEnergyModel::pinned_uniform_mean(int j, const Domain& dom) const {
  if (j < 0 || j >= n_kernels()) throw ContractViolation("kernel index out of range");
  return kernels_[j].uniform_mean(dom) - anchor_values_[j];
}

Eigen::VectorXd FreeEnergyModel::pinned_uniform_means(const Domain& dom) const {
  Eigen::VectorXd v(n_kernels());
  for (int j = 0; j < n_kernels(); ++j) v[j] = pinned_uniform_mean(j, dom);
  return v;
}

double FreeEnergyModel::uniform_mean(const Domain& dom) const {
  double m = 0.0;
  for (int j = 0; j < n_kernels(); ++j) m += theta_[j] * pinned_uniform_mean(j, dom);
  return m;
}

}  // namespace fekl
