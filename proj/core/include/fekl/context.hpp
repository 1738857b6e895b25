#pragma once

// Runtime dispatch between the two sampling flavors.  The optimizer, greedy
// selector and tempering sweeps only ever need three things from a system:
// a way to build the bias-interpolation bridge after a parameter update, a
// way to build the temperature bridge, and a way to create a fresh
// population.  Wrapping those behind one interface keeps the drivers
// agnostic of whether z is an alchemical coordinate sampled directly or the
// image of q under a reaction coordinate.

#include <cstdint>
#include <memory>
#include <utility>

#include "fekl/domain.hpp"
#include "fekl/kernel_model.hpp"
#include "fekl/parallel.hpp"
#include "fekl/smc/bridge.hpp"
#include "fekl/smc/engine.hpp"
#include "fekl/systems.hpp"

namespace fekl {

class SamplingContext {
 public:
  virtual ~SamplingContext() = default;

  virtual const Domain& domain() const = 0;
  virtual int dim_z() const = 0;

  // Bridge moving the bias from theta_from to theta_to at fixed beta.  The
  // model reference must outlive the returned bridge; only its kernel set is
  // read, so the caller may update model.theta() while the bridge is live.
  virtual std::unique_ptr<BridgeFamily> theta_bridge(const FreeEnergyModel& model,
                                                     Eigen::VectorXd theta_from,
                                                     Eigen::VectorXd theta_to,
                                                     double beta) const = 0;

  // Bridge moving the temperature at fixed bias.
  virtual std::unique_ptr<BridgeFamily> beta_bridge(const FreeEnergyModel& model,
                                                    double beta_from, double beta_to) const = 0;

  // Fresh equal-weight population approximating the unbiased restricted
  // target at the given temperature.
  virtual Population make_population(double beta, int n, std::uint64_t seed, int equil_sweeps,
                                     MalaSettings& mala, const WorkerPool& pool) const = 0;
};

class AlchemicalContext final : public SamplingContext {
 public:
  AlchemicalContext(std::shared_ptr<const AlchemicalSystem> sys, Domain dom)
      : sys_(std::move(sys)), dom_(std::move(dom)) {
    if (!sys_) throw ContractViolation("alchemical context requires a system");
    if (dom_.dim() != sys_->dim_z())
      throw ContractViolation("domain dimension does not match the system's z dimension");
  }

  const Domain& domain() const override { return dom_; }
  int dim_z() const override { return sys_->dim_z(); }
  const AlchemicalSystem& system() const { return *sys_; }

  std::unique_ptr<BridgeFamily> theta_bridge(const FreeEnergyModel& model,
                                             Eigen::VectorXd theta_from, Eigen::VectorXd theta_to,
                                             double beta) const override {
    return std::make_unique<AlchemicalThetaBridge>(*sys_, model, std::move(theta_from),
                                                   std::move(theta_to), dom_, beta);
  }

  std::unique_ptr<BridgeFamily> beta_bridge(const FreeEnergyModel& model, double beta_from,
                                            double beta_to) const override {
    return std::make_unique<AlchemicalBetaBridge>(*sys_, model, dom_, beta_from, beta_to);
  }

  Population make_population(double beta, int n, std::uint64_t seed, int equil_sweeps,
                             MalaSettings& mala, const WorkerPool& pool) const override {
    return initialize_population(*sys_, dom_, beta, n, seed, equil_sweeps, mala, pool);
  }

 private:
  std::shared_ptr<const AlchemicalSystem> sys_;
  Domain dom_;
};

class RcContext final : public SamplingContext {
 public:
  RcContext(std::shared_ptr<const ReactionCoordinateSystem> sys, Domain dom)
      : sys_(std::move(sys)), dom_(std::move(dom)) {
    if (!sys_) throw ContractViolation("reaction-coordinate context requires a system");
    if (dom_.dim() != sys_->dim_z())
      throw ContractViolation("domain dimension does not match the reaction-coordinate dimension");
  }

  const Domain& domain() const override { return dom_; }
  int dim_z() const override { return sys_->dim_z(); }
  const ReactionCoordinateSystem& system() const { return *sys_; }

  std::unique_ptr<BridgeFamily> theta_bridge(const FreeEnergyModel& model,
                                             Eigen::VectorXd theta_from, Eigen::VectorXd theta_to,
                                             double beta) const override {
    return std::make_unique<RcThetaBridge>(*sys_, model, std::move(theta_from),
                                           std::move(theta_to), dom_, beta);
  }

  std::unique_ptr<BridgeFamily> beta_bridge(const FreeEnergyModel& model, double beta_from,
                                            double beta_to) const override {
    return std::make_unique<RcBetaBridge>(*sys_, model, dom_, beta_from, beta_to);
  }

  Population make_population(double beta, int n, std::uint64_t seed, int equil_sweeps,
                             MalaSettings& mala, const WorkerPool& pool) const override {
    return initialize_population(*sys_, dom_, beta, n, seed, equil_sweeps, mala, pool);
  }

 private:
  std::shared_ptr<const ReactionCoordinateSystem> sys_;
  Domain dom_;
};

}  // namespace fekl
