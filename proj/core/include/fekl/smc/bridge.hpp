#pragma once

// Annealing bridge families.
//
// A bridge is a curve of target densities pi_gamma, gamma in [0, 1],
// connecting the distribution the population currently represents (gamma = 0)
// to the one we want (gamma = 1).  The engine only needs three things from a
// family: log pi_gamma at a particle, the log-density increment between two
// gamma values (the incremental importance weight), and a Markov move that
// leaves pi_gamma invariant (one or more Metropolized-Gibbs MALA sweeps).
//
// All built-in families have log-densities linear in gamma, which the
// ESS-matching gamma search exploits.

#include <memory>

#include "fekl/domain.hpp"
#include "fekl/kernel_model.hpp"
#include "fekl/smc/mala.hpp"
#include "fekl/smc/particle.hpp"
#include "fekl/systems.hpp"

namespace fekl {

struct SweepStats {
  long q_proposals = 0;
  long q_accepts = 0;
  long z_proposals = 0;
  long z_accepts = 0;

  void merge(const SweepStats& o) {
    q_proposals += o.q_proposals;
    q_accepts += o.q_accepts;
    z_proposals += o.z_proposals;
    z_accepts += o.z_accepts;
  }
};

class BridgeFamily {
 public:
  virtual ~BridgeFamily() = default;

  virtual double log_density(const Particle& p, double gamma) const = 0;

  // Incremental log-weight moving a particle's target from g_from to g_to.
  virtual double log_density_delta(const Particle& p, double g_from, double g_to) const {
    return log_density(p, g_to) - log_density(p, g_from);
  }

  // Whether log pi_gamma(x) is affine in gamma for fixed x.
  virtual bool linear_in_gamma() const { return false; }

  // Called once per bridge step before rejuvenation; lets the family
  // materialize per-gamma state (interpolated weights) outside the
  // particle-parallel region.
  virtual void begin_step(double gamma) { (void)gamma; }

  // Apply settings.n_sweeps invariant sweeps at pi_gamma to one particle.
  virtual SweepStats rejuvenate(Particle& p, double gamma, const MalaSettings& settings,
                                RngStream& rng) const = 0;
};

// ---------------------------------------------------------------------------
// Bias-interpolation bridge for alchemical systems: beta fixed, the kernel
// weights move along theta_gamma = (1 - gamma) theta_from + gamma theta_to.
// The increment is +beta * A_hat(z; (g_to - g_from) (theta_to - theta_from)).
class AlchemicalThetaBridge final : public BridgeFamily {
 public:
  AlchemicalThetaBridge(const AlchemicalSystem& sys, const FreeEnergyModel& model,
                        Eigen::VectorXd theta_from, Eigen::VectorXd theta_to, const Domain& dom,
                        double beta);

  double log_density(const Particle& p, double gamma) const override;
  double log_density_delta(const Particle& p, double g_from, double g_to) const override;
  bool linear_in_gamma() const override { return true; }
  void begin_step(double gamma) override;
  SweepStats rejuvenate(Particle& p, double gamma, const MalaSettings& settings,
                        RngStream& rng) const override;

 private:
  Eigen::VectorXd theta_at(double gamma) const {
    return (1.0 - gamma) * theta_from_ + gamma * theta_to_;
  }

  const AlchemicalSystem& sys_;
  const FreeEnergyModel& model_;
  Eigen::VectorXd theta_from_, theta_to_, dtheta_;
  const Domain dom_;
  double beta_;
  Eigen::VectorXd theta_step_;  // materialized by begin_step
};

// Same bias-interpolation bridge for reaction-coordinate systems; only q is
// sampled and the particle's z field caches xi(q).
class RcThetaBridge final : public BridgeFamily {
 public:
  RcThetaBridge(const ReactionCoordinateSystem& sys, const FreeEnergyModel& model,
                Eigen::VectorXd theta_from, Eigen::VectorXd theta_to, const Domain& dom,
                double beta);

  double log_density(const Particle& p, double gamma) const override;
  double log_density_delta(const Particle& p, double g_from, double g_to) const override;
  bool linear_in_gamma() const override { return true; }
  void begin_step(double gamma) override;
  SweepStats rejuvenate(Particle& p, double gamma, const MalaSettings& settings,
                        RngStream& rng) const override;

 private:
  const ReactionCoordinateSystem& sys_;
  const FreeEnergyModel& model_;
  Eigen::VectorXd theta_from_, theta_to_, dtheta_;
  const Domain dom_;
  double beta_;
  Eigen::VectorXd theta_step_;
};

// ---------------------------------------------------------------------------
// Temperature bridge: the bias is fixed and beta_gamma = (1-gamma) beta_from
// + gamma beta_to.  Increment: -(g_to - g_from)(beta_to - beta_from)(V - A_hat).
class AlchemicalBetaBridge final : public BridgeFamily {
 public:
  AlchemicalBetaBridge(const AlchemicalSystem& sys, const FreeEnergyModel& model,
                       const Domain& dom, double beta_from, double beta_to);

  double log_density(const Particle& p, double gamma) const override;
  double log_density_delta(const Particle& p, double g_from, double g_to) const override;
  bool linear_in_gamma() const override { return true; }
  SweepStats rejuvenate(Particle& p, double gamma, const MalaSettings& settings,
                        RngStream& rng) const override;

  double beta_at(double gamma) const { return (1.0 - gamma) * beta_from_ + gamma * beta_to_; }

 private:
  const AlchemicalSystem& sys_;
  const FreeEnergyModel& model_;
  const Domain dom_;
  double beta_from_, beta_to_;
};

class RcBetaBridge final : public BridgeFamily {
 public:
  RcBetaBridge(const ReactionCoordinateSystem& sys, const FreeEnergyModel& model,
               const Domain& dom, double beta_from, double beta_to);

  double log_density(const Particle& p, double gamma) const override;
  double log_density_delta(const Particle& p, double g_from, double g_to) const override;
  bool linear_in_gamma() const override { return true; }
  SweepStats rejuvenate(Particle& p, double gamma, const MalaSettings& settings,
                        RngStream& rng) const override;

  double beta_at(double gamma) const { return (1.0 - gamma) * beta_from_ + gamma * beta_to_; }

 private:
  const ReactionCoordinateSystem& sys_;
  const FreeEnergyModel& model_;
  const Domain dom_;
  double beta_from_, beta_to_;
};

// ---------------------------------------------------------------------------
// Spring-stiffness bridge for spring-extended systems: beta and the bias are
// fixed while mu_gamma = (1-gamma) mu_from + gamma mu_to tightens the tether.
// Increment: -beta (g_to - g_from)(mu_to - mu_from) |z - xi(q)|^2 / 2.
class SpringMuBridge final : public BridgeFamily {
 public:
  SpringMuBridge(const ReactionCoordinateSystem& inner, const FreeEnergyModel& model,
                 const Domain& dom, double beta, double mu_from, double mu_to);

  double log_density(const Particle& p, double gamma) const override;
  double log_density_delta(const Particle& p, double g_from, double g_to) const override;
  bool linear_in_gamma() const override { return true; }
  SweepStats rejuvenate(Particle& p, double gamma, const MalaSettings& settings,
                        RngStream& rng) const override;

  double mu_at(double gamma) const { return (1.0 - gamma) * mu_from_ + gamma * mu_to_; }

 private:
  const ReactionCoordinateSystem& inner_;
  const FreeEnergyModel& model_;
  const Domain dom_;
  double beta_;
  double mu_from_, mu_to_;
};

}  // namespace fekl
