#include <cmath>
#include <limits>

#include "fekl/smc/bridge.hpp"
#include "fekl/smc/engine.hpp"

namespace fekl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// log pi(q | z) up to the z-only terms: -beta V(q, z).
struct AlchemicalQTarget {
  const AlchemicalSystem* sys;
  const Eigen::VectorXd* z;
  double beta;

  void eval(const Eigen::VectorXd& q, double& log_pi, Eigen::VectorXd& grad) const {
    const double v = sys->energy(q, *z);
    if (!std::isfinite(v)) {
      log_pi = -kInf;
      return;
    }
    log_pi = -beta * v;
    grad = -beta * sys->grad_q(q, *z);
  }
};

// log pi(z | q) = -beta (V(q, z) - A_hat(z)) restricted to the box.
struct AlchemicalZTarget {
  const AlchemicalSystem* sys;
  const Eigen::VectorXd* q;
  double beta;
  const FreeEnergyModel* model;
  const Eigen::VectorXd* theta;
  const Domain* dom;

  void eval(const Eigen::VectorXd& z, double& log_pi, Eigen::VectorXd& grad) const {
    if (!dom->contains(z)) {
      log_pi = -kInf;
      return;
    }
    const double v = sys->energy(*q, z);
    if (!std::isfinite(v)) {
      log_pi = -kInf;
      return;
    }
    double ahat;
    Eigen::VectorXd agrad;
    model->value_and_grad_with(*theta, z, ahat, agrad);
    log_pi = -beta * (v - ahat);
    grad = -beta * (sys->grad_z(*q, z) - agrad);
  }
};

// log pi(q) = -beta (V(q) - A_hat(xi(q))) with the box indicator on xi(q).
// Stashes the xi of the last evaluated point so accepted moves can refresh
// the particle's cached collective variable without a second system call.
struct RcTarget {
  const ReactionCoordinateSystem* sys;
  double beta;
  const FreeEnergyModel* model;
  const Eigen::VectorXd* theta;
  const Domain* dom;
  mutable Eigen::VectorXd last_xi;

  void eval(const Eigen::VectorXd& q, double& log_pi, Eigen::VectorXd& grad) const {
    const RcEvaluation ev = sys->evaluate(q);
    last_xi = ev.xi;
    if (!dom->contains(ev.xi) || !std::isfinite(ev.energy)) {
      log_pi = -kInf;
      return;
    }
    double ahat;
    Eigen::VectorXd agrad;
    model->value_and_grad_with(*theta, ev.xi, ahat, agrad);
    log_pi = -beta * (ev.energy - ahat);
    grad = -beta * (ev.grad_q - ev.xi_jacobian.transpose() * agrad);
  }
};

// One Metropolized-Gibbs pass (q half-step, then z half-step) repeated
// settings.n_sweeps times for an alchemical system at fixed effective beta
// and fixed interpolated weights.
SweepStats alchemical_sweeps(Particle& p, const AlchemicalSystem& sys,
                             const FreeEnergyModel& model, const Eigen::VectorXd& theta_gamma,
                             const Domain& dom, double beta_eff, const MalaSettings& settings,
                             RngStream& rng) {
  SweepStats stats;
  const AlchemicalQTarget qt{&sys, &p.z, beta_eff};
  const AlchemicalZTarget zt{&sys, &p.q, beta_eff, &model, &theta_gamma, &dom};
  for (int sweep = 0; sweep < settings.n_sweeps; ++sweep) {
    MalaState sq;
    sq.x = p.q;
    qt.eval(sq.x, sq.log_pi, sq.grad);
    if (!std::isfinite(sq.log_pi))
      throw DegeneratePopulation("particle configuration has non-finite energy");
    stats.q_proposals += 1;
    if (mala_step(sq, qt, settings.dt_q, rng)) {
      stats.q_accepts += 1;
      p.q = sq.x;
    }

    MalaState sz;
    sz.x = p.z;
    zt.eval(sz.x, sz.log_pi, sz.grad);
    if (!std::isfinite(sz.log_pi))
      throw DegeneratePopulation("particle collective variable left the domain");
    stats.z_proposals += 1;
    if (mala_step(sz, zt, settings.dt_z, rng)) {
      stats.z_accepts += 1;
      p.z = sz.x;
    }
  }
  return stats;
}

// n_sweeps MALA steps on q for a reaction-coordinate system; the target is
// evaluated once per proposal thanks to the cached chain state.
SweepStats rc_sweeps(Particle& p, const ReactionCoordinateSystem& sys,
                     const FreeEnergyModel& model, const Eigen::VectorXd& theta_gamma,
                     const Domain& dom, double beta_eff, const MalaSettings& settings,
                     RngStream& rng) {
  SweepStats stats;
  const RcTarget t{&sys, beta_eff, &model, &theta_gamma, &dom, {}};
  MalaState s;
  s.x = p.q;
  t.eval(s.x, s.log_pi, s.grad);
  if (!std::isfinite(s.log_pi))
    throw DegeneratePopulation("particle left the collective-variable domain");
  Eigen::VectorXd xi_cur = t.last_xi;
  for (int sweep = 0; sweep < settings.n_sweeps; ++sweep) {
    stats.q_proposals += 1;
    if (mala_step(s, t, settings.dt_q, rng)) {
      stats.q_accepts += 1;
      xi_cur = t.last_xi;
    }
  }
  p.q = s.x;
  p.z = xi_cur;
  return stats;
}

}  // namespace

// --------------------------------------------------------------------------
AlchemicalThetaBridge::AlchemicalThetaBridge(const AlchemicalSystem& sys,
                                             const FreeEnergyModel& model,
                                             Eigen::VectorXd theta_from, Eigen::VectorXd theta_to,
                                             const Domain& dom, double beta)
    : sys_(sys),
      model_(model),
      theta_from_(std::move(theta_from)),
      theta_to_(std::move(theta_to)),
      dom_(dom),
      beta_(beta) {
  if (theta_from_.size() != model_.n_kernels() || theta_to_.size() != model_.n_kernels())
    throw ContractViolation("bridge weight vectors do not match the kernel basis");
  if (!(beta_ > 0.0)) throw ContractViolation("bridge temperature beta must be positive");
  dtheta_ = theta_to_ - theta_from_;
}

double AlchemicalThetaBridge::log_density(const Particle& p, double gamma) const {
  if (!dom_.contains(p.z)) return -kInf;
  const double v = sys_.energy(p.q, p.z);
  if (!std::isfinite(v)) return -kInf;
  return -beta_ * (v - model_.value_with(theta_at(gamma), p.z));
}

double AlchemicalThetaBridge::log_density_delta(const Particle& p, double g_from,
                                                double g_to) const {
  // + beta * A_hat(z; (g_to - g_from) dtheta): the energy term cancels.
  return beta_ * (g_to - g_from) * model_.value_with(dtheta_, p.z);
}

void AlchemicalThetaBridge::begin_step(double gamma) { theta_step_ = theta_at(gamma); }

SweepStats AlchemicalThetaBridge::rejuvenate(Particle& p, double gamma,
                                             const MalaSettings& settings, RngStream& rng) const {
  if (theta_step_.size() == model_.n_kernels())
    return alchemical_sweeps(p, sys_, model_, theta_step_, dom_, beta_, settings, rng);
  return alchemical_sweeps(p, sys_, model_, theta_at(gamma), dom_, beta_, settings, rng);
}

// --------------------------------------------------------------------------
RcThetaBridge::RcThetaBridge(const ReactionCoordinateSystem& sys, const FreeEnergyModel& model,
                             Eigen::VectorXd theta_from, Eigen::VectorXd theta_to,
                             const Domain& dom, double beta)
    : sys_(sys),
      model_(model),
      theta_from_(std::move(theta_from)),
      theta_to_(std::move(theta_to)),
      dom_(dom),
      beta_(beta) {
  if (theta_from_.size() != model_.n_kernels() || theta_to_.size() != model_.n_kernels())
    throw ContractViolation("bridge weight vectors do not match the kernel basis");
  if (!(beta_ > 0.0)) throw ContractViolation("bridge temperature beta must be positive");
  dtheta_ = theta_to_ - theta_from_;
}

double RcThetaBridge::log_density(const Particle& p, double gamma) const {
  if (!dom_.contains(p.z)) return -kInf;
  const double v = sys_.energy(p.q);
  if (!std::isfinite(v)) return -kInf;
  return -beta_ * (v - model_.value_with((1.0 - gamma) * theta_from_ + gamma * theta_to_, p.z));
}

double RcThetaBridge::log_density_delta(const Particle& p, double g_from, double g_to) const {
  return beta_ * (g_to - g_from) * model_.value_with(dtheta_, p.z);
}

void RcThetaBridge::begin_step(double gamma) {
  theta_step_ = (1.0 - gamma) * theta_from_ + gamma * theta_to_;
}

SweepStats RcThetaBridge::rejuvenate(Particle& p, double gamma, const MalaSettings& settings,
                                     RngStream& rng) const {
  if (theta_step_.size() == model_.n_kernels())
    return rc_sweeps(p, sys_, model_, theta_step_, dom_, beta_, settings, rng);
  return rc_sweeps(p, sys_, model_, (1.0 - gamma) * theta_from_ + gamma * theta_to_, dom_, beta_,
                   settings, rng);
}

// --------------------------------------------------------------------------
AlchemicalBetaBridge::AlchemicalBetaBridge(const AlchemicalSystem& sys,
                                           const FreeEnergyModel& model, const Domain& dom,
                                           double beta_from, double beta_to)
    : sys_(sys), model_(model), dom_(dom), beta_from_(beta_from), beta_to_(beta_to) {
  if (!(beta_from_ > 0.0) || !(beta_to_ > 0.0))
    throw ContractViolation("bridge temperatures must be positive");
}

double AlchemicalBetaBridge::log_density(const Particle& p, double gamma) const {
  if (!dom_.contains(p.z)) return -kInf;
  const double v = sys_.energy(p.q, p.z);
  if (!std::isfinite(v)) return -kInf;
  return -beta_at(gamma) * (v - model_.value(p.z));
}

double AlchemicalBetaBridge::log_density_delta(const Particle& p, double g_from,
                                               double g_to) const {
  if (!dom_.contains(p.z)) return -kInf;
  const double v = sys_.energy(p.q, p.z);
  if (!std::isfinite(v)) return -kInf;
  return -(g_to - g_from) * (beta_to_ - beta_from_) * (v - model_.value(p.z));
}

SweepStats AlchemicalBetaBridge::rejuvenate(Particle& p, double gamma,
                                            const MalaSettings& settings, RngStream& rng) const {
  return alchemical_sweeps(p, sys_, model_, model_.theta(), dom_, beta_at(gamma), settings, rng);
}

// --------------------------------------------------------------------------
RcBetaBridge::RcBetaBridge(const ReactionCoordinateSystem& sys, const FreeEnergyModel& model,
                           const Domain& dom, double beta_from, double beta_to)
    : sys_(sys), model_(model), dom_(dom), beta_from_(beta_from), beta_to_(beta_to) {
  if (!(beta_from_ > 0.0) || !(beta_to_ > 0.0))
    throw ContractViolation("bridge temperatures must be positive");
}

double RcBetaBridge::log_density(const Particle& p, double gamma) const {
  if (!dom_.contains(p.z)) return -kInf;
  const double v = sys_.energy(p.q);
  if (!std::isfinite(v)) return -kInf;
  return -beta_at(gamma) * (v - model_.value(p.z));
}

double RcBetaBridge::log_density_delta(const Particle& p, double g_from, double g_to) const {
  if (!dom_.contains(p.z)) return -kInf;
  const double v = sys_.energy(p.q);
  if (!std::isfinite(v)) return -kInf;
  return -(g_to - g_from) * (beta_to_ - beta_from_) * (v - model_.value(p.z));
}

SweepStats RcBetaBridge::rejuvenate(Particle& p, double gamma, const MalaSettings& settings,
                                    RngStream& rng) const {
  return rc_sweeps(p, sys_, model_, model_.theta(), dom_, beta_at(gamma), settings, rng);
}

// --------------------------------------------------------------------------
SpringMuBridge::SpringMuBridge(const ReactionCoordinateSystem& inner, const FreeEnergyModel& model,
                               const Domain& dom, double beta, double mu_from, double mu_to)
    : inner_(inner), model_(model), dom_(dom), beta_(beta), mu_from_(mu_from), mu_to_(mu_to) {
  if (!(beta_ > 0.0)) throw ContractViolation("bridge temperature beta must be positive");
  if (!(mu_from_ >= 0.0) || !(mu_to_ >= 0.0))
    throw ContractViolation("spring stiffness must stay non-negative along the bridge");
}

double SpringMuBridge::log_density(const Particle& p, double gamma) const {
  if (!dom_.contains(p.z)) return -kInf;
  const double v = inner_.energy(p.q);
  if (!std::isfinite(v)) return -kInf;
  const double d2 = (p.z - inner_.xi(p.q)).squaredNorm();
  return -beta_ * (v + 0.5 * mu_at(gamma) * d2 - model_.value(p.z));
}

double SpringMuBridge::log_density_delta(const Particle& p, double g_from, double g_to) const {
  const double d2 = (p.z - inner_.xi(p.q)).squaredNorm();
  return -beta_ * (g_to - g_from) * (mu_to_ - mu_from_) * 0.5 * d2;
}

SweepStats SpringMuBridge::rejuvenate(Particle& p, double gamma, const MalaSettings& settings,
                                      RngStream& rng) const {
  const SpringExtendedSystem sys(
      std::shared_ptr<const ReactionCoordinateSystem>(&inner_, [](const void*) {}), mu_at(gamma));
  return alchemical_sweeps(p, sys, model_, model_.theta(), dom_, beta_, settings, rng);
}

// --------------------------------------------------------------------------
Population initialize_population(const AlchemicalSystem& sys, const Domain& dom, double beta,
                                 int n, std::uint64_t seed, int equil_sweeps, MalaSettings& mala,
                                 const WorkerPool& pool) {
  if (dom.dim() != sys.dim_z())
    throw ContractViolation("domain dimension does not match the system's collective variable");
  Population pop = Population::create(n, seed);
  const Eigen::VectorXd q0 = sys.initial_q();
  for (int i = 0; i < n; ++i) {
    Particle& p = pop.particles[i];
    p.q = q0;
    p.z.resize(dom.dim());
    for (int l = 0; l < dom.dim(); ++l)
      p.z[l] = dom.lower[l] + pop.streams[i].uniform() * (dom.upper[l] - dom.lower[l]);
  }
  // Settle q into pi(q | z) at the unbiased target; z keeps its uniform draw.
  for (int sweep = 0; sweep < equil_sweeps; ++sweep) {
    std::vector<long> accepts(n, 0);
    const double dt = mala.dt_q;
    pool.parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
      Particle& p = pop.particles[i];
      const AlchemicalQTarget qt{&sys, &p.z, beta};
      MalaState s;
      s.x = p.q;
      qt.eval(s.x, s.log_pi, s.grad);
      if (!std::isfinite(s.log_pi))
        throw DegeneratePopulation("initial configuration has non-finite energy");
      if (mala_step(s, qt, dt, pop.streams[i])) {
        accepts[i] = 1;
        p.q = s.x;
      }
    });
    long total = 0;
    for (long a : accepts) total += a;
    mala.dt_q = adapt_step_size(mala.dt_q, static_cast<double>(total) / n, mala.target_low,
                                mala.target_high);
  }
  return pop;
}

Population initialize_population(const ReactionCoordinateSystem& sys, const Domain& dom,
                                 double beta, int n, std::uint64_t seed, int equil_sweeps,
                                 MalaSettings& mala, const WorkerPool& pool) {
  if (dom.dim() != sys.dim_z())
    throw ContractViolation("domain dimension does not match the system's reaction coordinate");
  const Eigen::VectorXd q0 = sys.initial_q();
  const Eigen::VectorXd xi0 = sys.xi(q0);
  if (!dom.contains(xi0))
    throw DegeneratePopulation("initial configuration lies outside the collective-variable domain");

  Population pop = Population::create(n, seed);
  FreeEnergyModel empty(beta, dom.lower);  // zero bias during equilibration
  for (int i = 0; i < n; ++i) {
    pop.particles[i].q = q0;
    pop.particles[i].z = xi0;
  }
  for (int sweep = 0; sweep < equil_sweeps; ++sweep) {
    std::vector<long> accepts(n, 0);
    const double dt = mala.dt_q;
    pool.parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
      Particle& p = pop.particles[i];
      const RcTarget t{&sys, beta, &empty, &empty.theta(), &dom, {}};
      MalaState s;
      s.x = p.q;
      t.eval(s.x, s.log_pi, s.grad);
      if (!std::isfinite(s.log_pi))
        throw DegeneratePopulation("initial configuration has non-finite density");
      if (mala_step(s, t, dt, pop.streams[i])) {
        accepts[i] = 1;
        p.q = s.x;
        p.z = t.last_xi;
      }
    });
    long total = 0;
    for (long a : accepts) total += a;
    mala.dt_q = adapt_step_size(mala.dt_q, static_cast<double>(total) / n, mala.target_low,
                                mala.target_high);
  }
  return pop;
}

}  // namespace fekl
