#include "fekl/optimizer.hpp"

#include <cmath>
#include <sstream>

#include "fekl/common.hpp"

namespace fekl {

void OptimizerSettings::validate() const {
  if (!(lambda0 > 0.0)) throw ConfigError("optimizer: lambda must be positive");
  if (!(eta > 0.0) || eta > 1.0) throw ConfigError("optimizer: eta must lie in (0, 1]");
  if (!(p > 0.5) || p > 1.0) throw ConfigError("optimizer: averaging exponent p must lie in (0.5, 1]");
  if (!(tol_g > 0.0)) throw ConfigError("optimizer: tol_g must be positive");
  if (w_conv < 1) throw ConfigError("optimizer: w_conv must be at least 1");
  if (max_iter < 1) throw ConfigError("optimizer: max_iter must be at least 1");
}

Eigen::VectorXd estimate_gradient(const FreeEnergyModel& model, const Population& pop,
                                  const Domain& dom) {
  const int k = model.n_kernels();
  if (k == 0) return Eigen::VectorXd();

  const Eigen::VectorXd reference = model.pinned_uniform_means(dom);
  const std::vector<double> weights = pop.normalized_weights();

  Eigen::VectorXd empirical = Eigen::VectorXd::Zero(k);
  for (int i = 0; i < pop.size(); ++i) {
    if (weights[i] == 0.0) continue;
    empirical += weights[i] * model.pinned_values(pop.particles[i].z);
  }
  return -model.beta() * (reference - empirical);
}

double averaging_gain(double eta, double p, int m) {
  if (m < 1) throw ContractViolation("averaging_gain: iteration index must be >= 1");
  return eta * std::pow(static_cast<double>(m), -p);
}

Eigen::MatrixXd hessian_estimate(const FreeEnergyModel& model, const Population& pop) {
  const int k = model.n_kernels();
  if (k == 0) return Eigen::MatrixXd();

  const std::vector<double> weights = pop.normalized_weights();

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(k);
  std::vector<Eigen::VectorXd> values(pop.size());
  for (int i = 0; i < pop.size(); ++i) {
    values[i] = model.pinned_values(pop.particles[i].z);
    mean += weights[i] * values[i];
  }

  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(k, k);
  for (int i = 0; i < pop.size(); ++i) {
    if (weights[i] == 0.0) continue;
    const Eigen::VectorXd d = values[i] - mean;
    cov.noalias() += weights[i] * (d * d.transpose());
  }
  return (model.beta() * model.beta()) * cov;
}

DescentOutcome descent_loop(FreeEnergyModel& model, const SamplingContext& ctx, Population& pop,
                            OptimizerState& state, const OptimizerSettings& opt,
                            const SmcSettings& smc, MalaSettings& mala, const WorkerPool& pool,
                            int max_iter_override) {
  const int k = model.n_kernels();
  if (k == 0) throw ContractViolation("descent_loop: model has no kernels");
  if (state.has_jbar && state.jbar.size() != k)
    throw ContractViolation("descent_loop: carried gradient average does not match the basis size");

  const double beta = model.beta();
  const double lambda = opt.effective_lambda(beta);
  const int max_iter = max_iter_override >= 0 ? max_iter_override : opt.max_iter;

  DescentOutcome out;
  int consecutive = 0;

  for (int m = 1; m <= max_iter; ++m) {
    const Eigen::VectorXd jhat = estimate_gradient(model, pop, ctx.domain());

    // First-ever iteration seeds the average with the raw estimate; from
    // then on the gain decays as eta * m^{-p} with m local to this call.
    double eta_m;
    if (!state.has_jbar) {
      eta_m = 1.0;
      state.jbar = jhat;
      state.has_jbar = true;
    } else {
      eta_m = averaging_gain(opt.eta, opt.p, m);
      state.jbar = (1.0 - eta_m) * state.jbar + eta_m * jhat;
    }

    const Eigen::VectorXd theta_old = model.theta();
    const Eigen::VectorXd theta_new = theta_old - lambda * state.jbar;
    if (!theta_new.allFinite()) {
      std::ostringstream msg;
      msg << "descent diverged at iteration " << m
          << ": non-finite coefficient after the update; retry with a smaller step size lambda";
      throw DivergenceError(msg.str());
    }

    auto bridge = ctx.theta_bridge(model, theta_old, theta_new, beta);
    model.set_theta(theta_new);
    const BridgeResult moved = run_bridge(pop, *bridge, smc, mala, pool);

    DescentTraceRow row;
    row.iteration = m;
    row.grad_inf = state.jbar.lpNorm<Eigen::Infinity>();
    row.lambda = lambda;
    row.eta_m = eta_m;
    row.ess = effective_sample_size(pop.normalized_weights());
    row.log_z_accum = pop.log_z_accum;
    row.bridge_steps = moved.n_steps;
    for (const BridgeStepRecord& rec : moved.steps) {
      row.resamples += rec.resampled;
      row.acc_q += rec.acc_q;
      row.acc_z += rec.acc_z;
    }
    if (moved.n_steps > 0) {
      row.acc_q /= moved.n_steps;
      row.acc_z /= moved.n_steps;
    }
    row.dt_q = mala.dt_q;
    row.dt_z = mala.dt_z;
    out.trace.push_back(row);

    out.iterations = m;
    out.final_grad_inf = row.grad_inf;

    if (row.grad_inf / beta <= opt.tol_g) {
      if (++consecutive >= opt.w_conv) {
        out.converged = true;
        break;
      }
    } else {
      consecutive = 0;
    }
  }
  return out;
}

}  // namespace fekl
