#pragma once

// Stochastic descent on the kernel coefficients.  Each iteration estimates
// the KL gradient from the current weighted population, folds it into a
// Robbins-Monro average, takes an explicit gradient step and then moves the
// population to the updated bias with an adaptive bridge, so the particles
// always approximate the distribution the next gradient is taken against.

#include <vector>

#include <Eigen/Dense>

#include "fekl/context.hpp"
#include "fekl/domain.hpp"
#include "fekl/kernel_model.hpp"
#include "fekl/parallel.hpp"
#include "fekl/smc/engine.hpp"
#include "fekl/smc/particle.hpp"

namespace fekl {

struct OptimizerSettings {
  double lambda0 = 0.1;             // step size, divided by beta unless frozen
  bool scale_lambda_by_beta = true;
  double eta = 1.0;                 // averaging gain scale
  double p = 0.6;                   // averaging decay exponent, in (0.5, 1]
  double tol_g = 0.02;              // convergence threshold on |J|_inf / beta
  int w_conv = 20;                  // consecutive iterations below tol_g
  int max_iter = 20000;

  double effective_lambda(double beta) const {
    return scale_lambda_by_beta ? lambda0 / beta : lambda0;
  }
  void validate() const;
};

// Smoothed gradient carried across descent calls.  When the greedy selector
// appends a kernel the average is extended with a zero entry, so restarting
// the descent does not discard what earlier iterations learned.
struct OptimizerState {
  Eigen::VectorXd jbar;
  bool has_jbar = false;

  void reset(int n_kernels) {
    jbar = Eigen::VectorXd::Zero(n_kernels);
    has_jbar = false;
  }
  void extend() {
    jbar.conservativeResize(jbar.size() + 1);
    jbar[jbar.size() - 1] = 0.0;
  }
};

// Monte Carlo estimate of the KL gradient:
//   J_j = -beta (E_uniform[K'_j] - sum_i W_i K'_j(z_i)).
// Empty basis yields an empty vector.
Eigen::VectorXd estimate_gradient(const FreeEnergyModel& model, const Population& pop,
                                  const Domain& dom);

// Robbins-Monro gain eta * m^{-p} for iteration m >= 1.
double averaging_gain(double eta, double p, int m);

// Weighted-covariance estimate of the objective's Hessian,
//   H_jl = beta^2 Cov_pop[K'_j, K'_l]   (diagnostic only).
Eigen::MatrixXd hessian_estimate(const FreeEnergyModel& model, const Population& pop);

struct DescentTraceRow {
  int iteration = 0;      // 1-based within this descent; drivers renumber
  double grad_inf = 0.0;  // |smoothed gradient|_inf
  double lambda = 0.0;
  double eta_m = 0.0;
  double ess = 0.0;       // after the bridge to the updated bias
  double log_z_accum = 0.0;
  // Bridge diagnostics for the move to the updated bias.
  int bridge_steps = 0;
  int resamples = 0;
  double acc_q = 0.0;     // acceptance averaged over the bridge's steps
  double acc_z = 0.0;
  double dt_q = 0.0;
  double dt_z = 0.0;
};

struct DescentOutcome {
  bool converged = false;
  int iterations = 0;
  double final_grad_inf = 0.0;  // |smoothed gradient|_inf at exit
  std::vector<DescentTraceRow> trace;
};

// Run the descent at the model's current temperature until |jbar|_inf / beta
// stays at or below tol_g for w_conv consecutive iterations, or the
// iteration cap is reached.  `max_iter_override` (>= 0) replaces
// settings.max_iter for this call, which is how tempering enforces its
// per-temperature budget.  Throws DivergenceError when an update produces a
// non-finite coefficient.
DescentOutcome descent_loop(FreeEnergyModel& model, const SamplingContext& ctx, Population& pop,
                            OptimizerState& state, const OptimizerSettings& opt,
                            const SmcSettings& smc, MalaSettings& mala, const WorkerPool& pool,
                            int max_iter_override = -1);

}  // namespace fekl
