#pragma once

// Metropolis-adjusted Langevin steps.
//
// Proposal from x with log-density gradient g(x):
//   y = x + (dt/2) g(x) + sqrt(dt) r,   r ~ N(0, I),
// accepted with the full asymmetric Metropolis-Hastings correction.  A
// proposal whose log-density comes back non-finite (outside the domain
// indicator, numerical overflow) is rejected outright.
//
// Every step consumes exactly dim normals plus one uniform from the stream,
// accepted or not, so the draw sequence depends only on the step count.

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "fekl/rng.hpp"

namespace fekl {

struct MalaSettings {
  double dt_q = 1e-2;
  double dt_z = 1e-2;
  int n_sweeps = 1;          // Gibbs sweeps per rejuvenation
  double target_low = 0.5;   // acceptance window for step-size adaptation
  double target_high = 0.8;
};

// Current point with its cached log-density and gradient, so repeated steps
// evaluate the target once per proposal.
struct MalaState {
  Eigen::VectorXd x;
  double log_pi = 0.0;
  Eigen::VectorXd grad;
};

// log of the Metropolis-Hastings acceptance ratio for the Langevin proposal
// x -> y;  log q(a -> b) = -|b - a - (dt/2) g(a)|^2 / (2 dt).
inline double mala_log_accept(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                              double log_pi_x, double log_pi_y,
                              const Eigen::VectorXd& grad_x, const Eigen::VectorXd& grad_y,
                              double dt) {
  const double fwd = (y - x - 0.5 * dt * grad_x).squaredNorm() / (2.0 * dt);
  const double rev = (x - y - 0.5 * dt * grad_y).squaredNorm() / (2.0 * dt);
  return (log_pi_y - rev) - (log_pi_x - fwd);
}

// One MALA step on a cached state.  Target must provide
//   void eval(const Eigen::VectorXd& x, double& log_pi, Eigen::VectorXd& grad) const
// and may signal "outside support" by setting log_pi to -infinity (grad is
// then ignored).  Returns whether the proposal was accepted.
template <class Target>
bool mala_step(MalaState& s, const Target& target, double dt, RngStream& rng) {
  const Eigen::Index dim = s.x.size();
  Eigen::VectorXd y(dim);
  for (Eigen::Index a = 0; a < dim; ++a)
    y[a] = s.x[a] + 0.5 * dt * s.grad[a] + std::sqrt(dt) * rng.normal();

  double log_pi_y;
  Eigen::VectorXd grad_y(dim);
  target.eval(y, log_pi_y, grad_y);

  const double u = rng.uniform();
  if (!std::isfinite(log_pi_y)) return false;

  const double log_alpha = mala_log_accept(s.x, y, s.log_pi, log_pi_y, s.grad, grad_y, dt);
  if (std::log(u) < log_alpha) {
    s.x = std::move(y);
    s.log_pi = log_pi_y;
    s.grad = std::move(grad_y);
    return true;
  }
  return false;
}

// Multiplicative step-size control toward an acceptance window.
inline double adapt_step_size(double dt, double acceptance_rate, double target_low = 0.5,
                              double target_high = 0.8) {
  if (acceptance_rate < target_low)
    dt *= 0.8;
  else if (acceptance_rate > target_high)
    dt *= 1.25;
  return std::clamp(dt, 1e-12, 1e3);
}

}  // namespace fekl
