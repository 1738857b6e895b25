#pragma once

// Quadrature oracle for the 1D cosine/quadratic benchmark system.  Everything
// here is recomputed from first principles — the potential, the Gaussian
// bumps, the biased density and all its expectations — so the numbers it
// produces are independent of the library code paths they are checked
// against.
//
//   V(q, z) = cos(2 pi z) (1 + d1 q) + d2 q^2
//   A(z)    = -(1/beta) log Int exp(-beta V(q, z)) dq
//           = cos(2 pi z) - d1^2 cos^2(2 pi z) / (4 d2) + const(beta)
//   p(z)    propto exp(-beta (A(z) - Ahat(z; theta)))  on z in [lo, hi]

#include <cmath>
#include <vector>

#include "quadrature.hpp"

namespace oracle {

struct ToyBump {
  double center = 0.0;
  double tau = 1.0;
};

struct ToyOracle {
  double d1 = 2.0;
  double d2 = 30.0;
  double beta = 1.0;
  double lo = -0.5;
  double hi = 0.5;
  double anchor = -0.5;
  std::vector<ToyBump> bumps;
  std::vector<double> theta;

  double volume() const { return hi - lo; }

  double potential(double q, double z) const {
    return std::cos(2.0 * M_PI * z) * (1.0 + d1 * q) + d2 * q * q;
  }

  // Free energy by the closed-form Gaussian integral over q, anchored to 0 at
  // `anchor`.  The beta-dependent normalization constant cancels in the shift.
  double free_energy(double z) const {
    const double c = std::cos(2.0 * M_PI * z);
    const double ca = std::cos(2.0 * M_PI * anchor);
    const double raw = c - d1 * d1 * c * c / (4.0 * d2);
    const double raw_anchor = ca - d1 * d1 * ca * ca / (4.0 * d2);
    return raw - raw_anchor;
  }

  // Free energy by direct numeric quadrature over q (no closed form), for
  // cross-checking the formula above and the library's analytic version.
  double free_energy_numeric(double z) const {
    // exp(-beta d2 q^2) with |q| > L is below 1e-40 of the peak for this L.
    const double width = std::sqrt(1.0 / (beta * d2));
    const double shift = d1 / (2.0 * d2);  // |mean of q| is at most this
    const double L = 14.0 * width + 2.0 * shift;
    auto boltz = [&](double q) { return std::exp(-beta * potential(q, z)); };
    const double num = integrate(boltz, -L, L, 1e-14);
    auto boltz_a = [&](double q) { return std::exp(-beta * potential(q, anchor)); };
    const double den = integrate(boltz_a, -L, L, 1e-14);
    return -(1.0 / beta) * std::log(num / den);
  }

  // Pinned bump value, recomputed from the formula.
  double pinned_bump(std::size_t j, double z) const {
    const ToyBump& b = bumps[j];
    const double at_z = std::exp(-b.tau * (z - b.center) * (z - b.center));
    const double at_anchor = std::exp(-b.tau * (anchor - b.center) * (anchor - b.center));
    return at_z - at_anchor;
  }

  double bias(double z) const {
    double a = 0.0;
    for (std::size_t j = 0; j < bumps.size(); ++j) a += theta[j] * pinned_bump(j, z);
    return a;
  }

  // Unnormalized biased density on the box.
  double density_raw(double z) const { return std::exp(-beta * (free_energy(z) - bias(z))); }

  double normalizer(double tol = 1e-12) const {
    return integrate([&](double z) { return density_raw(z); }, lo, hi, tol);
  }

  // E under the normalized biased density.
  template <class F>
  double density_mean(const F& f, double tol = 1e-12) const {
    const double zc = normalizer(tol);
    return integrate([&](double z) { return f(z) * density_raw(z); }, lo, hi, tol) / zc;
  }

  // E under the uniform distribution on the box.
  template <class F>
  double uniform_mean(const F& f, double tol = 1e-12) const {
    return integrate(f, lo, hi, tol) / volume();
  }

  // Objective I(theta) = beta E_unif[A - Ahat] + log Z(theta); equals
  // KL(uniform || biased) + log |D|, so it is bounded below by log |D|.
  double objective(double tol = 1e-12) const {
    const double drift =
        uniform_mean([&](double z) { return free_energy(z) - bias(z); }, tol);
    return beta * drift + std::log(normalizer(tol));
  }

  double kl(double tol = 1e-12) const { return objective(tol) - std::log(volume()); }

  // Gradient of I: J_j = -beta (E_unif[K'_j] - E_density[K'_j]).
  std::vector<double> gradient(double tol = 1e-12) const {
    std::vector<double> g(bumps.size());
    for (std::size_t j = 0; j < bumps.size(); ++j) {
      const double u = uniform_mean([&](double z) { return pinned_bump(j, z); }, tol);
      const double d = density_mean([&](double z) { return pinned_bump(j, z); }, tol);
      g[j] = -beta * (u - d);
    }
    return g;
  }

  // Hessian of I: H_jl = beta^2 Cov_density[K'_j, K'_l].
  std::vector<std::vector<double>> hessian(double tol = 1e-12) const {
    const std::size_t k = bumps.size();
    std::vector<double> means(k);
    for (std::size_t j = 0; j < k; ++j)
      means[j] = density_mean([&](double z) { return pinned_bump(j, z); }, tol);
    std::vector<std::vector<double>> h(k, std::vector<double>(k));
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t l = 0; l <= j; ++l) {
        const double cross = density_mean(
            [&](double z) { return pinned_bump(j, z) * pinned_bump(l, z); }, tol);
        h[j][l] = h[l][j] = beta * beta * (cross - means[j] * means[l]);
      }
    return h;
  }
};

}  // namespace oracle
