#include "fekl/steinhardt.hpp"

#include <cmath>
#include <complex>
#include <vector>

#include "fekl/common.hpp"

namespace fekl {

namespace {

using cplx = std::complex<double>;
constexpr double kPi = 3.1415926535897932385;
constexpr double kCoincident2 = 1e-20;

// Normalization sqrt((9 / 4 pi) (4 - m)! / (4 + m)!) for m = 0..4.
const double kNorm[5] = {
    std::sqrt(9.0 / (4.0 * kPi)),
    std::sqrt(9.0 / (4.0 * kPi) / 20.0),
    std::sqrt(9.0 / (4.0 * kPi) / 360.0),
    std::sqrt(9.0 / (4.0 * kPi) / 5040.0),
    std::sqrt(9.0 / (4.0 * kPi) / 40320.0),
};

// Polar polynomials p_m(z) with Y_4m = N_m p_m(z) (x + iy)^m on the unit
// sphere, and their derivatives.  (The Condon-Shortley sign is dropped; it
// cancels inside |.|^2.)
inline void polar_polys(double z, double p[5], double dp[5]) {
  const double z2 = z * z;
  p[0] = (35.0 * z2 * z2 - 30.0 * z2 + 3.0) / 8.0;
  p[1] = 2.5 * z * (7.0 * z2 - 3.0);
  p[2] = 7.5 * (7.0 * z2 - 1.0);
  p[3] = 105.0 * z;
  p[4] = 105.0;
  dp[0] = (35.0 * z2 - 15.0) * z / 2.0;
  dp[1] = 2.5 * (21.0 * z2 - 3.0);
  dp[2] = 105.0 * z;
  dp[3] = 105.0;
  dp[4] = 0.0;
}

struct Accumulated {
  cplx qbar[5] = {};        // bond-averaged harmonics, m = 0..4
  int n_bonds = 0;
};

template <class PerBond>
Accumulated accumulate_bonds(const Eigen::VectorXd& q, int n_atoms, double cutoff,
                             PerBond&& per_bond) {
  if (q.size() != 3 * n_atoms)
    throw ContractViolation("Q4 requires 3D coordinates (3 per atom)");
  const double cutoff2 = cutoff * cutoff;
  Accumulated acc;
  for (int i = 0; i < n_atoms; ++i) {
    for (int j = i + 1; j < n_atoms; ++j) {
      const double dx = q[3 * j] - q[3 * i];
      const double dy = q[3 * j + 1] - q[3 * i + 1];
      const double dz = q[3 * j + 2] - q[3 * i + 2];
      const double r2 = dx * dx + dy * dy + dz * dz;
      if (r2 < kCoincident2) throw SingularConfiguration("coincident atoms in Q4 evaluation");
      if (r2 >= cutoff2) continue;
      const double r = std::sqrt(r2);
      const double ux = dx / r, uy = dy / r, uz = dz / r;

      double p[5], dp[5];
      polar_polys(uz, p, dp);
      // Powers of (ux + i uy), xi^0 .. xi^4.
      cplx xi_pow[5];
      xi_pow[0] = 1.0;
      const cplx xi(ux, uy);
      for (int m = 1; m <= 4; ++m) xi_pow[m] = xi_pow[m - 1] * xi;

      cplx y[5];
      for (int m = 0; m <= 4; ++m) y[m] = kNorm[m] * p[m] * xi_pow[m];
      for (int m = 0; m <= 4; ++m) acc.qbar[m] += y[m];
      acc.n_bonds += 1;

      per_bond(i, j, r, ux, uy, uz, p, dp, xi_pow);
    }
  }
  if (acc.n_bonds == 0)
    throw UndefinedOrderParameter("Q4 undefined: no bonded pair within cutoff");
  for (int m = 0; m <= 4; ++m) acc.qbar[m] /= static_cast<double>(acc.n_bonds);
  return acc;
}

// sum_{m=-4..4} |qbar_m|^2 using conjugate symmetry (|qbar_{-m}| = |qbar_m|).
inline double modulus_sum(const Accumulated& acc) {
  double s = std::norm(acc.qbar[0]);
  for (int m = 1; m <= 4; ++m) s += 2.0 * std::norm(acc.qbar[m]);
  return s;
}

}  // namespace

double steinhardt_q4(const Eigen::VectorXd& q, int n_atoms, double cutoff) {
  const Accumulated acc = accumulate_bonds(
      q, n_atoms, cutoff,
      [](int, int, double, double, double, double, const double*, const double*, const cplx*) {});
  return std::sqrt(4.0 * kPi / 9.0 * modulus_sum(acc));
}

Q4Result steinhardt_q4_with_grad(const Eigen::VectorXd& q, int n_atoms, double cutoff) {
  // Per-bond harmonic derivatives with respect to the bond vector r = q_j - q_i:
  //   dY/dr = (1/r) (I - u u^T) grad_u Y,
  // where on the unit sphere grad_u [p_m(z) xi^m] has components
  //   d/dx = p_m m xi^(m-1),  d/dy = i p_m m xi^(m-1),  d/dz = p_m' xi^m.
  struct BondDeriv {
    int i, j;
    cplx dy[5][3];  // dY_m / d(r_x, r_y, r_z)
  };
  std::vector<BondDeriv> bonds;
  bonds.reserve(static_cast<std::size_t>(n_atoms) * 4);

  const Accumulated acc = accumulate_bonds(
      q, n_atoms, cutoff,
      [&](int i, int j, double r, double ux, double uy, double uz, const double* p,
          const double* dp, const cplx* xi_pow) {
        BondDeriv bd;
        bd.i = i;
        bd.j = j;
        const double u[3] = {ux, uy, uz};
        for (int m = 0; m <= 4; ++m) {
          cplx gu[3];
          const cplx xi_m1 = m > 0 ? xi_pow[m - 1] : cplx(0.0);
          gu[0] = kNorm[m] * p[m] * static_cast<double>(m) * xi_m1;
          gu[1] = cplx(0.0, 1.0) * gu[0];
          gu[2] = kNorm[m] * dp[m] * xi_pow[m];
          // Project out the radial direction and scale by 1/r.
          const cplx radial = gu[0] * u[0] + gu[1] * u[1] + gu[2] * u[2];
          for (int a = 0; a < 3; ++a) bd.dy[m][a] = (gu[a] - radial * u[a]) / r;
        }
        bonds.push_back(bd);
      });

  Q4Result res;
  res.n_bonds = acc.n_bonds;
  const double s = modulus_sum(acc);
  res.value = std::sqrt(4.0 * kPi / 9.0 * s);
  res.grad = Eigen::VectorXd::Zero(q.size());
  if (res.value < 1e-12) return res;  // square root not differentiable at 0

  // dQ4/dq = (4 pi / 9) / (2 Q4) * dS/dq with
  // dS/dq = 2 sum_m w_m Re[ conj(qbar_m) dqbar_m/dq ],  w_0 = 1, w_m>0 = 2.
  const double scale = 4.0 * kPi / 9.0 / (2.0 * res.value) * 2.0 / acc.n_bonds;
  for (const auto& bd : bonds) {
    for (int m = 0; m <= 4; ++m) {
      const double w = (m == 0) ? 1.0 : 2.0;
      for (int a = 0; a < 3; ++a) {
        const double contrib = scale * w * std::real(std::conj(acc.qbar[m]) * bd.dy[m][a]);
        res.grad[3 * bd.j + a] += contrib;
        res.grad[3 * bd.i + a] -= contrib;
      }
    }
  }
  return res;
}

}  // namespace fekl
