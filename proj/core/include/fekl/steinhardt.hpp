#pragma once

// Steinhardt Q4 bond-orientational order parameter for 3D clusters.
//
// Bonds are atom pairs closer than a cutoff.  Each bond direction u
// contributes the l = 4 spherical harmonics Y_4m(u); averaging over bonds and
// summing moduli over m gives
//   Q4 = sqrt( (4 pi / 9) sum_{m=-4..4} | (1/N_b) sum_bonds Y_4m(u) |^2 ).
// Q4 is 1 for a single bond, ~0.19 for the 38-atom fcc truncated octahedron
// and ~0.01 for icosahedral packings.
//
// The harmonics are evaluated in Cartesian polynomial form,
// Y_4m ∝ p_m(u_z) (u_x + i u_y)^m, which is pole-free and gives an exact
// analytic gradient.  l = 4 is even, so bond orientation (i->j vs j->i) does
// not matter.

#include <Eigen/Core>

namespace fekl {

struct Q4Result {
  double value = 0.0;
  Eigen::VectorXd grad;  // d Q4 / d q, length 3 * n_atoms
  int n_bonds = 0;
};

// Value only.  q is the flat coordinate vector (atom i at q[3i..3i+2]).
// Throws UndefinedOrderParameter when no pair is within the cutoff and
// SingularConfiguration on coincident atoms.
double steinhardt_q4(const Eigen::VectorXd& q, int n_atoms, double cutoff);

// Value plus gradient.  The gradient is exact wherever the bond set is
// locally constant; at Q4 = 0 (where the square root is not differentiable)
// the zero vector is returned.
Q4Result steinhardt_q4_with_grad(const Eigen::VectorXd& q, int n_atoms, double cutoff);

}  // namespace fekl
