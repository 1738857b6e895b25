#pragma once

// Model systems and the two sampling regimes they expose.
//
// An AlchemicalSystem carries the collective variable z as an independent
// coordinate sampled alongside the configuration q (the biased density lives
// on the product space).  A ReactionCoordinateSystem instead defines z = xi(q)
// as a function of the configuration, and only q is sampled.

#include <Eigen/Core>
#include <memory>

#include "fekl/common.hpp"

namespace fekl {

class AlchemicalSystem {
 public:
  virtual ~AlchemicalSystem() = default;

  virtual int dim_q() const = 0;
  virtual int dim_z() const = 0;

  virtual double energy(const Eigen::VectorXd& q, const Eigen::VectorXd& z) const = 0;
  virtual Eigen::VectorXd grad_q(const Eigen::VectorXd& q, const Eigen::VectorXd& z) const = 0;
  virtual Eigen::VectorXd grad_z(const Eigen::VectorXd& q, const Eigen::VectorXd& z) const = 0;

  // Configuration the sampler starts from before equilibration.
  virtual Eigen::VectorXd initial_q() const = 0;
};

// Energy, configurational gradient, order parameter and its Jacobian at one
// configuration, computed together so shared work (pair distances) is reused.
struct RcEvaluation {
  double energy = 0.0;
  Eigen::VectorXd grad_q;
  Eigen::VectorXd xi;
  Eigen::MatrixXd xi_jacobian;  // dim_z x dim_q
};

class ReactionCoordinateSystem {
 public:
  virtual ~ReactionCoordinateSystem() = default;

  virtual int dim_q() const = 0;
  virtual int dim_z() const = 0;

  virtual double energy(const Eigen::VectorXd& q) const = 0;
  virtual Eigen::VectorXd grad_q(const Eigen::VectorXd& q) const = 0;
  virtual Eigen::VectorXd xi(const Eigen::VectorXd& q) const = 0;
  virtual Eigen::MatrixXd xi_jacobian(const Eigen::VectorXd& q) const = 0;

  virtual RcEvaluation evaluate(const Eigen::VectorXd& q) const {
    RcEvaluation ev;
    ev.energy = energy(q);
    ev.grad_q = grad_q(q);
    ev.xi = xi(q);
    ev.xi_jacobian = xi_jacobian(q);
    return ev;
  }

  virtual Eigen::VectorXd initial_q() const = 0;
};

// ---------------------------------------------------------------------------
// Toy landscape: V(q, z) = cos(2 pi z) (1 + d1 q) + d2 q^2 on q in R,
// z in [-0.5, 0.5].  Integrating out q is analytic, which makes it the
// reference case for validating estimators end to end.
class ToySystem final : public AlchemicalSystem {
 public:
  ToySystem(double d1, double d2) : d1_(d1), d2_(d2) {
    if (!(d2_ > 0.0)) throw ContractViolation("toy system requires d2 > 0");
  }

  double d1() const { return d1_; }
  double d2() const { return d2_; }

  int dim_q() const override { return 1; }
  int dim_z() const override { return 1; }

  double energy(const Eigen::VectorXd& q, const Eigen::VectorXd& z) const override;
  Eigen::VectorXd grad_q(const Eigen::VectorXd& q, const Eigen::VectorXd& z) const override;
  Eigen::VectorXd grad_z(const Eigen::VectorXd& q, const Eigen::VectorXd& z) const override;
  Eigen::VectorXd initial_q() const override { return Eigen::VectorXd::Zero(1); }

  // Free energy of z with q integrated out (Gaussian integral), up to the
  // additive constant fixed by anchoring at z0:
  //   A(z) = cos(2 pi z) - d1^2 cos^2(2 pi z) / (4 d2),  shifted so A(z0) = 0.
  double analytic_free_energy(double z, double z0) const;

 private:
  double d1_;
  double d2_;
};

// ---------------------------------------------------------------------------
// WCA solvent with one double-well dimer bond, in a periodic square box.
//
// All pairs interact through the purely repulsive WCA potential
//   V_wca(r) = 4 eps [(sigma/r)^12 - (sigma/r)^6] + eps   for r < 2^(1/6) sigma
// except the tagged pair (0, 1), which instead feels the double well
//   V_dw(r) = h [1 - (r - r0 - w)^2 / w^2]^2
// with minima at r0 and r0 + 2w and barrier height h.  The reaction
// coordinate is the minimum-image dimer bond length.
class WcaDimerSystem final : public ReactionCoordinateSystem {
 public:
  struct Params {
    int n_atoms = 16;
    double box_side = 12.0;
    double epsilon = 1.0;
    double sigma = 1.0;
    double h = 1.0;
    double w = 0.5;
    double r0 = 1.1224620483093730;  // 2^(1/6) sigma
  };

  explicit WcaDimerSystem(const Params& p);

  const Params& params() const { return p_; }

  int dim_q() const override { return 2 * p_.n_atoms; }
  int dim_z() const override { return 1; }

  double energy(const Eigen::VectorXd& q) const override;
  Eigen::VectorXd grad_q(const Eigen::VectorXd& q) const override;
  Eigen::VectorXd xi(const Eigen::VectorXd& q) const override;
  Eigen::MatrixXd xi_jacobian(const Eigen::VectorXd& q) const override;
  RcEvaluation evaluate(const Eigen::VectorXd& q) const override;

  // Square lattice filling the box, with the dimer bond set to r0.
  Eigen::VectorXd initial_q() const override;

  // The double-well bond potential on its own (used by tests).
  double bond_potential(double r) const;

 private:
  Params p_;
  double cutoff2_;  // (2^(1/6) sigma)^2
};

// ---------------------------------------------------------------------------
// Lennard-Jones cluster in 3 (or 2) dimensions with a soft confining shell.
//
// Pair energy V_lj(r) = 4 eps [(sigma/r)^12 - (sigma/r)^6]; the shell adds
// k_wall * sum_i max(0, |q_i - qbar| - r_wall)^4 to keep evaporated atoms
// near the cluster.  Order parameters: either (Q4, V_lj) where Q4 is the
// bond-orientational order parameter (3D only), or (M2, V_lj) where
// M2 = (1/N) sum_i |q_i - qbar|^2 is the second moment about the centroid.
class LjClusterSystem final : public ReactionCoordinateSystem {
 public:
  enum class OrderParameter { kQ4, kSecondMoment };

  struct Params {
    int n_atoms = 38;
    int dim = 3;
    double epsilon = 1.0;
    double sigma = 1.0;
    double q4_cutoff = 1.391;        // bond distance cutoff for Q4, in sigma
    double wall_k = 100.0;           // eps / sigma^4
    double wall_radius = 0.0;        // 0 -> 2.25 sigma N^(1/3)
    OrderParameter order = OrderParameter::kQ4;
    // Initial geometry: "fcc" (truncated octahedron) or "icosahedral"
    // (two-shell icosahedral fragment); both are locally relaxed.
    std::string initial_geometry = "fcc";
  };

  explicit LjClusterSystem(const Params& p);

  const Params& params() const { return p_; }
  double wall_radius() const { return wall_radius_; }

  int dim_q() const override { return p_.dim * p_.n_atoms; }
  int dim_z() const override { return 2; }

  // Sampled energy: pair LJ plus confining shell.
  double energy(const Eigen::VectorXd& q) const override;
  Eigen::VectorXd grad_q(const Eigen::VectorXd& q) const override;

  // xi = (order parameter, pair LJ energy).  The shell term is a sampling
  // device, not part of the physical energy coordinate.
  Eigen::VectorXd xi(const Eigen::VectorXd& q) const override;
  Eigen::MatrixXd xi_jacobian(const Eigen::VectorXd& q) const override;
  RcEvaluation evaluate(const Eigen::VectorXd& q) const override;

  Eigen::VectorXd initial_q() const override;

  // Pair LJ energy alone (no shell).
  double pair_energy(const Eigen::VectorXd& q) const;

 private:
  Params p_;
  double wall_radius_;
};

// Deterministic local relaxation by gradient descent with backtracking; used
// to produce reference cluster geometries.  Returns the relaxed coordinates.
Eigen::VectorXd relax_configuration(const ReactionCoordinateSystem& sys, Eigen::VectorXd q,
                                    int max_iters = 20000, double grad_tol = 1e-10);

// Ideal (unrelaxed) cluster geometries, nearest-neighbor distance d_nn.
Eigen::VectorXd fcc_truncated_octahedron_38(double d_nn);
Eigen::VectorXd icosahedral_fragment_38(double d_nn);

// ---------------------------------------------------------------------------
// Spring extension: couples a reaction-coordinate system to an auxiliary
// coordinate z through a harmonic tether, turning it into an alchemical
// system:  V_ext(q, z) = V(q) + (mu/2) |z - xi(q)|^2.  As mu grows, z tracks
// xi(q) ever more tightly.
class SpringExtendedSystem final : public AlchemicalSystem {
 public:
  SpringExtendedSystem(std::shared_ptr<const ReactionCoordinateSystem> inner, double mu);

  double mu() const { return mu_; }
  const ReactionCoordinateSystem& inner() const { return *inner_; }

  int dim_q() const override { return inner_->dim_q(); }
  int dim_z() const override { return inner_->dim_z(); }

  double energy(const Eigen::VectorXd& q, const Eigen::VectorXd& z) const override;
  Eigen::VectorXd grad_q(const Eigen::VectorXd& q, const Eigen::VectorXd& z) const override;
  Eigen::VectorXd grad_z(const Eigen::VectorXd& q, const Eigen::VectorXd& z) const override;
  Eigen::VectorXd initial_q() const override { return inner_->initial_q(); }

 private:
  std::shared_ptr<const ReactionCoordinateSystem> inner_;
  double mu_;
};

}  // namespace fekl
