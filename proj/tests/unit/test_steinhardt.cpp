#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "fekl/common.hpp"
#include "fekl/rng.hpp"
#include "fekl/steinhardt.hpp"
#include "fekl/systems.hpp"
#include "finite_diff.hpp"

using namespace fekl;

namespace {

// Rigid rotation of a flat coordinate vector about an axis by an angle.
Eigen::VectorXd rotate_all(const Eigen::VectorXd& q, const Eigen::Vector3d& axis, double angle) {
  const Eigen::Matrix3d R = Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
  Eigen::VectorXd out(q.size());
  for (Eigen::Index i = 0; i < q.size() / 3; ++i)
    out.segment<3>(3 * i) = R * q.segment<3>(3 * i);
  return out;
}

Eigen::VectorXd two_atoms_along(const Eigen::Vector3d& u, double r) {
  Eigen::VectorXd q(6);
  q.segment<3>(0) = Eigen::Vector3d::Zero();
  q.segment<3>(3) = r * u.normalized();
  return q;
}

}  // namespace

TEST_SUITE("steinhardt") {

TEST_CASE("a single bond gives q4 = 1 for every orientation") {
  RngStream rng(derive_key({0x9u, 4u}));
  for (int rep = 0; rep < 32; ++rep) {
    Eigen::Vector3d u(rng.normal(), rng.normal(), rng.normal());
    if (u.norm() < 1e-3) continue;
    const Eigen::VectorXd q = two_atoms_along(u, 1.0);
    CHECK(steinhardt_q4(q, 2, 1.5) == doctest::Approx(1.0).epsilon(1e-10));
  }
  // Including bonds exactly along the polar axis, where naive spherical
  // coordinates would degenerate.
  CHECK(steinhardt_q4(two_atoms_along({0, 0, 1}, 1.0), 2, 1.5) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(steinhardt_q4(two_atoms_along({1, 0, 0}, 1.0), 2, 1.5) ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("error conditions") {
  SUBCASE("no bonds within the cutoff") {
    const Eigen::VectorXd q = two_atoms_along({0, 0, 1}, 3.0);
    CHECK_THROWS_AS(steinhardt_q4(q, 2, 1.5), UndefinedOrderParameter);
  }
  SUBCASE("coincident atoms") {
    Eigen::VectorXd q = Eigen::VectorXd::Zero(6);
    CHECK_THROWS_AS(steinhardt_q4(q, 2, 1.5), SingularConfiguration);
  }
  SUBCASE("wrong coordinate length") {
    Eigen::VectorXd q = Eigen::VectorXd::Zero(7);
    CHECK_THROWS_AS(steinhardt_q4(q, 2, 1.5), ContractViolation);
  }
}

TEST_CASE("ideal fcc cluster sits at the crystalline value") {
  // Unrelaxed truncated octahedron, bond cutoff between the first and second
  // neighbor shells (sqrt(2) ratio).
  const double d_nn = std::pow(2.0, 1.0 / 6.0);
  const Eigen::VectorXd q = fcc_truncated_octahedron_38(d_nn);
  const double q4 = steinhardt_q4(q, 38, 1.391);
  CHECK(q4 > 0.15);
  CHECK(q4 < 0.23);

  // The relaxed geometry must stay crystalline.
  LjClusterSystem sys(LjClusterSystem::Params{});
  const double q4_rel = steinhardt_q4(sys.initial_q(), 38, 1.391);
  CHECK(q4_rel > 0.17);
  CHECK(q4_rel < 0.21);
}

TEST_CASE("icosahedral packing reads as non-crystalline") {
  LjClusterSystem::Params p;
  p.initial_geometry = "icosahedral";
  LjClusterSystem sys(p);
  const double q4 = steinhardt_q4(sys.initial_q(), 38, 1.391);
  CHECK(q4 >= 0.0);
  CHECK(q4 < 0.05);
}

TEST_CASE("q4 is rotation and translation invariant") {
  const Eigen::VectorXd q = fcc_truncated_octahedron_38(1.1);
  const double base = steinhardt_q4(q, 38, 1.391);

  RngStream rng(derive_key({0x9u, 5u}));
  for (int rep = 0; rep < 8; ++rep) {
    Eigen::Vector3d axis(rng.normal(), rng.normal(), rng.normal());
    const double angle = 6.0 * rng.uniform() - 3.0;
    const Eigen::VectorXd qr = rotate_all(q, axis, angle);
    CHECK(steinhardt_q4(qr, 38, 1.391) == doctest::Approx(base).epsilon(1e-8));
  }

  Eigen::VectorXd qt = q;
  for (int i = 0; i < 38; ++i) {
    qt[3 * i] += 5.5;
    qt[3 * i + 1] -= 2.25;
    qt[3 * i + 2] += 0.125;
  }
  CHECK(steinhardt_q4(qt, 38, 1.391) == doctest::Approx(base).epsilon(1e-10));
}

TEST_CASE("gradient matches finite differences") {
  // Jittered fcc fragment so no bond sits near the cutoff (the bond set must
  // not change under the finite-difference probes).
  Eigen::VectorXd q = fcc_truncated_octahedron_38(1.12);
  RngStream rng(derive_key({0x9u, 6u}));
  for (Eigen::Index i = 0; i < q.size(); ++i) q[i] += 0.02 * (2.0 * rng.uniform() - 1.0);

  const Q4Result res = steinhardt_q4_with_grad(q, 38, 1.391);
  CHECK(res.value == doctest::Approx(steinhardt_q4(q, 38, 1.391)).epsilon(1e-14));
  CHECK(res.n_bonds > 0);

  const Eigen::VectorXd fd = oracle::fd_gradient(
      [&](const Eigen::VectorXd& x) { return steinhardt_q4(x, 38, 1.391); }, q, 1e-6);
  CHECK(oracle::rel_error(res.grad, fd) < 1e-4);
}

TEST_CASE("gradient of a two-atom system matches finite differences") {
  const Eigen::VectorXd q = two_atoms_along({0.3, -0.4, 0.86}, 1.0);
  // Q4 is constant (= 1) for a single bond, so the gradient must vanish.
  const Q4Result res = steinhardt_q4_with_grad(q, 2, 1.5);
  CHECK(res.n_bonds == 1);
  const Eigen::VectorXd fd = oracle::fd_gradient(
      [&](const Eigen::VectorXd& x) { return steinhardt_q4(x, 2, 1.5); }, q, 1e-5);
  CHECK(res.grad.cwiseAbs().maxCoeff() < 1e-9);
  CHECK(fd.cwiseAbs().maxCoeff() < 1e-6);
}

}  // TEST_SUITE
