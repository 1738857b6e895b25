#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "fekl/domain.hpp"
#include "fekl/kernel_model.hpp"
#include "finite_diff.hpp"
#include "quadrature.hpp"

using namespace fekl;

namespace {

Eigen::VectorXd vec1(double x) { return Eigen::VectorXd::Constant(1, x); }

Eigen::VectorXd vec2(double x, double y) {
  Eigen::VectorXd v(2);
  v << x, y;
  return v;
}

Domain unit_box_1d() { return Domain(vec1(-0.5), vec1(0.5)); }

}  // namespace

TEST_SUITE("kernel_model") {

TEST_CASE("bump evaluation matches the closed formula") {
  SUBCASE("value at the center is one") {
    KernelUnit k(vec2(0.3, -0.2), vec2(5.0, 9.0));
    CHECK(k.eval(vec2(0.3, -0.2)) == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("1d: center 0, tau 4, z 0.5") {
    KernelUnit k(vec1(0.0), vec1(4.0));
    CHECK(k.eval(vec1(0.5)) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  }
  SUBCASE("2d: tau (1,2) at z (1,1)") {
    KernelUnit k(vec2(0.0, 0.0), vec2(1.0, 2.0));
    CHECK(k.eval(vec2(1.0, 1.0)) == doctest::Approx(std::exp(-3.0)).epsilon(1e-14));
  }
}

TEST_CASE("bump gradient matches finite differences") {
  KernelUnit k(vec2(0.25, -0.1), vec2(3.0, 7.0));
  const Eigen::VectorXd at = vec2(0.4, 0.2);
  const Eigen::VectorXd fd = oracle::fd_gradient(
      [&](const Eigen::VectorXd& z) { return k.eval(z); }, at, 1e-6);
  CHECK(oracle::rel_error(k.grad(at), fd) < 1e-8);
}

TEST_CASE("kernel construction rejects bad arguments") {
  CHECK_THROWS_AS(KernelUnit(vec1(0.0), vec2(1.0, 1.0)), ContractViolation);
  CHECK_THROWS_AS(KernelUnit(vec1(0.0), vec1(0.0)), ContractViolation);
  CHECK_THROWS_AS(KernelUnit(vec1(0.0), vec1(-2.0)), ContractViolation);
  CHECK_THROWS_AS(KernelUnit(Eigen::VectorXd(), Eigen::VectorXd()), ContractViolation);
}

TEST_CASE("pinned kernel values") {
  FreeEnergyModel m(1.0, vec1(-0.5));
  m.append_kernel(KernelUnit(vec1(0.0), vec1(4.0)), 1.0);

  SUBCASE("zero at the anchor") {
    CHECK(m.pinned_kernel(0, vec1(-0.5)) == doctest::Approx(0.0).epsilon(1e-16));
  }
  SUBCASE("center 0, tau 4, anchor -0.5, z 0 gives 1 - exp(-1)") {
    CHECK(m.pinned_kernel(0, vec1(0.0)) ==
          doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-14));
  }
  SUBCASE("far anchor leaves the bump essentially unpinned") {
    FreeEnergyModel far(1.0, vec1(-100.0));
    KernelUnit k(vec1(0.0), vec1(4.0));
    far.append_kernel(k, 1.0);
    CHECK(far.pinned_kernel(0, vec1(0.2)) == doctest::Approx(k.eval(vec1(0.2))).epsilon(1e-14));
  }
  SUBCASE("pinned values lie strictly inside (-1, 1)") {
    for (double z = -0.5; z <= 0.5; z += 0.05) {
      const double v = m.pinned_kernel(0, vec1(z));
      CHECK(v > -1.0);
      CHECK(v < 1.0);
    }
  }
}

TEST_CASE("model value is the pinned linear combination") {
  FreeEnergyModel m(2.0, vec1(-0.5));

  SUBCASE("empty basis evaluates to zero everywhere") {
    CHECK(m.value(vec1(0.3)) == 0.0);
    CHECK(m.grad_z(vec1(0.3)).isZero(0.0));
  }

  m.append_kernel(KernelUnit(vec1(0.0), vec1(4.0)), 2.0);

  SUBCASE("anchor value is identically zero") {
    CHECK(m.value(vec1(-0.5)) == doctest::Approx(0.0).epsilon(1e-16));
  }
  SUBCASE("single kernel, theta 2: value at 0 is 2 (1 - exp(-1))") {
    CHECK(m.value(vec1(0.0)) ==
          doctest::Approx(2.0 * (1.0 - std::exp(-1.0))).epsilon(1e-14));
  }
  SUBCASE("gradient vanishes at the kernel center") {
    CHECK(m.grad_z(vec1(0.0)).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("model gradient matches finite differences of the value") {
  FreeEnergyModel m(1.0, vec2(-0.5, -0.5));
  m.append_kernel(KernelUnit(vec2(0.1, 0.0), vec2(4.0, 6.0)), 1.3);
  m.append_kernel(KernelUnit(vec2(-0.2, 0.3), vec2(10.0, 2.0)), -0.7);

  const Eigen::VectorXd at = vec2(0.12, -0.21);
  const Eigen::VectorXd fd = oracle::fd_gradient(
      [&](const Eigen::VectorXd& z) { return m.value(z); }, at, 1e-5);
  CHECK(oracle::rel_error(m.grad_z(at), fd) < 1e-5);

  double v = 0.0;
  Eigen::VectorXd g;
  m.value_and_grad(at, v, g);
  CHECK(v == m.value(at));
  CHECK((g - m.grad_z(at)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("uniform mean of a bump is exact") {
  const Domain dom = unit_box_1d();

  SUBCASE("frozen reference: center 0, tau 1 on the unit box") {
    // Int_{-1/2}^{1/2} exp(-z^2) dz = sqrt(pi) erf(1/2); |D| = 1.
    KernelUnit k(vec1(0.0), vec1(1.0));
    const double expected = 0.92256201282558481;  // sqrt(pi) * erf(0.5)
    CHECK(k.uniform_mean(dom) == doctest::Approx(expected).epsilon(1e-13));
    const double quad =
        oracle::integrate([](double z) { return std::exp(-z * z); }, -0.5, 0.5, 1e-13);
    CHECK(k.uniform_mean(dom) == doctest::Approx(quad).epsilon(1e-10));
  }

  SUBCASE("random bumps against adaptive quadrature") {
    const double cases[][2] = {{0.3, 17.0}, {-0.45, 2.5}, {0.0, 400.0}, {0.49, 55.0}};
    for (const auto& c : cases) {
      KernelUnit k(vec1(c[0]), vec1(c[1]));
      const double quad = oracle::integrate(
          [&](double z) { return std::exp(-c[1] * (z - c[0]) * (z - c[0])); }, -0.5, 0.5,
          1e-13);
      CHECK(k.uniform_mean(dom) == doctest::Approx(quad).epsilon(1e-10));
    }
  }

  SUBCASE("2d bump against nested quadrature") {
    Domain dom2(vec2(-0.5, -1.0), vec2(0.5, 2.0));
    KernelUnit k(vec2(0.2, 0.7), vec2(3.0, 11.0));
    const double quad = oracle::integrate2d(
        [&](double x, double y) {
          return std::exp(-3.0 * (x - 0.2) * (x - 0.2) - 11.0 * (y - 0.7) * (y - 0.7));
        },
        -0.5, 0.5, -1.0, 2.0, 1e-11);
    CHECK(k.uniform_mean(dom2) == doctest::Approx(quad / 3.0).epsilon(1e-9));
  }

  SUBCASE("mirrored centers have equal means") {
    KernelUnit a(vec1(0.17), vec1(9.0));
    KernelUnit b(vec1(-0.17), vec1(9.0));
    CHECK(a.uniform_mean(dom) == doctest::Approx(b.uniform_mean(dom)).epsilon(1e-14));
  }
}

TEST_CASE("pinned uniform mean handles the flat-kernel limit") {
  // tau -> 0: the bump is ~1 everywhere, the anchor value too, so the pinned
  // expectation collapses to ~0.
  FreeEnergyModel m(1.0, vec1(-0.5));
  m.append_kernel(KernelUnit(vec1(0.2), vec1(1e-12)), 1.0);
  CHECK(std::abs(m.pinned_uniform_mean(0, unit_box_1d())) < 1e-9);
}

TEST_CASE("model uniform mean sums the pinned kernel means") {
  const Domain dom = unit_box_1d();
  FreeEnergyModel m(1.0, vec1(-0.5));
  m.append_kernel(KernelUnit(vec1(0.1), vec1(4.0)), 1.5);
  m.append_kernel(KernelUnit(vec1(-0.3), vec1(25.0)), -0.4);
  const double direct = 1.5 * m.pinned_uniform_mean(0, dom) - 0.4 * m.pinned_uniform_mean(1, dom);
  CHECK(m.uniform_mean(dom) == doctest::Approx(direct).epsilon(1e-14));

  const double quad =
      oracle::integrate([&](double z) { return m.value(vec1(z)); }, -0.5, 0.5, 1e-12);
  CHECK(m.uniform_mean(dom) == doctest::Approx(quad).epsilon(1e-9));
}

TEST_CASE("append starts at zero weight and leaves the surface unchanged") {
  FreeEnergyModel m(1.0, vec1(-0.5));
  m.append_kernel(KernelUnit(vec1(0.0), vec1(4.0)), 1.0);
  const double before = m.value(vec1(0.23));
  m.append_kernel(KernelUnit(vec1(0.3), vec1(16.0)));
  CHECK(m.n_kernels() == 2);
  CHECK(m.theta()[1] == 0.0);
  CHECK(m.value(vec1(0.23)) == before);
}

TEST_CASE("set_theta validates the basis size") {
  FreeEnergyModel m(1.0, vec1(-0.5));
  m.append_kernel(KernelUnit(vec1(0.0), vec1(4.0)), 1.0);
  CHECK_THROWS_AS(m.set_theta(vec2(1.0, 2.0)), ContractViolation);
  Eigen::VectorXd bad = vec1(std::numeric_limits<double>::quiet_NaN());
  CHECK_THROWS_AS(m.set_theta(bad), ContractViolation);
}

TEST_CASE("set_beta guards positivity") {
  FreeEnergyModel m(1.0, vec1(-0.5));
  m.set_beta(3.5);
  CHECK(m.beta() == 3.5);
  CHECK_THROWS_AS(m.set_beta(0.0), ContractViolation);
  CHECK_THROWS_AS(m.set_beta(-1.0), ContractViolation);
}

TEST_CASE("pruning keeps the dominant kernels") {
  FreeEnergyModel m(1.0, vec1(-0.5));
  m.append_kernel(KernelUnit(vec1(0.0), vec1(4.0)), 10.0);
  m.append_kernel(KernelUnit(vec1(0.1), vec1(4.0)), 0.05);
  m.append_kernel(KernelUnit(vec1(0.2), vec1(4.0)), -0.5);

  SUBCASE("ratio keeps everything when all weights are equal") {
    FreeEnergyModel eq(1.0, vec1(-0.5));
    for (int j = 0; j < 3; ++j)
      eq.append_kernel(KernelUnit(vec1(0.1 * j), vec1(4.0)), 2.0);
    const auto kept = eq.prune(0.5);
    CHECK(kept.size() == 3);
    CHECK(eq.n_kernels() == 3);
  }

  SUBCASE("an empty model stays empty") {
    FreeEnergyModel none(1.0, vec1(-0.5));
    CHECK(none.prune(0.01).empty());
    CHECK(none.n_kernels() == 0);
  }

  SUBCASE("threshold is relative to the largest magnitude") {
    // cutoff = 0.01 * 10 = 0.1: drops only the 0.05 entry.
    const auto kept = m.prune(0.01);
    REQUIRE(kept.size() == 2);
    CHECK(kept[0] == 0);
    CHECK(kept[1] == 2);
    CHECK(m.n_kernels() == 2);
    CHECK(m.theta()[0] == 10.0);
    CHECK(m.theta()[1] == -0.5);
  }

  SUBCASE("pruning preserves the anchor pin and is bounded in sup norm") {
    FreeEnergyModel copy = m;
    const auto kept = copy.prune(0.01);
    REQUIRE(kept.size() == 2);
    CHECK(copy.value(vec1(-0.5)) == doctest::Approx(0.0).epsilon(1e-16));
    // Each pinned kernel is bounded by 1 in magnitude, so the surface can
    // move by at most the summed dropped |theta|.
    const double budget = 0.05;
    for (double z = -0.5; z <= 0.5; z += 0.01)
      CHECK(std::abs(copy.value(vec1(z)) - m.value(vec1(z))) <= budget + 1e-12);
  }

  SUBCASE("all-zero weights clear the basis") {
    FreeEnergyModel zero(1.0, vec1(-0.5));
    zero.append_kernel(KernelUnit(vec1(0.0), vec1(4.0)), 0.0);
    zero.append_kernel(KernelUnit(vec1(0.2), vec1(4.0)), 0.0);
    const auto kept = zero.prune(0.01);
    CHECK(kept.empty());
    CHECK(zero.n_kernels() == 0);
  }
}

TEST_CASE("value_with evaluates an external weight vector on the same basis") {
  FreeEnergyModel m(1.0, vec1(-0.5));
  m.append_kernel(KernelUnit(vec1(0.0), vec1(4.0)), 1.0);
  m.append_kernel(KernelUnit(vec1(0.25), vec1(9.0)), -2.0);
  const Eigen::VectorXd other = vec2(0.5, 0.5);
  const Eigen::VectorXd z = vec1(0.1);
  const double expected = 0.5 * m.pinned_kernel(0, z) + 0.5 * m.pinned_kernel(1, z);
  CHECK(m.value_with(other, z) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(m.value(z) != doctest::Approx(expected).epsilon(1e-14));
}

}  // TEST_SUITE
