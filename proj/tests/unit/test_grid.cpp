#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "fekl/grid.hpp"
#include "fekl/kernel_model.hpp"

using namespace fekl;

namespace {

Eigen::VectorXd vec1(double x) { return Eigen::VectorXd::Constant(1, x); }

Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

FreeEnergyModel irrational_model() {
  FreeEnergyModel model(2.0, vec1(-0.5));
  model.append_kernel(KernelUnit(vec1(0.1), vec1(7.0)), 1.0 / 3.0);
  model.append_kernel(KernelUnit(vec1(-0.3), vec1(19.0)), -std::sqrt(2.0));
  return model;
}

// Hand-built 2D surface from a lambda, row-major with the last axis fastest.
template <class F>
FreeEnergyGrid surface(const Eigen::VectorXd& ax0, const Eigen::VectorXd& ax1, const F& f,
                       double beta, const Eigen::VectorXd& anchor) {
  FreeEnergyGrid g;
  g.beta = beta;
  g.axis_names = {"x", "y"};
  g.axes = {ax0, ax1};
  g.anchor = anchor;
  g.config_hash = "feedc0de";
  g.seed = 5;
  g.values.resize(static_cast<std::size_t>(ax0.size()) * ax1.size());
  for (Eigen::Index i = 0; i < ax0.size(); ++i)
    for (Eigen::Index j = 0; j < ax1.size(); ++j)
      g.values[static_cast<std::size_t>(i) * ax1.size() + j] = f(ax0[i], ax1[j]);
  return g;
}

Eigen::VectorXd linspace(double lo, double hi, int n) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
  return v;
}

std::string serialized(const FreeEnergyGrid& g) {
  std::ostringstream os;
  write_grid(g, os);
  return os.str();
}

FreeEnergyGrid parsed(const std::string& text) {
  std::istringstream is(text);
  return read_grid(is);
}

}  // namespace

TEST_SUITE("grid") {

TEST_CASE("evaluation reproduces the model on the lattice") {
  const FreeEnergyModel model = irrational_model();
  const Domain dom(vec1(-0.5), vec1(0.5));
  const FreeEnergyGrid g = evaluate_grid(model, dom, 41, {"z"}, "abc123", 9);

  CHECK(g.dim() == 1);
  CHECK(g.beta == model.beta());
  CHECK(g.seed == 9);
  CHECK(g.config_hash == "abc123");
  CHECK(g.axis_names[0] == "z");
  REQUIRE(g.axes[0].size() == 41);
  CHECK(g.axes[0][0] == -0.5);
  CHECK(g.axes[0][40] == 0.5);
  CHECK(g.total_points() == 41);
  g.validate();

  for (int i = 0; i < 41; ++i)
    CHECK(g.values[static_cast<std::size_t>(i)] == model.value(vec1(g.axes[0][i])));

  // The anchor sits on the lattice and pinned kernels vanish there exactly.
  CHECK(g.anchor[0] == -0.5);
  CHECK(g.anchor_index() == 0);
  CHECK(g.values[g.anchor_index()] == 0.0);

  SUBCASE("two dimensions flatten row-major, last axis fastest") {
    FreeEnergyModel m2(1.5, vec2(0.0, -1.0));
    m2.append_kernel(KernelUnit(vec2(0.4, 0.2), vec2(3.0, 11.0)), 0.7);
    const Domain d2(vec2(0.0, -1.0), vec2(1.0, 1.0));
    const FreeEnergyGrid g2 = evaluate_grid(m2, d2, 7, {"a", "b"}, "h", 1);
    REQUIRE(g2.total_points() == 49);
    for (int i = 0; i < 7; ++i)
      for (int j = 0; j < 7; ++j)
        CHECK(g2.values[static_cast<std::size_t>(i) * 7 + j] ==
              m2.value(vec2(g2.axes[0][i], g2.axes[1][j])));
    CHECK(g2.values[g2.anchor_index()] == 0.0);
  }

  SUBCASE("argument validation") {
    CHECK_THROWS_AS(evaluate_grid(model, dom, 1, {"z"}, "h", 0), ContractViolation);
    CHECK_THROWS_AS(evaluate_grid(model, dom, 5, {"z", "extra"}, "h", 0), ContractViolation);
  }
}

TEST_CASE("the nearest lattice point anchors an off-lattice reference") {
  FreeEnergyGrid g = surface(linspace(0.0, 2.0, 3), linspace(0.0, 3.0, 4),
                             [](double x, double y) { return x + y; }, 1.0, vec2(0.9, 2.9));
  // Nearest to 0.9 on {0,1,2} is index 1; nearest to 2.9 on {0,1,2,3} is 3.
  CHECK(g.anchor_index() == 1u * 4u + 3u);
}

TEST_CASE("serialization round-trips bit for bit") {
  const FreeEnergyModel model = irrational_model();
  const Domain dom(vec1(-0.5), vec1(0.5));
  const FreeEnergyGrid g = evaluate_grid(model, dom, 33, {"z"}, "cfg9", 1234567890123456789ull);

  const std::string text = serialized(g);
  const FreeEnergyGrid back = parsed(text);

  CHECK(back.beta == g.beta);
  CHECK(back.seed == g.seed);
  CHECK(back.config_hash == g.config_hash);
  CHECK(back.axis_names == g.axis_names);
  REQUIRE(back.dim() == 1);
  REQUIRE(back.axes[0].size() == g.axes[0].size());
  for (Eigen::Index i = 0; i < g.axes[0].size(); ++i) CHECK(back.axes[0][i] == g.axes[0][i]);
  CHECK(back.anchor[0] == g.anchor[0]);
  REQUIRE(back.values.size() == g.values.size());
  for (std::size_t i = 0; i < g.values.size(); ++i) CHECK(back.values[i] == g.values[i]);

  // A second pass through text changes nothing.
  CHECK(serialized(back) == text);

  SUBCASE("whole files too") {
    const auto path = std::filesystem::temp_directory_path() / "fekl_grid_io_test.tsv";
    write_grid_file(g, path.string());
    const FreeEnergyGrid from_file = read_grid_file(path.string());
    CHECK(serialized(from_file) == text);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(read_grid_file((path / "missing").string()), FileFormatError);
  }

  SUBCASE("two-dimensional surfaces round-trip as well") {
    const FreeEnergyGrid g2 =
        surface(linspace(-1.0, 1.0, 5), linspace(0.0, 1.0, 4),
                [](double x, double y) { return std::sin(3.0 * x) * y + x / 7.0; }, 2.5,
                vec2(-1.0, 0.0));
    const std::string t2 = serialized(g2);
    const FreeEnergyGrid b2 = parsed(t2);
    CHECK(serialized(b2) == t2);
    for (std::size_t i = 0; i < g2.values.size(); ++i) CHECK(b2.values[i] == g2.values[i]);
  }
}

TEST_CASE("corrupt input is rejected") {
  const FreeEnergyModel model = irrational_model();
  const Domain dom(vec1(-0.5), vec1(0.5));
  const std::string good = serialized(evaluate_grid(model, dom, 9, {"z"}, "cfg", 3));

  auto breaks = [&](const std::string& from, const std::string& to) {
    std::string bad = good;
    const auto pos = bad.find(from);
    REQUIRE(pos != std::string::npos);
    bad.replace(pos, from.size(), to);
    CHECK_THROWS_AS(parsed(bad), FileFormatError);
  };

  breaks("# free-energy grid", "# something else");
  breaks("# beta", "# beat");
  breaks("# axes 1", "# axes 0");
  breaks("# axes 1", "# axes 99");
  breaks("# seed 3", "# seed banana");
  breaks("# anchor", "# anchors");

  SUBCASE("truncated data") {
    std::string bad = good;
    bad.erase(bad.rfind('\n', bad.size() - 2) + 1);  // drop the last data row
    CHECK_THROWS_AS(parsed(bad), FileFormatError);
  }

  SUBCASE("garbage in a data row") {
    std::string bad = good;
    bad.replace(bad.rfind('\t') + 1, 4, "oops");
    CHECK_THROWS_AS(parsed(bad), FileFormatError);
  }

  SUBCASE("repeated coordinates must agree across rows") {
    const FreeEnergyGrid g2 = surface(linspace(0.0, 1.0, 3), linspace(0.0, 1.0, 3),
                                      [](double x, double y) { return x - y; }, 1.0,
                                      vec2(0.0, 0.0));
    std::string text = serialized(g2);
    // The first coordinate of the second data row repeats axis-0 point 0;
    // nudging it contradicts the first row.
    const auto header_end = text.find("free_energy\n") + 12;
    const auto row2 = text.find('\n', header_end) + 1;
    text.replace(row2, 1, "9");
    CHECK_THROWS_AS(parsed(text), FileFormatError);
  }

  SUBCASE("structural validation") {
    auto broken = [](auto&& tweak) {
      FreeEnergyGrid g = surface(linspace(0.0, 1.0, 3), linspace(0.0, 1.0, 3),
                                 [](double, double) { return 0.0; }, 1.0, vec2(0.0, 0.0));
      tweak(g);
      return g;
    };
    CHECK_THROWS_AS(broken([](FreeEnergyGrid& g) { g.beta = 0.0; }).validate(), FileFormatError);
    CHECK_THROWS_AS(broken([](FreeEnergyGrid& g) { g.axes.clear(); }).validate(), FileFormatError);
    CHECK_THROWS_AS(broken([](FreeEnergyGrid& g) { g.axis_names.pop_back(); }).validate(),
                    FileFormatError);
    CHECK_THROWS_AS(broken([](FreeEnergyGrid& g) { g.anchor = vec1(0.0); }).validate(),
                    FileFormatError);
    CHECK_THROWS_AS(broken([](FreeEnergyGrid& g) { g.axes[0] = vec1(0.0); }).validate(),
                    FileFormatError);
    CHECK_THROWS_AS(broken([](FreeEnergyGrid& g) { g.axes[1][2] = -1.0; }).validate(),
                    FileFormatError);
    CHECK_THROWS_AS(broken([](FreeEnergyGrid& g) { g.values.pop_back(); }).validate(),
                    FileFormatError);
    CHECK_THROWS_AS(broken([](FreeEnergyGrid& g) {
                      g.values[4] = std::numeric_limits<double>::quiet_NaN();
                    }).validate(),
                    FileFormatError);
    std::ostringstream sink;
    CHECK_THROWS_AS(write_grid(broken([](FreeEnergyGrid& g) { g.beta = -1.0; }), sink),
                    FileFormatError);
  }
}

TEST_CASE("marginalization against hand-computed trapezoid sums") {
  // Three integrated points at 0, 1, 3 give weights 0.5, 1.5, 1.0; with
  // A(x, y) = x y and beta = 1 every sum is checkable by hand.
  Eigen::VectorXd ys(3);
  ys << 0.0, 1.0, 3.0;
  Eigen::VectorXd xs(2);
  xs << 0.0, 1.0;
  const FreeEnergyGrid g =
      surface(xs, ys, [](double x, double y) { return x * y; }, 1.0, vec2(0.0, 0.0));

  const FreeEnergyGrid out = integrate_grid(g, 1);
  REQUIRE(out.dim() == 1);
  CHECK(out.axis_names[0] == "x");
  CHECK(out.axes[0].size() == 2);
  CHECK(out.beta == 1.0);
  CHECK(out.config_hash == g.config_hash);
  CHECK(out.seed == g.seed);
  CHECK(out.anchor[0] == 0.0);

  const double at0 = -std::log(0.5 + 1.5 + 1.0);
  const double at1 = -std::log(0.5 + 1.5 * std::exp(-1.0) + 1.0 * std::exp(-3.0));
  CHECK(out.values[0] == 0.0);  // re-anchored at its own lattice point
  CHECK(out.values[1] == doctest::Approx(at1 - at0).epsilon(1e-14));

  SUBCASE("the other orientation") {
    const FreeEnergyGrid keep_y = integrate_grid(g, 0);
    REQUIRE(keep_y.dim() == 1);
    CHECK(keep_y.axis_names[0] == "y");
    REQUIRE(keep_y.axes[0].size() == 3);
    // Integrating x out with weights {0.5, 0.5}: out(y) = -log(0.5 + 0.5 e^{-y}).
    const auto expect = [](double y) { return -std::log(0.5 + 0.5 * std::exp(-y)); };
    for (int j = 0; j < 3; ++j)
      CHECK(keep_y.values[static_cast<std::size_t>(j)] ==
            doctest::Approx(expect(ys[j]) - expect(0.0)).epsilon(1e-14));
    CHECK(keep_y.values[keep_y.anchor_index()] == 0.0);
  }
}

TEST_CASE("marginalization drops a separable coordinate exactly") {
  const auto f = [](double x) { return std::cos(2.0 * x) + 0.3 * x * x; };
  const auto g_of = [](double y) { return std::sin(y); };
  const FreeEnergyGrid g =
      surface(linspace(-1.0, 1.0, 17), linspace(0.0, 2.0, 11),
              [&](double x, double y) { return f(x) + g_of(y); }, 2.0, vec2(-1.0, 0.0));

  const FreeEnergyGrid out = integrate_grid(g, 1);
  for (Eigen::Index i = 0; i < out.axes[0].size(); ++i)
    CHECK(std::abs(out.values[static_cast<std::size_t>(i)] - (f(out.axes[0][i]) - f(-1.0))) <
          1e-10);

  SUBCASE("a surface flat along the kept axis collapses to zero") {
    const FreeEnergyGrid flat =
        surface(linspace(-1.0, 1.0, 9), linspace(0.0, 2.0, 9),
                [&](double, double y) { return g_of(y); }, 1.0, vec2(0.0, 0.0));
    const FreeEnergyGrid out2 = integrate_grid(flat, 1);
    for (double v : out2.values) CHECK(std::abs(v) < 1e-12);
  }
}

TEST_CASE("marginalizing a Gaussian well recovers the closed form") {
  // A(x, y) = x^2/2 + y^2/2 on [-6, 6]^2: integrating y out leaves x^2/2 after
  // re-anchoring at the origin.  The decaying tails make the trapezoid sum
  // accurate far beyond its generic order.
  const FreeEnergyGrid g =
      surface(linspace(-6.0, 6.0, 201), linspace(-6.0, 6.0, 201),
              [](double x, double y) { return 0.5 * x * x + 0.5 * y * y; }, 1.0,
              vec2(0.0, 0.0));
  const FreeEnergyGrid out = integrate_grid(g, 1);
  REQUIRE(out.axes[0].size() == 201);
  for (Eigen::Index i = 0; i < 201; ++i) {
    const double x = out.axes[0][i];
    CHECK(std::abs(out.values[static_cast<std::size_t>(i)] - 0.5 * x * x) < 1e-8);
  }

  SUBCASE("temperature enters through the exponent") {
    // At beta = 2 the same surface still re-anchors to x^2/2, and the
    // marginal constant it removed is log(sqrt(pi) erf(6 sqrt(2))) / 2.
    FreeEnergyGrid hot = g;
    hot.beta = 2.0;
    const FreeEnergyGrid out2 = integrate_grid(hot, 1);
    const double at3 = out2.values[static_cast<std::size_t>(150)];  // x = 3.0
    CHECK(out2.axes[0][150] == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(std::abs(at3 - 4.5) < 1e-8);
  }
}

TEST_CASE("marginalization argument errors") {
  const FreeEnergyModel model = irrational_model();
  const Domain dom(vec1(-0.5), vec1(0.5));
  const FreeEnergyGrid g1 = evaluate_grid(model, dom, 9, {"z"}, "h", 0);
  CHECK_THROWS_AS(integrate_grid(g1, 0), ContractViolation);  // not 2D

  const FreeEnergyGrid g2 = surface(linspace(0.0, 1.0, 3), linspace(0.0, 1.0, 3),
                                    [](double x, double y) { return x + y; }, 1.0,
                                    vec2(0.0, 0.0));
  CHECK_THROWS_AS(integrate_grid(g2, -1), ContractViolation);
  CHECK_THROWS_AS(integrate_grid(g2, 2), ContractViolation);

  FreeEnergyGrid bad = g2;
  bad.values[0] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(integrate_grid(bad, 1), FileFormatError);
}

}  // TEST_SUITE
