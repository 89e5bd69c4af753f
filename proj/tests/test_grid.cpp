#include <doctest.h>

#include <cmath>
#include <numbers>

#include "becmf/grid.hpp"
#include "oracles.hpp"

using namespace becmf;

TEST_CASE("grid construction") {
  const Grid g = build_grid(1, 8.0, 256);
  CHECK(g.spacing() == 0.0625);
  CHECK(g.size() == 256);
  CHECK(g.coordinate(0) == doctest::Approx(-8.0 + 0.03125));
  CHECK(g.coordinate(255) == doctest::Approx(8.0 - 0.03125));
  CHECK(build_grid(2, 4.0, 32).size() == 1024);

  CHECK_THROWS_AS(build_grid(1, 8.0, 7), Error);
  CHECK_THROWS_AS(build_grid(1, 8.0, 6), Error);
  CHECK_THROWS_AS(build_grid(1, 0.0, 16), Error);
  CHECK_THROWS_AS(build_grid(4, 1.0, 16), Error);
}

TEST_CASE("row-major flattening") {
  const Grid g = build_grid(2, 1.0, 8);
  const std::size_t k = g.flatten({3, 5, 0});
  CHECK(k == 3 * 8 + 5);
  const auto idx = g.unflatten(k);
  CHECK(idx[0] == 3);
  CHECK(idx[1] == 5);
  const Point p = g.node(k);
  CHECK(p[0] == doctest::Approx(g.coordinate(3)));
  CHECK(p[1] == doctest::Approx(g.coordinate(5)));
}

TEST_CASE("inner products") {
  const Grid g = build_grid(1, 8.0, 256);
  const RealField one = sample(g, [](const Point&) { return 1.0; });
  CHECK(norm_sq(one) == doctest::Approx(16.0).epsilon(1e-14));

  const RealField even = sample(g, [](const Point& p) { return std::cos(p[0]); });
  const RealField odd = sample(g, [](const Point& p) { return p[0] * std::exp(-p[0] * p[0]); });
  CHECK(std::abs(inner(even, odd)) < 1e-14);

  const RealField gauss = sample(g, [](const Point& p) { return std::exp(-0.5 * p[0] * p[0]); });
  CHECK(std::abs(norm_sq(gauss) - std::sqrt(std::numbers::pi)) < 1e-10);

  const RealField other(build_grid(1, 8.0, 128));
  CHECK_THROWS_AS(inner(one, other), Error);
}

TEST_CASE("midpoint quadrature converges at second order") {
  // bump with nonzero derivatives at the edges of a finite window
  auto f = [](const Point& p) { return std::cos(p[0]) + p[0] * p[0]; };
  const double L = 1.0;
  const double exact = 2.0 * std::sin(1.0) + 2.0 / 3.0;
  std::vector<double> hs, errs;
  for (int n : {16, 32, 64, 128}) {
    const Grid g = build_grid(1, L, n);
    hs.push_back(g.spacing());
    errs.push_back(std::abs(integrate(g, sample(g, f).values()) - exact));
  }
  const double slope = oracle::loglog_slope(hs, errs);
  CHECK(slope == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("kinetic energy matches the gradient form") {
  const Grid g = build_grid(1, 8.0, 512);
  const Vec u = sample(g, [](const Point& p) { return std::exp(-p[0] * p[0]); }).values();
  // int |u'|^2 = sqrt(pi/2)
  CHECK(kinetic_energy(g, u) == doctest::Approx(std::sqrt(std::numbers::pi / 2.0)).epsilon(1e-3));
  const Vec d = gradient(g, u, 0);
  const double x = g.coordinate(270);
  CHECK(d[270] == doctest::Approx(-2.0 * x * std::exp(-x * x)).epsilon(1e-3));
}
