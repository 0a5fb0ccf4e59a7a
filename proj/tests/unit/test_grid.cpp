#include "doctest.h"

#include <cmath>

#include "mcflab/grid.hpp"

using namespace mcflab;

TEST_CASE("grid layout and weights") {
  const auto g = build_grid(3, 8, 4, 0.0, 1.0);
  CHECK(g.hx == doctest::Approx(0.25));
  CHECK(g.dt == doctest::Approx(0.25));
  CHECK(g.spatial_size() == 81);
  CHECK(g.node({2, 5}) == 2 * 9 + 5);
  const auto idx = g.index(23);
  CHECK(idx[0] == 2);
  CHECK(idx[1] == 5);
  CHECK(g.shifted(23, 0, 1) == 32);
  CHECK(g.shifted(23, 1, -1) == 22);
  double area = 0.0;
  for (std::size_t k = 0; k < g.spatial_size(); ++k) area += g.spatial_weight(k);
  CHECK(area == doctest::Approx(4.0));
  double span = 0.0;
  for (int j = 0; j <= g.M; ++j) span += g.time_weight(j);
  CHECK(span == doctest::Approx(1.0));
  CHECK_THROWS_AS(build_grid(4, 8, 4, 0.0, 1.0), GridError);
  CHECK_THROWS_AS(build_grid(2, 8, 4, 1.0, 1.0), GridError);
}

TEST_CASE("derivatives are exact on quadratics") {
  const auto g = build_grid(3, 6, 6, 0.0, 1.0);
  const auto gf = sample_graph(Expr::parse("x1^2 - 3*x1*x2 + 2*x2 + t^2", 3), g);
  for (std::size_t k = 0; k < g.spatial_size(); ++k) {
    const Vec x = g.coords(k);
    const Vec grad = spatial_gradient(gf.slice(3), g, k);
    CHECK(grad[0] == doctest::Approx(2 * x[0] - 3 * x[1]).epsilon(1e-12));
    CHECK(grad[1] == doctest::Approx(-3 * x[0] + 2).epsilon(1e-12));
  }
  CHECK(time_derivative(gf, 0, 0) == doctest::Approx(0.0));
  CHECK(time_derivative(gf, 6, 0) == doctest::Approx(2.0));
}

TEST_CASE("sampling rejects height dependence and non-finite values") {
  const auto g = build_grid(2, 4, 2, 0.0, 1.0);
  CHECK_THROWS_AS(sample_graph(Expr::parse("xn", 2), g), SampleError);
  CHECK_THROWS_AS(sample_graph(Expr::parse("log(x1)", 2), g), SampleError);
}

TEST_CASE("seminorm of a linear-in-space profile is its time part") {
  // f = a x + b t: gradient differences vanish, time part is b dt / dt^{(1+a)/2}
  const auto g = build_grid(2, 8, 4, 0.0, 1.0);
  const auto gf = sample_graph(Expr::parse("2*x1 + 0.5*t", 2), g);
  const auto s = parabolic_seminorm(gf, 0.5);
  CHECK(s.exhaustive);
  CHECK(s.gradient_part == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(s.time_part == doctest::Approx(0.5 * std::pow(1.0, 1.0 - 0.75)).epsilon(1e-12));
}
