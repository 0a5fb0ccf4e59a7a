#include "doctest.h"

#include <cmath>
#include <random>

#include "mcflab/geometry.hpp"

using namespace mcflab;

TEST_CASE("normal is unit and upward") {
  Vec g(2);
  g << 0.3, -1.2;
  const Vec nu = unit_normal(g);
  CHECK(nu.norm() == doctest::Approx(1.0));
  CHECK(nu[2] > 0.0);
  CHECK(nu.head(2).dot(g) == doctest::Approx(-g.squaredNorm() / std::sqrt(1 + g.squaredNorm())));
}

TEST_CASE("curvature of circle and sphere caps") {
  const double R = 4.0;
  for (int n : {2, 3}) {
    const auto g = build_grid(n, 64, 2, 0.0, 1.0);
    const auto e = Expr::parse(n == 2 ? "sqrt(16 - x1^2)" : "sqrt(16 - x1^2 - x2^2)", n);
    const auto gf = sample_graph(e, g);
    const auto c = mean_curvature(gf, 0);
    const std::size_t mid = g.node({32, n == 3 ? 32 : 0});
    CHECK(c.H[mid] == doctest::Approx(-(n - 1) / R).epsilon(1e-3));
    CHECK(c.H[0] == 0.0);
  }
}

TEST_CASE("divergence identity holds for arbitrary samples") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-0.5, 0.5);
  for (int n : {2, 3}) {
    const auto g = build_grid(n, 24, 4, 0.0, 1.0);
    std::vector<double> f(g.size());
    for (auto& v : f) v = U(rng);
    const auto gf = make_flow(g, f);
    Vec c = Vec::Zero(n);
    c[0] = 0.1;
    const auto psi = TestFunction::bump(c, 0.5, 0.6);
    CHECK(std::abs(divergence_identity_residual(gf, 2, psi)) < 1e-12);
  }
}

TEST_CASE("w22 diagnostic on a paraboloid") {
  const auto g = build_grid(3, 32, 2, 0.0, 1.0);
  const auto gf = sample_graph(Expr::parse("x1^2 + x2^2", 3), g);
  const auto r = w22_diagnostic(gf, 0.5);
  // Hessian 2I on [-0.5,0.5]^2: ||D^2 f||_2 = sqrt(8 * 1)
  CHECK(r.hessian_inner[0] == doctest::Approx(std::sqrt(8.0)).epsilon(1e-12));
  CHECK(r.max_ratio > 0.0);
}
