#include "doctest.h"

#include <cmath>

#include "mcflab/weakform.hpp"

using namespace mcflab;

namespace {

Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<int>(v.size()));
  int k = 0;
  for (double x : v) out[k++] = x;
  return out;
}

}  // namespace

TEST_CASE("lpq norm closed forms") {
  const auto g = build_grid(2, 16, 1000, 0.0, 1.0);
  const auto flat = sample_graph(Expr::parse("0", 2), g);
  CHECK(lpq_norm(flat, AmbientField::zero(2), 2, 2) == 0.0);
  CHECK(lpq_norm(flat, AmbientField::parse({"0", "1"}, 2), 2, 2) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-13));
  // trapezoid in t of 4 t^4 carries an h^2 error of 16/(12 M^2)
  CHECK(lpq_norm(flat, AmbientField::parse({"0", "t"}, 2), 2, 4) == doctest::Approx(std::pow(0.8, 0.25)).epsilon(1e-6));
  CHECK_THROWS_AS(lpq_norm(flat, AmbientField::zero(2), 1.5, 2), WeakFormError);
}

TEST_CASE("exponent arithmetic") {
  const auto a = admissibility(1, 4, 4);
  CHECK(a.admissible);
  CHECK(a.alpha == doctest::Approx(0.25).epsilon(1e-15));
  const auto b = theorem_exponents(3, 2.5, 4);
  CHECK(b.admissible);
  CHECK(b.p == doctest::Approx(10.0).epsilon(1e-14));
  CHECK(b.q == 4.0);
  CHECK(b.alpha == doctest::Approx(0.3).epsilon(1e-14));
  CHECK_FALSE(admissibility(2, 2, 2).admissible);
  CHECK(admissibility(2, 2, 2).alpha == doctest::Approx(-1.0));
  // gate n gamma / (2(gamma-1)) = 2 for n = 3, gamma = 4
  CHECK_FALSE(theorem_exponents(3, 2.0, 4).admissible);
  CHECK_FALSE(theorem_exponents(3, 1.9, 4).admissible);
  CHECK_FALSE(theorem_exponents(2, 1.3, 100).admissible);
  CHECK_FALSE(theorem_exponents(3, 2.5, 2.0).admissible);
  const auto big = theorem_exponents(2, 3.0, 4);
  CHECK(big.any_p);
  CHECK(big.alpha_max == doctest::Approx(0.5));
}

TEST_CASE("brakke report components sum to total") {
  const auto g = build_grid(2, 32, 64, 0.0, 1.0);
  const auto gf = sample_graph(Expr::parse("0.2*sin(2*x1) + 0.1*t*x1", 2), g);
  const auto u = AmbientField::parse({"0.1", "x1*t"}, 2);
  const auto phi = TestFunction::bump(vec({0.1, 0.0}), 0.5, 0.5);
  const auto r = brakke_residual(gf, u, phi);
  CHECK(r.total == r.curvature_term + r.transport_term + r.time_term);
  CHECK(std::isfinite(r.quad_error));
}

TEST_CASE("static flat graph and forced flat solution") {
  // the residual is pure time quadrature of a bump here; M = 64 leaves ~2e-5
  const auto g = build_grid(2, 64, 128, 0.0, 1.0);
  const auto phi = TestFunction::bump(vec({0.0, 0.2}), 0.5, 0.6);
  const auto flat = sample_graph(Expr::parse("0", 2), g);
  CHECK(std::abs(brakke_residual(flat, AmbientField::zero(2), phi).total) < 1e-12);
  const auto forced = sample_graph(Expr::parse("0.3*t", 2), g);
  const auto r = brakke_residual(forced, AmbientField::parse({"0", "0.3"}, 2), phi);
  CHECK(std::abs(r.total) < 1e-6);
  CHECK(std::abs(velocity_identity_residual(forced, phi)) < 1e-6);
  const auto pde = pde_residual(forced, AmbientField::parse({"0", "0.3"}, 2));
  CHECK(pde.max_abs < 1e-12);
}

TEST_CASE("velocity identity converges at second order for arbitrary motion") {
  double prev = 0.0;
  const auto phi = TestFunction::bump(vec({0.1, 0.6}), 0.5, 0.5);
  for (int N : {32, 64}) {
    const auto g = build_grid(2, N, N, 0.0, 1.0);
    // not a solution of any motion law
    const auto gf = sample_graph(Expr::parse("0.5*sin(x1 + 2*t) + t^2", 2), g);
    const double r = std::abs(velocity_identity_residual(gf, phi));
    if (prev > 0.0) CHECK(prev / r > 3.0);
    prev = r;
  }
}

TEST_CASE("pde residual of a static circle cap is minus its curvature") {
  const auto g = build_grid(2, 64, 4, 0.0, 1.0);
  const auto gf = sample_graph(Expr::parse("sqrt(16 - x1^2)", 2), g);
  const auto r = pde_residual(gf, AmbientField::zero(2));
  CHECK(r.max_abs == doctest::Approx(0.25).epsilon(2e-2));
}

TEST_CASE("reversed grim reaper violates the Brakke inequality") {
  const auto g = build_grid(2, 64, 256, 0.0, 0.5);
  const auto gf = sample_graph(Expr::parse("-t - log(cos(x1))", 2), g);
  const auto fwd = sample_graph(Expr::parse("t - log(cos(x1))", 2), g);
  double most = 0.0;
  for (double c : {-0.4, 0.0, 0.4}) {
    Vec y(1);
    y << c;
    const double t = 0.25;
    auto phi = TestFunction::bump(vec({c, -t - std::log(std::cos(c))}), t, 0.3);
    most = std::min(most, brakke_residual(gf, AmbientField::zero(2), phi).total);
    auto phif = TestFunction::bump(vec({c, t - std::log(std::cos(c))}), t, 0.3);
    CHECK(std::abs(brakke_residual(fwd, AmbientField::zero(2), phif).total) < 1e-3);
  }
  CHECK(most < -1e-3);
}

TEST_CASE("blow-up on a static circle cap approaches the tangent-plane pairing") {
  const auto g = build_grid(2, 256, 2048, 0.0, 1.0);
  const auto gf = sample_graph(Expr::parse("sqrt(16 - x1^2)", 2), g);
  BlowupSpec spec;
  spec.y = Vec::Zero(1);
  spec.s = 0.5;
  spec.lambdas = {0.4, 0.2, 0.1};
  spec.offset = vec({0.0, -0.5});
  const auto res = blowup_residual(gf, AmbientField::zero(2), spec);
  CHECK(res.limit != 0.0);
  REQUIRE(res.entries.back().resolved);
  CHECK(res.entries.back().value == doctest::Approx(res.limit).epsilon(0.1));
  // psi_l mass vanishes linearly while its gradient mass stays bounded
  CHECK(res.entries[2].mass < 0.6 * res.entries[0].mass);
  CHECK(res.entries[2].gradient_mass == doctest::Approx(res.entries[0].gradient_mass).epsilon(0.2));
}
