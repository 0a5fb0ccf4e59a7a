#include "doctest.h"

#include <cmath>

#include "mcflab/mcfsolve.hpp"

using namespace mcflab;

namespace {

SolverConfig config(int n, int N, double dt, double t1) {
  SolverConfig c;
  c.n = n;
  c.N = N;
  c.dt = dt;
  c.t1 = t1;
  return c;
}

double max_error(const SolveResult& r, const Expr& exact) {
  const auto truth = sample_graph(exact, r.flow.grid);
  double e = 0.0;
  for (std::size_t k = 0; k < truth.f.size(); ++k) e = std::max(e, std::abs(truth.f[k] - r.flow.f[k]));
  return e;
}

}  // namespace

TEST_CASE("coefficients are symmetric with the stated spectrum") {
  Vec p(2);
  p << 0.7, -1.3;
  const Mat a = cutoff_coefficients(p);
  CHECK((a - a.transpose()).norm() == 0.0);
  CHECK((a * p).norm() == doctest::Approx(p.norm() / (1 + p.squaredNorm())));
  Vec perp(2);
  perp << 1.3, 0.7;
  CHECK((a * perp - perp).norm() < 1e-15);
}

TEST_CASE("planes are steady states and forced planes translate exactly") {
  for (int n : {2, 3}) {
    const auto plane = Expr::parse(n == 2 ? "0.4*x1 - 0.1" : "0.4*x1 - 0.3*x2 + 0.2", n);
    const auto r = solve(plane, AmbientField::zero(n), config(n, 16, 0.01, 0.2), plane);
    CHECK(max_error(r, plane) < 1e-12);
    CHECK(r.max_principle_ok);
    const auto forced = Expr::parse("0.3*t", n);
    std::vector<std::string> u(static_cast<std::size_t>(n), "0");
    u.back() = "0.3";
    const auto rf = solve(Expr::parse("0", n), AmbientField::parse(u, n), config(n, 16, 0.01, 1.0), forced);
    CHECK(max_error(rf, forced) < 1e-10);
    const auto tilt = Expr::parse("x1 + 0.3*t", n);
    const auto rt = solve(tilt, AmbientField::parse(u, n), config(n, 16, 0.01, 1.0), tilt);
    CHECK(max_error(rt, tilt) < 1e-10);
  }
}

TEST_CASE("tangential transport leaves a flat graph at rest") {
  const auto zero = Expr::parse("0", 2);
  const auto r = solve(zero, AmbientField::parse({"0.2", "0"}, 2), config(2, 16, 0.01, 0.5), zero);
  CHECK(max_error(r, zero) == 0.0);
}

TEST_CASE("grim reaper converges at second order") {
  const auto gr = Expr::parse("t - log(cos(x1))", 2);
  std::vector<Level> levels;
  for (int N : {16, 32, 64}) levels.push_back({N, std::pow(2.0 / N, 2)});
  const auto st = convergence_study(gr, AmbientField::zero(2), 2, 0.0, 0.5, levels, Scheme::SemiImplicit, 3);
  CHECK(st.errors.back() <= 1e-3);
  CHECK(st.order >= 1.7);
  CHECK(st.order <= 2.3);
  CHECK_FALSE(st.exact);
}

TEST_CASE("one step error is bounded by dt(dt + hx^2)") {
  const auto gr = Expr::parse("t - log(cos(x1))", 2);
  for (int N : {32, 64}) {
    const double h = 2.0 / N, dt = h * h;
    const auto r = solve(gr, AmbientField::zero(2), config(2, N, dt, dt), gr);
    CHECK(max_error(r, gr) <= 2.0 * dt * (dt + h * h));
  }
}

TEST_CASE("explicit scheme enforces its step restriction") {
  const auto gr = Expr::parse("t - log(cos(x1))", 3);
  auto c = config(3, 16, 0.01, 0.1);
  c.scheme = Scheme::Explicit;
  CHECK_THROWS_AS(solve(gr, AmbientField::zero(3), c, gr), SolverError);
  c.dt = std::pow(2.0 / 16, 2) / 4.0;
  const auto r = solve(gr, AmbientField::zero(3), c, gr);
  CHECK(max_error(r, gr) < 5e-3);
  CHECK(r.ellipticity_ok);
}

TEST_CASE("semi-implicit solves keep the maximum principle and ellipticity") {
  const auto bump = Expr::parse("0.3*cos(1.5*x1)*cos(1.5*x2)", 3);
  auto c = config(3, 24, 0.005, 0.2);
  c.boundary = BoundarySource::FrozenInitial;
  const auto r = solve(bump, AmbientField::zero(3), c);
  CHECK(r.ellipticity_ok);
  CHECK(r.max_principle_ok);
}

TEST_CASE("slope blow-up aborts") {
  auto c = config(2, 16, 0.01, 0.05);
  c.boundary = BoundarySource::FrozenInitial;
  c.slope_limit = 10.0;
  CHECK_THROWS_AS(solve(Expr::parse("20*x1", 2), AmbientField::zero(2), c), SolverError);
}
