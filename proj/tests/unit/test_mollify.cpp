#include "doctest.h"

#include <cmath>

#include "mcflab/mollify.hpp"

using namespace mcflab;

namespace {

Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<int>(v.size()));
  int k = 0;
  for (double x : v) out[k++] = x;
  return out;
}

// Midpoint-rule moments of the unit kernel on a fine tensor grid.
struct BruteMoments {
  double mass = 0, grad_l1 = 0, second = 0;
};

BruteMoments brute(int n, int cells) {
  const auto& K = standard_kernel(n);
  const double h = 2.0 / cells;
  BruteMoments m;
  auto visit = [&](double u, double x1, double xnorm, double w) {
    if (u >= 1.0) return;
    const double g = K(u);
    const double du = 1e-7 * (1 - u);
    const double dg = (K(u + du) - K(u - du)) / (2 * du);
    m.mass += w * g;
    m.second += w * g * x1 * x1;
    m.grad_l1 += w * std::abs(dg) * 2.0 * xnorm;
  };
  for (int a = 0; a < cells; ++a) {
    const double z0 = -1 + (a + 0.5) * h;
    for (int b = 0; b < cells; ++b) {
      const double z1 = -1 + (b + 0.5) * h;
      if (n == 2) {
        visit(z0 * z0 + z1 * z1, z0, std::abs(z0), h * h);
        continue;
      }
      for (int c = 0; c < cells; ++c) {
        const double z2 = -1 + (c + 0.5) * h;
        visit(z0 * z0 + z1 * z1 + z2 * z2, z0, std::hypot(z0, z1), h * h * h);
      }
    }
  }
  return m;
}

}  // namespace

TEST_CASE("kernel constants agree with brute-force quadrature") {
  for (int n : {2, 3}) {
    const auto& K = standard_kernel(n);
    const auto m = brute(n, n == 2 ? 1000 : 120);
    CHECK(m.mass == doctest::Approx(1.0).epsilon(n == 2 ? 1e-6 : 1e-4));
    CHECK(m.grad_l1 == doctest::Approx(K.grad_l1).epsilon(n == 2 ? 1e-5 : 1e-3));
    CHECK(m.second == doctest::Approx(K.second_moment).epsilon(n == 2 ? 1e-5 : 1e-3));
  }
}

TEST_CASE("clipping profile") {
  const double eps = 0.1;
  CHECK(clip_profile(0.05, eps).value == 0.05);
  CHECK(clip_profile(-0.3, eps).value == doctest::Approx(-0.15));
  for (double s0 : {eps, 2 * eps}) {
    const auto a = clip_profile(s0 - 1e-9, eps), b = clip_profile(s0 + 1e-9, eps);
    CHECK(a.value == doctest::Approx(b.value).epsilon(1e-7));
    CHECK(a.d1 == doctest::Approx(b.d1).epsilon(1e-6));
    CHECK(std::abs(a.d2 - b.d2) < 1e-5);
  }
  double prev = -1.0;
  for (double s = -0.3; s <= 0.3; s += 1e-3) {
    const auto c = clip_profile(s, eps);
    CHECK(c.value >= prev);
    CHECK(std::abs(c.value) <= 2 * eps);
    prev = c.value;
  }
}

TEST_CASE("mollification preserves affine data and matches the second moment") {
  const auto g = build_grid(2, 200, 100, 0.0, 0.1);
  const double eps = 0.2;
  const auto c = mollify_graph(sample_graph(Expr::parse("0.7", 2), g), eps);
  const auto lin = mollify_graph(sample_graph(Expr::parse("x1 - 0.2", 2), g), eps);
  const auto sq = mollify_graph(sample_graph(Expr::parse("x1^2", 2), g), eps);
  const std::size_t mid = 100;
  const int j = 50;
  CHECK(c.at(j, mid) == doctest::Approx(0.7).epsilon(1e-14));
  CHECK(std::abs(lin.at(j, 130) - (g.x(130) - 0.2)) < 1e-14);
  CHECK(sq.at(j, mid) == doctest::Approx(eps * eps * standard_kernel(2).second_moment).epsilon(2e-3));
  CHECK(sq.raw_mass() == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(std::isnan(sq.at(0, mid)));
  CHECK_THROWS_AS(mollify_graph(sample_graph(Expr::parse("x1", 2), g), 0.005), MollifyError);
}

TEST_CASE("off-grid derivatives are consistent") {
  for (int n : {2, 3}) {
    const auto g = build_grid(n, n == 2 ? 64 : 24, 64, 0.0, 1.0);
    const auto gf = sample_graph(Expr::parse(n == 2 ? "sin(2*x1+t)" : "sin(2*x1+t)*cos(x2)", n), g);
    const auto mg = mollify_graph(gf, 0.3);
    const std::size_t node = g.node({g.N / 2 + 2, n == 3 ? g.N / 2 - 1 : 0});
    const auto a = mg.at_node(32, node);
    const auto b = mg(g.coords(node), g.t(32));
    CHECK(a.value == doctest::Approx(b.value).epsilon(1e-13));
    CHECK((a.grad - b.grad).norm() < 1e-11);
    CHECK((a.hess - b.hess).norm() < 1e-9);
    CHECK(a.dt == doctest::Approx(b.dt).epsilon(1e-11));
    Vec x = g.coords(node);
    x[0] += 0.013;
    const double t = 0.47, h = 1e-5;
    const auto e = mg(x, t);
    for (int k = 0; k < n - 1; ++k) {
      Vec xp = x, xm = x;
      xp[k] += h;
      xm[k] -= h;
      const auto ep = mg(xp, t), em = mg(xm, t);
      CHECK((ep.value - em.value) / (2 * h) == doctest::Approx(e.grad[k]).epsilon(1e-7));
      CHECK(((ep.grad - em.grad) / (2 * h) - e.hess.col(k)).norm() < 1e-5);
    }
    CHECK((mg(x, t + h).value - mg(x, t - h).value) / (2 * h) == doctest::Approx(e.dt).epsilon(1e-6));
  }
}

TEST_CASE("lemma bounds hold on smooth and linear data") {
  const auto g = build_grid(2, 80, 200, 0.0, 0.25);
  auto sq = mollify_graph(sample_graph(Expr::parse("x1^2", 2), g), 0.1);
  const auto b = lemma_bounds(sq, 1.0);
  CHECK(b.values_hold);
  CHECK(b.hessian_holds);
  CHECK(b.sup_diff == doctest::Approx(0.01 * standard_kernel(2).second_moment).epsilon(0.05));
  CHECK(sq.reach() == doctest::Approx(1.0 / b.c_rho));
  auto lin = mollify_graph(sample_graph(Expr::parse("0.5*x1", 2), g), 0.1);
  const auto bl = lemma_bounds(lin, 1.0);
  CHECK(bl.sup_diff < 1e-14);
  CHECK(bl.values_hold);
}

TEST_CASE("signed distance closed forms") {
  const auto g = build_grid(2, 64, 64, 0.0, 1.0);
  const auto flat = mollify_graph(sample_graph(Expr::parse("0", 2), g), 0.4);
  const auto sd = signed_distance(flat, vec({0.1, 0.3}), 0.5);
  CHECK(sd.dtilde == doctest::Approx(0.3));
  CHECK(sd.d == doctest::Approx(0.3));
  CHECK((sd.grad - vec({0.0, 1.0})).norm() < 1e-14);
  CHECK(sd.dt == 0.0);
  const auto below = signed_distance(flat, vec({0.1, -0.9}), 0.5);
  CHECK(below.dtilde == doctest::Approx(-0.9));
  CHECK(below.d == doctest::Approx(-0.6));

  // off the nodes the sampled kernel leaves a small sub-cell ripple
  const auto gt = build_grid(2, 160, 400, 0.0, 1.0);
  const auto tilt = mollify_graph(sample_graph(Expr::parse("x1", 2), gt), 0.2);
  const auto st = signed_distance(tilt, vec({0.0, 0.1}), 0.5);
  CHECK(st.dtilde == doctest::Approx(0.1 / std::sqrt(2.0)).epsilon(1e-9));
  CHECK(st.hess.norm() < 1e-5);
  const auto on = signed_distance(tilt, vec({0.2, 0.2}), 0.5);
  CHECK(std::abs(on.dtilde) < 1e-9);
  CHECK((on.grad - vec({-1.0, 1.0}) / std::sqrt(2.0)).norm() < 1e-7);
}

TEST_CASE("distance Hessian, eikonal property and time derivative") {
  const auto g = build_grid(2, 80, 400, 0.0, 1.0);
  const auto mg = mollify_graph(sample_graph(Expr::parse("0.3*sin(2*x1) + 0.2*t*t", 2), g), 0.15);
  const double t = 0.5;
  for (double off : {-0.05, 0.0, 0.08}) {
    const Vec X = vec({0.2, 0.3 * std::sin(0.4) + 0.05 + off});
    const auto sd = signed_distance(mg, X, t);
    CHECK(std::abs(sd.grad.norm() - 1.0) < 1e-6);
    const double h = 1e-5;
    for (int k = 0; k < 2; ++k) {
      Vec Xp = X, Xm = X;
      Xp[k] += h;
      Xm[k] -= h;
      const Vec col = (signed_distance(mg, Xp, t).grad - signed_distance(mg, Xm, t).grad) / (2 * h);
      CHECK((col - sd.hess.col(k)).norm() < 1e-5);
      CHECK((signed_distance(mg, Xp, t).d - signed_distance(mg, Xm, t).d) / (2 * h) ==
            doctest::Approx(sd.grad[k]).epsilon(1e-7));
    }
    const double dt = g.dt;
    const double fd = (signed_distance(mg, X, t + dt).d - signed_distance(mg, X, t - dt).d) / (2 * dt);
    CHECK(std::abs(fd - sd.dt) < 10 * dt * dt + 1e-8);
  }
}

TEST_CASE("projection maps on flat and curved graphs") {
  const auto g = build_grid(2, 64, 64, 0.0, 1.0);
  const auto flat = mollify_graph(sample_graph(Expr::parse("0", 2), g), 0.2);
  const auto rf = projection_maps(flat, 32);
  CHECK(rf.failures.empty());
  for (std::size_t i = 0; i < rf.nodes.size(); ++i) CHECK(rf.F[i][0] == g.coords(rf.nodes[i])[0]);
  CHECK(rf.max_gradF_minus_I == 0.0);

  for (int n : {2, 3}) {
    const auto gn = build_grid(n, n == 2 ? 80 : 32, 160, 0.0, 1.0);
    const auto gf = sample_graph(Expr::parse(n == 2 ? "0.3*sin(2*x1) + 0.1*t" : "0.3*sin(2*x1)*cos(x2) + 0.1*t", n), gn);
    auto mg = mollify_graph(gf, 0.2);
    lemma_bounds(mg, 1.0);
    const auto r = projection_maps(mg, 80);
    CHECK(r.failures.empty());
    CHECK(r.max_roundtrip <= 1e-8);
    CHECK(r.max_fd_jacobian < 1e-4);
    CHECK(r.max_eikonal < 1e-6);
    CHECK(r.max_curvature_ratio <= 1.0);
    CHECK(r.max_gradF_minus_I < 0.1);
  }
}

TEST_CASE("change of variables: static and forced flat graphs") {
  const auto g = build_grid(2, 64, 400, 0.0, 1.0);
  const auto phi = TestFunction::planar(vec({0.0}), 0.5, 0.5, 0.3);
  const auto still = mollify_graph(sample_graph(Expr::parse("0.2*x1^2", 2), g), 0.15);
  const auto cs = change_of_variables_check(still, phi, 2);
  CHECK(std::abs(cs.lhs) < 1e-12);
  CHECK(std::abs(cs.rhs) < 1e-12);
  const auto moving = mollify_graph(sample_graph(Expr::parse("0.3*t", 2), g), 0.15);
  const auto cm = change_of_variables_check(moving, phi, 2);
  CHECK(cm.gap < 1e-6);
  CHECK(cm.lhs < 0.0);
}
