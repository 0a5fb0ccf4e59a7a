#include "mcflab/weakform.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>

namespace mcflab {

namespace {

constexpr double kExact = 1e-14;

struct GraphPoint {
  Vec X;
  Vec grad;
  double q = 1.0;
  Vec nu;
  double H = 0.0;
  double ft = 0.0;
  double weight = 0.0;  // trapezoid weight times area element
};

/// Calls fn(j, node, point) for every grid node that can lie in the support of phi.
template <class Fn>
void for_support(const GraphFlow& gf, const TestFunction& phi, bool need_ft, Fn&& fn) {
  const auto& g = gf.grid;
  const auto box = phi.support_box(g);
  const int ilo = box.lo[0], ihi = box.hi[0];
  const int klo = g.n == 3 ? box.lo[1] : 0, khi = g.n == 3 ? box.hi[1] : 0;
  GraphPoint P;
  P.X.resize(g.n);
  for (int j = box.jlo; j <= box.jhi; ++j) {
    const auto sl = gf.slice(j);
    for (int i = ilo; i <= ihi; ++i) {
      for (int k = klo; k <= khi; ++k) {
        const std::size_t node = g.node({i, k});
        P.X.head(g.axes()) = g.coords(node);
        P.X[g.axes()] = sl[node];
        P.grad = spatial_gradient(sl, g, node);
        P.q = std::sqrt(1.0 + P.grad.squaredNorm());
        P.nu = unit_normal(P.grad);
        P.H = curvature_at(sl, g, node);
        P.ft = need_ft ? time_derivative(gf, j, node) : 0.0;
        P.weight = g.spatial_weight(node) * g.time_weight(j) * P.q;
        fn(j, node, P);
      }
    }
  }
}

std::optional<GraphFlow> coarsen(const GraphFlow& gf) {
  const auto& g = gf.grid;
  if (g.N % 2 != 0 || g.M % 2 != 0 || g.N / 2 < 4 || g.M / 2 < 2) return std::nullopt;
  const auto c = build_grid(g.n, g.N / 2, g.M / 2, g.t0, g.t1);
  std::vector<double> f(c.size());
  for (int j = 0; j <= c.M; ++j) {
    for (std::size_t node = 0; node < c.spatial_size(); ++node) {
      const auto idx = c.index(node);
      const std::size_t fine = g.node({2 * idx[0], 2 * idx[1]});
      f[static_cast<std::size_t>(j) * c.spatial_size() + node] = gf.at(2 * j, fine);
    }
  }
  return make_flow(c, std::move(f));
}

WeakFormReport brakke_single(const GraphFlow& gf, const AmbientField& u, const TestFunction& phi) {
  WeakFormReport r;
  const bool zero_u = u.is_zero();
  for_support(gf, phi, false, [&](int j, std::size_t node, const GraphPoint& P) {
    const auto v = phi(P.X, gf.grid.t(j));
    if (v.value == 0.0 && v.dt == 0.0 && v.grad.isZero()) return;
    const double gn = v.grad.dot(P.nu);
    r.curvature_term += P.weight * (P.H * gn - v.value * P.H * P.H);
    if (!zero_u) {
      const double un = u.at_node(gf.grid, j, node, P.X).dot(P.nu);
      r.transport_term += P.weight * un * (gn - v.value * P.H);
    }
    r.time_term += P.weight * v.dt;
  });
  r.total = r.curvature_term + r.transport_term + r.time_term;
  return r;
}

void check_exponent_range(double p, double q) {
  if (!(p >= 2.0 && std::isfinite(p)) || !(q >= 2.0 && std::isfinite(q)))
    throw WeakFormError("exponents p, q must lie in [2, inf)");
}

}  // namespace

double lpq_norm(const GraphFlow& gf, const AmbientField& u, double p, double q) {
  check_exponent_range(p, q);
  if (u.dimension() != gf.grid.n) throw WeakFormError("transport field dimension does not match the flow");
  const auto& g = gf.grid;
  const std::size_t S = g.spatial_size();
  double outer = 0.0;
  Vec X(g.n);
  for (int j = 0; j <= g.M; ++j) {
    const auto sl = gf.slice(j);
    double inner = 0.0;
    for (std::size_t node = 0; node < S; ++node) {
      X.head(g.axes()) = g.coords(node);
      X[g.axes()] = sl[node];
      const double a = u.at_node(g, j, node, X).norm();
      if (!std::isfinite(a)) throw WeakFormError("non-finite transport value at level " + std::to_string(j));
      if (a == 0.0) continue;
      const double area = std::sqrt(1.0 + spatial_gradient(sl, g, node).squaredNorm());
      inner += g.spatial_weight(node) * std::pow(a, p) * area;
    }
    if (inner > 0.0) outer += g.time_weight(j) * std::pow(inner, q / p);
  }
  const double r = std::pow(outer, 1.0 / q);
  if (!std::isfinite(r)) throw WeakFormError("non-finite L^{p,q} norm");
  return r;
}

Exponents admissibility(int k, double p, double q) {
  if (k < 1) throw WeakFormError("surface dimension k must be positive");
  check_exponent_range(p, q);
  Exponents e;
  e.k = k;
  e.p = p;
  e.q = q;
  e.alpha = 1.0 - k / p - 2.0 / q;
  e.admissible = e.alpha > kExact;
  if (!e.admissible) e.reason = "alpha = 1 - k/p - 2/q is not positive";
  return e;
}

Exponents theorem_exponents(int n, double beta, double gamma) {
  if (n < 2) throw WeakFormError("ambient dimension must be at least 2");
  Exponents e;
  e.k = n - 1;
  e.n = n;
  e.beta = beta;
  e.gamma = gamma;
  e.q = gamma;
  if (!(gamma > 2.0 && std::isfinite(gamma))) {
    e.reason = "gamma must satisfy 2 < gamma < inf";
    return e;
  }
  const double gate = n * gamma / (2.0 * (gamma - 1.0));
  if (!(beta > gate + kExact) || !std::isfinite(beta)) {
    e.reason = "beta must exceed n*gamma/(2(gamma-1)) = " + std::to_string(gate);
    return e;
  }
  if (n == 2 && beta < 4.0 / 3.0 - kExact) {
    e.reason = "beta must be at least 4/3 when n = 2";
    return e;
  }
  if (beta < n) {
    e.p = beta * (n - 1) / (n - beta);
    e.alpha = 2.0 - n / beta - 2.0 / gamma;
    e.admissible = e.alpha > kExact;
    const double check = 1.0 - e.k / e.p - 2.0 / e.q;
    if (std::abs(check - e.alpha) > 1e-12) e.reason = "internal exponent mismatch";
    else if (!e.admissible) e.reason = "alpha is not positive";
    return e;
  }
  e.any_p = true;
  e.p = std::numeric_limits<double>::infinity();
  e.alpha_max = 1.0 - 2.0 / gamma;
  e.alpha = e.alpha_max;
  e.admissible = true;
  e.reason = "beta >= n: any p > 2, any alpha in (0, 1 - 2/gamma)";
  return e;
}

WeakFormReport brakke_residual(const GraphFlow& gf, const AmbientField& u, const TestFunction& phi) {
  phi.require_inside(gf.grid);
  if (u.dimension() != gf.grid.n) throw WeakFormError("transport field dimension does not match the flow");
  auto r = brakke_single(gf, u, phi);
  r.quad_error = std::numeric_limits<double>::quiet_NaN();
  if (!u.is_sampled()) {
    if (auto coarse = coarsen(gf)) {
      const auto rc = brakke_single(*coarse, u, phi);
      r.quad_error = std::abs(r.total - rc.total) / 3.0;
    }
  }
  return r;
}

double velocity_identity_residual(const GraphFlow& gf, const TestFunction& psi) {
  psi.require_inside(gf.grid);
  if (gf.grid.M < 2) throw WeakFormError("velocity needs at least three time levels");
  double total = 0.0;
  for_support(gf, psi, true, [&](int j, std::size_t, const GraphPoint& P) {
    const auto v = psi(P.X, gf.grid.t(j));
    if (v.value == 0.0 && v.dt == 0.0 && v.grad.isZero()) return;
    const double vn = P.ft / P.q;
    total += P.weight * ((v.grad.dot(P.nu) - v.value * P.H) * vn + v.dt);
  });
  return total;
}

PdeResidual pde_residual(const GraphFlow& gf, const AmbientField& u) {
  const auto& g = gf.grid;
  if (g.M < 2) throw WeakFormError("residual needs at least three time levels");
  const std::size_t S = g.spatial_size();
  PdeResidual r;
  r.field.assign(g.size(), 0.0);
  double l2 = 0.0;
  Vec X(g.n);
  for (int j = 1; j < g.M; ++j) {
    const auto sl = gf.slice(j);
    for (std::size_t node = 0; node < S; ++node) {
      if (g.on_boundary(node)) continue;
      const Vec grad = spatial_gradient(sl, g, node);
      const double q = std::sqrt(1.0 + grad.squaredNorm());
      X.head(g.axes()) = g.coords(node);
      X[g.axes()] = sl[node];
      const double un = u.is_zero() ? 0.0 : u.at_node(g, j, node, X).dot(unit_normal(grad));
      const double res = time_derivative(gf, j, node) / q - curvature_at(sl, g, node) - un;
      r.field[static_cast<std::size_t>(j) * S + node] = res;
      r.max_abs = std::max(r.max_abs, std::abs(res));
      l2 += g.spatial_weight(node) * g.time_weight(j) * res * res;
    }
  }
  r.l2 = std::sqrt(l2);
  return r;
}

TestFunction blowup_function(const BlowupSpec& spec, double height, double lambda, int n) {
  TestFunction psi;
  psi.center = Vec(n);
  psi.center.head(n - 1) = spec.y + lambda * spec.offset.head(n - 1);
  psi.center[n - 1] = height + lambda * spec.offset[n - 1];
  psi.time_center = spec.s;
  psi.radius = lambda * spec.radius;
  psi.time_radius = lambda * lambda;
  psi.profile = spec.profile;
  psi.separable = true;
  psi.amplitude = std::pow(lambda, -n);
  return psi;
}

namespace {

/// int_{R^{n-1}} grad psi~(z, p.z) sqrt(1+|p|^2) dz for psi~(z) = b(|z - o|^2 / R^2).
Vec tangent_plane_gradient(const BlowupSpec& spec, const Vec& p) {
  const int n = static_cast<int>(spec.offset.size());
  const double q = std::sqrt(1.0 + p.squaredNorm());
  const double R = spec.radius;
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  Vec out = Vec::Zero(n);
  for (int comp = 0; comp < n; ++comp) {
    auto integrand = [&](const Vec& z) {
      Vec Z(n);
      Z.head(n - 1) = z;
      Z[n - 1] = p.dot(z);
      const Vec d = Z - spec.offset;
      const double uu = d.squaredNorm() / (R * R);
      if (uu >= 1.0) return 0.0;
      return bump_derivative(spec.profile, uu) * 2.0 * d[comp] / (R * R) * q;
    };
    // The tilted plane meets the support inside the box |z - o'| < R.
    const double a0 = spec.offset[0] - R, b0 = spec.offset[0] + R;
    if (n == 2) {
      out[comp] = GK::integrate([&](double z0) { Vec z(1); z << z0; return integrand(z); }, a0, b0, 12, 1e-13);
    } else {
      const double a1 = spec.offset[1] - R, b1 = spec.offset[1] + R;
      out[comp] = GK::integrate(
          [&](double z0) {
            return GK::integrate([&](double z1) { Vec z(2); z << z0, z1; return integrand(z); }, a1, b1, 10, 1e-12);
          },
          a0, b0, 10, 1e-12);
    }
  }
  return out;
}

}  // namespace

BlowupResult blowup_residual(const GraphFlow& gf, const AmbientField& u, const BlowupSpec& spec) {
  const auto& g = gf.grid;
  if (spec.y.size() != g.axes() || spec.offset.size() != g.n)
    throw WeakFormError("blow-up point and offset must match the flow dimension");
  if (g.M < 2) throw WeakFormError("blow-up needs at least three time levels");
  std::array<int, 2> yi{0, 0};
  for (int k = 0; k < g.axes(); ++k) {
    const double pos = (spec.y[k] + 1.0) / g.hx;
    yi[static_cast<std::size_t>(k)] = static_cast<int>(std::lround(pos));
    if (std::abs(pos - std::lround(pos)) > 1e-9) throw WeakFormError("blow-up point must be a grid node");
  }
  const double sj = (spec.s - g.t0) / g.dt;
  if (std::abs(sj - std::lround(sj)) > 1e-9) throw WeakFormError("blow-up time must be a grid level");
  const int js = static_cast<int>(std::lround(sj));
  const std::size_t ynode = g.node(yi);
  if (g.on_boundary(ynode) || js <= 0 || js >= g.M) throw WeakFormError("blow-up point must be interior");

  const auto sl = gf.slice(js);
  BlowupResult res;
  {
    const Vec grad = spatial_gradient(sl, g, ynode);
    const Vec nu = unit_normal(grad);
    const double q = std::sqrt(1.0 + grad.squaredNorm());
    Vec X(g.n);
    X.head(g.axes()) = spec.y;
    X[g.axes()] = sl[ynode];
    const double un = u.is_zero() ? 0.0 : u.at_node(g, js, ynode, X).dot(nu);
    const double H = curvature_at(sl, g, ynode);
    const double vn = time_derivative(gf, js, ynode) / q;
    res.w = (H + un - vn) * nu;
    res.limit = tangent_plane_gradient(spec, grad).dot(res.w);
  }

  const double height = sl[ynode];
  const bool zero_u = u.is_zero();
  for (double lambda : spec.lambdas) {
    BlowupEntry e;
    e.lambda = lambda;
    const auto psi = blowup_function(spec, height, lambda, g.n);
    if (!psi.supported_inside(g)) {
      e.note = "support leaves the domain";
    } else if (psi.radius < spec.min_cells * g.hx) {
      e.note = "spatial support below resolution";
    } else if (psi.time_radius < 4.0 * g.dt) {
      e.note = "time support below resolution";
    } else {
      e.resolved = true;
    }
    if (e.resolved) {
      for_support(gf, psi, true, [&](int j, std::size_t node, const GraphPoint& P) {
        const auto v = psi(P.X, g.t(j));
        if (v.value == 0.0 && v.grad.isZero()) return;
        const double un = zero_u ? 0.0 : u.at_node(g, j, node, P.X).dot(P.nu);
        const double wn = P.H + un - P.ft / P.q;  // w = wn * nu
        e.gradient_term += P.weight * v.grad.dot(P.nu) * wn;
        e.curvature_term += P.weight * v.value * P.H * wn;
        e.mass += P.weight * v.value;
        e.gradient_mass += P.weight * v.grad.norm();
      });
      e.value = e.gradient_term - e.curvature_term;
    }
    res.entries.push_back(std::move(e));
  }
  return res;
}

}  // namespace mcflab
