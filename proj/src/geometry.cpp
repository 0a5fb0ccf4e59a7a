#include "mcflab/geometry.hpp"

#include <cmath>

namespace mcflab {

Vec unit_normal(const Vec& grad) {
  const int k = static_cast<int>(grad.size());
  Vec nu(k + 1);
  const double q = std::sqrt(1.0 + grad.squaredNorm());
  nu.head(k) = -grad / q;
  nu[k] = 1.0 / q;
  return nu;
}

double face_flux(std::span<const double> f, const SpaceTimeGrid& grid, std::size_t node, int axis) {
  const double h = grid.hx;
  const std::size_t right = grid.shifted(node, axis, 1);
  const double s = (f[right] - f[node]) / h;
  double s2 = s * s;
  if (grid.n == 3) {
    const int other = 1 - axis;
    const double st = (f[grid.shifted(node, other, 1)] - f[grid.shifted(node, other, -1)] +
                       f[grid.shifted(right, other, 1)] - f[grid.shifted(right, other, -1)]) /
                      (4.0 * h);
    s2 += st * st;
  }
  return s / std::sqrt(1.0 + s2);
}

double curvature_at(std::span<const double> f, const SpaceTimeGrid& grid, std::size_t node) {
  if (grid.on_boundary(node)) return 0.0;
  double H = 0.0;
  for (int a = 0; a < grid.axes(); ++a) {
    H += (face_flux(f, grid, node, a) - face_flux(f, grid, grid.shifted(node, a, -1), a)) / grid.hx;
  }
  return H;
}

NodeGeometry node_geometry(const GraphFlow& gf, int j, std::size_t node) {
  const auto sl = gf.slice(j);
  NodeGeometry g;
  g.grad = spatial_gradient(sl, gf.grid, node);
  g.area = std::sqrt(1.0 + g.grad.squaredNorm());
  g.nu = unit_normal(g.grad);
  g.H = curvature_at(sl, gf.grid, node);
  return g;
}

NormalArea normal_and_area(const GraphFlow& gf, int j) {
  const auto sl = gf.slice(j);
  const std::size_t S = gf.grid.spatial_size();
  NormalArea out;
  out.nu.reserve(S);
  out.area.reserve(S);
  for (std::size_t node = 0; node < S; ++node) {
    const Vec g = spatial_gradient(sl, gf.grid, node);
    out.area.push_back(std::sqrt(1.0 + g.squaredNorm()));
    out.nu.push_back(unit_normal(g));
  }
  return out;
}

CurvatureField mean_curvature(const GraphFlow& gf, int j) {
  const auto sl = gf.slice(j);
  const std::size_t S = gf.grid.spatial_size();
  CurvatureField out;
  out.H.reserve(S);
  out.hvec.reserve(S);
  out.nu.reserve(S);
  for (std::size_t node = 0; node < S; ++node) {
    const Vec nu = unit_normal(spatial_gradient(sl, gf.grid, node));
    const double H = curvature_at(sl, gf.grid, node);
    out.H.push_back(H);
    out.hvec.push_back(H * nu);
    out.nu.push_back(nu);
  }
  return out;
}

VelocityField velocity(const GraphFlow& gf, int j) {
  if (gf.grid.M < 2) throw GridError("velocity needs at least three time levels");
  const auto sl = gf.slice(j);
  const std::size_t S = gf.grid.spatial_size();
  VelocityField out;
  out.one_sided = (j == 0 || j == gf.grid.M);
  out.vn.reserve(S);
  out.vvec.reserve(S);
  for (std::size_t node = 0; node < S; ++node) {
    const Vec g = spatial_gradient(sl, gf.grid, node);
    const double vn = time_derivative(gf, j, node) / std::sqrt(1.0 + g.squaredNorm());
    out.vn.push_back(vn);
    out.vvec.push_back(vn * unit_normal(g));
  }
  return out;
}

double divergence_identity_residual(const GraphFlow& gf, int j, const TestFunction& psi) {
  const auto& g = gf.grid;
  psi.require_inside(g);
  const auto sl = gf.slice(j);
  const double t = g.t(j);
  const std::size_t S = g.spatial_size();

  std::vector<double> p(S);
  Vec X(g.n);
  for (std::size_t node = 0; node < S; ++node) {
    X.head(g.axes()) = g.coords(node);
    X[g.axes()] = sl[node];
    p[node] = psi.value(X, t);
  }

  const double cell = std::pow(g.hx, g.axes());
  double pairing = 0.0, curvature = 0.0;
  for (std::size_t node = 0; node < S; ++node) {
    const auto idx = g.index(node);
    if (!g.on_boundary(node)) curvature += p[node] * curvature_at(sl, g, node);
    for (int a = 0; a < g.axes(); ++a) {
      if (idx[static_cast<std::size_t>(a)] == g.N) continue;
      if (g.n == 3) {
        const int ti = idx[static_cast<std::size_t>(1 - a)];
        if (ti == 0 || ti == g.N) continue;  // psi vanishes on these rows
      }
      const double dpsi = (p[g.shifted(node, a, 1)] - p[node]) / g.hx;
      if (dpsi != 0.0) pairing += dpsi * face_flux(sl, g, node, a);
    }
  }
  return (pairing + curvature) * cell;
}

W22Report w22_diagnostic(const GraphFlow& gf, double s) {
  const auto& g = gf.grid;
  if (!(s > 0.0 && s < 1.0)) throw GridError("margin s must lie in (0,1)");
  if (s * g.N < 2.0) throw GridError("inner region is empty: need s*N >= 2");
  const double edge = 1.0 - s;
  const int lo = static_cast<int>(std::ceil((1.0 - edge) / g.hx - 1e-9));
  const int hi = g.N - lo;
  const std::size_t S = g.spatial_size();
  const double h = g.hx;

  auto inner_weight = [&](std::size_t node) {
    const auto idx = g.index(node);
    double w = 1.0;
    for (int a = 0; a < g.axes(); ++a) {
      const int i = idx[static_cast<std::size_t>(a)];
      if (i < lo || i > hi) return 0.0;
      w *= (i == lo || i == hi) ? 0.5 * h : h;
    }
    return w;
  };

  W22Report r;
  for (int j = 0; j <= g.M; ++j) {
    const auto f = gf.slice(j);
    double hess = 0.0, fn = 0.0, hn = 0.0;
    for (std::size_t node = 0; node < S; ++node) {
      const double w = g.spatial_weight(node);
      fn += w * f[node] * f[node];
      const double H = curvature_at(f, g, node);
      hn += w * H * H;
      const double wi = inner_weight(node);
      if (wi == 0.0) continue;
      double frob = 0.0;
      for (int a = 0; a < g.axes(); ++a) {
        const double d2 = (f[g.shifted(node, a, 1)] - 2.0 * f[node] + f[g.shifted(node, a, -1)]) / (h * h);
        frob += d2 * d2;
      }
      if (g.n == 3) {
        const std::size_t pp = g.shifted(g.shifted(node, 0, 1), 1, 1), pm = g.shifted(g.shifted(node, 0, 1), 1, -1);
        const std::size_t mp = g.shifted(g.shifted(node, 0, -1), 1, 1), mm = g.shifted(g.shifted(node, 0, -1), 1, -1);
        const double dxy = (f[pp] - f[pm] - f[mp] + f[mm]) / (4.0 * h * h);
        frob += 2.0 * dxy * dxy;
      }
      hess += wi * frob;
    }
    r.hessian_inner.push_back(std::sqrt(hess));
    r.f_norm.push_back(std::sqrt(fn));
    r.h_norm.push_back(std::sqrt(hn));
    const double den = r.f_norm.back() + r.h_norm.back();
    r.ratio.push_back(den > 0.0 ? r.hessian_inner.back() / den : 0.0);
    r.max_ratio = std::max(r.max_ratio, r.ratio.back());
  }
  return r;
}

}  // namespace mcflab
