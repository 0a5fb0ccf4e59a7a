#include "mcflab/test_function.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <algorithm>
#include <cmath>

namespace mcflab {

double bump_value(BumpProfile p, double u) noexcept {
  if (u >= 1.0) return 0.0;
  if (p == BumpProfile::Polynomial) {
    const double w = 1.0 - u;
    return w * w * w;
  }
  return std::exp(1.0 - 1.0 / (1.0 - u));
}

double bump_derivative(BumpProfile p, double u) noexcept {
  if (u >= 1.0) return 0.0;
  const double w = 1.0 - u;
  if (p == BumpProfile::Polynomial) return -3.0 * w * w;
  return -bump_value(p, u) / (w * w);
}

double bump_line_integral(BumpProfile p) {
  if (p == BumpProfile::Polynomial) return 32.0 / 35.0;
  static const double smooth = [] {
    auto f = [](double x) { return bump_value(BumpProfile::Smooth, x * x); };
    return 2.0 * boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, 1.0, 15, 1e-14);
  }();
  return smooth;
}

TestFunction::Value TestFunction::operator()(const Vec& X, double t) const {
  const int dims = n();
  const int used = uses_height ? dims : dims - 1;
  Value v;
  v.grad = Vec::Zero(dims);
  double ux = 0.0;
  for (int k = 0; k < used; ++k) {
    const double d = (X[k] - center[k]) / radius;
    ux += d * d;
  }
  const double tau = (t - time_center) / time_radius;
  if (!separable) {
    const double u = ux + tau * tau;
    if (u >= 1.0) return v;
    const double b = bump_value(profile, u);
    const double db = bump_derivative(profile, u);
    v.value = amplitude * b;
    for (int k = 0; k < used; ++k) v.grad[k] = amplitude * db * 2.0 * (X[k] - center[k]) / (radius * radius);
    v.dt = amplitude * db * 2.0 * tau / time_radius;
    return v;
  }
  if (ux >= 1.0 || tau * tau >= 1.0) return v;
  const double z = bump_line_integral(profile);
  const double eta = bump_value(profile, tau * tau) / z;
  const double deta = bump_derivative(profile, tau * tau) * 2.0 * tau / z;
  const double b = bump_value(profile, ux);
  const double db = bump_derivative(profile, ux);
  v.value = amplitude * b * eta;
  for (int k = 0; k < used; ++k) v.grad[k] = amplitude * db * 2.0 * (X[k] - center[k]) / (radius * radius) * eta;
  v.dt = amplitude * b * deta / time_radius;
  return v;
}

bool TestFunction::supported_inside(const SpaceTimeGrid& grid) const noexcept {
  for (int k = 0; k < grid.axes(); ++k) {
    if (center[k] - radius <= -1.0 || center[k] + radius >= 1.0) return false;
  }
  return time_center - time_radius > grid.t0 && time_center + time_radius < grid.t1;
}

void TestFunction::require_inside(const SpaceTimeGrid& grid) const {
  if (n() != grid.n) throw GridError("test function dimension does not match the grid");
  if (!supported_inside(grid)) throw GridError("test function support is not strictly inside the space-time domain");
}

TestFunction::Box TestFunction::support_box(const SpaceTimeGrid& grid) const {
  Box b;
  for (int k = 0; k < grid.axes(); ++k) {
    const auto kk = static_cast<std::size_t>(k);
    b.lo[kk] = std::max(0, static_cast<int>(std::floor((center[k] - radius + 1.0) / grid.hx)));
    b.hi[kk] = std::min(grid.N, static_cast<int>(std::ceil((center[k] + radius + 1.0) / grid.hx)));
  }
  b.jlo = std::max(0, static_cast<int>(std::floor((time_center - time_radius - grid.t0) / grid.dt)));
  b.jhi = std::min(grid.M, static_cast<int>(std::ceil((time_center + time_radius - grid.t0) / grid.dt)));
  return b;
}

TestFunction TestFunction::bump(const Vec& center, double s, double lambda, BumpProfile p) {
  TestFunction f;
  f.center = center;
  f.time_center = s;
  f.radius = lambda;
  f.time_radius = lambda * lambda;
  f.profile = p;
  return f;
}

TestFunction TestFunction::planar(const Vec& y, double s, double radius, double time_radius, BumpProfile p) {
  TestFunction f;
  f.center = Vec::Zero(y.size() + 1);
  f.center.head(y.size()) = y;
  f.time_center = s;
  f.radius = radius;
  f.time_radius = time_radius;
  f.profile = p;
  f.uses_height = false;
  return f;
}

}  // namespace mcflab
