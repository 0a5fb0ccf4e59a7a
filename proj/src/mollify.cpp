#include "mcflab/mollify.hpp"

#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>
#include <sstream>

#include "mcflab/parallel.hpp"

namespace mcflab {

namespace {

// exp(-a u/(1-u)); a > 1 narrows the bump and makes its sampled moments far
// less sensitive to the sub-cell position of the evaluation point.
constexpr double kSharpness = 8.0;

double g_profile(double u) noexcept { return u < 1.0 ? std::exp(-kSharpness * u / (1.0 - u)) : 0.0; }
double g_first(double u) noexcept {
  if (u >= 1.0) return 0.0;
  const double w = 1.0 - u;
  return -kSharpness * g_profile(u) / (w * w);
}
double g_second(double u) noexcept {
  if (u >= 1.0) return 0.0;
  const double w = 1.0 - u;
  const double g = g_profile(u);
  const double a = kSharpness;
  return g * (a * a / (w * w * w * w) - 2.0 * a / (w * w * w));
}

MollifierKernel make_kernel(int n) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  auto radial = [](auto&& f) { return GK::integrate(f, 0.0, 1.0, 8, 1e-14); };
  MollifierKernel K;
  K.n = n;
  const double sphere = n == 2 ? 2.0 * std::numbers::pi : 4.0 * std::numbers::pi;
  const double mass = sphere * radial([n](double r) { return std::pow(r, n - 1) * g_profile(r * r); });
  K.C = 1.0 / mass;
  // int |grad_x rho| = C int 2|x| |g'(|z|^2)|; the angular factor is int |x|/|z| over the sphere
  const double angular = n == 2 ? 4.0 : std::numbers::pi * std::numbers::pi;
  K.grad_l1 = K.C * angular * radial([n](double r) { return 2.0 * std::pow(r, n) * std::abs(g_first(r * r)); });
  // int rho z_1^2: the angular mean of z_1^2 / |z|^2 is 1/n
  K.second_moment = K.C * sphere / n * radial([n](double r) { return std::pow(r, n + 1) * g_profile(r * r); });
  return K;
}

double spectral_norm(const Mat& A) {
  if (A.rows() == 1) return std::abs(A(0, 0));
  const Eigen::MatrixXd S = 0.5 * (A + A.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

double MollifierKernel::profile(double u) const noexcept { return g_profile(u); }
double MollifierKernel::profile_derivative(double u) const noexcept { return g_first(u); }

const MollifierKernel& standard_kernel(int n) {
  static const MollifierKernel k2 = make_kernel(2);
  static const MollifierKernel k3 = make_kernel(3);
  if (n == 2) return k2;
  if (n == 3) return k3;
  throw MollifyError("kernel dimension must be 2 or 3");
}

MollifiedGraph::MollifiedGraph(std::shared_ptr<const GraphFlow> base, double eps)
    : base_(std::move(base)), eps_(eps), tabulated_(std::make_shared<std::once_flag>()) {
  const auto& g = base_->grid;
  if (!(eps > 0.0 && eps < 1.0)) throw MollifyError("eps must lie in (0,1)");
  if (eps < 2.0 * g.hx * (1.0 - 1e-12) || eps * eps < 2.0 * g.dt * (1.0 - 1e-12)) {
    std::ostringstream os;
    os << "eps=" << eps << " is not resolved: need eps >= 2hx (" << 2 * g.hx << ") and eps^2 >= 2dt (" << 2 * g.dt
       << ")";
    throw MollifyError(os.str());
  }
  const double e2 = eps * eps;
  ri_ = static_cast<int>(std::floor(eps / g.hx + 1e-12));
  rj_ = static_cast<int>(std::floor(e2 / g.dt + 1e-12));
  ilo_ = static_cast<int>(std::ceil(eps / g.hx - 1e-12));
  ihi_ = g.N - ilo_;
  jlo_ = static_cast<int>(std::ceil(e2 / g.dt - 1e-12));
  jhi_ = g.M - jlo_;
  if (ilo_ > ihi_ || jlo_ > jhi_) throw MollifyError("inner region is empty");

  const int k = g.axes();
  const int rk = k == 2 ? ri_ : 0;
  double Z = 0.0;
  for (int a = -ri_; a <= ri_; ++a)
    for (int b = -rk; b <= rk; ++b)
      for (int c = -rj_; c <= rj_; ++c) {
        const double y0 = -a * g.hx, y1 = k == 2 ? -b * g.hx : 0.0, s = -c * g.dt;
        const double u = (y0 * y0 + y1 * y1) / e2 + s * s / (e2 * e2);
        if (u >= 1.0) continue;
        taps_.push_back({{a, b}, c, g_profile(u), g_first(u), g_second(u), {y0, y1}, s});
        Z += taps_.back().g;
      }
  const auto& K = standard_kernel(g.n);
  raw_mass_ = K.C * Z * std::pow(g.hx, k) * g.dt / std::pow(eps, g.n + 1);

  Z_ = Z;
}

void MollifiedGraph::tabulate() const {
  std::call_once(*tabulated_, [this] {
    const auto& g = grid();
    const int k = g.axes();
    const std::size_t S = g.spatial_size();
    std::vector<double> out(g.size(), std::numeric_limits<double>::quiet_NaN());
    for (int j = jlo_; j <= jhi_; ++j) {
      for (std::size_t node = 0; node < S; ++node) {
        if (!inner(j, node)) continue;
        double acc = 0.0;
        for (const auto& tp : taps_) {
          const std::size_t nb = g.shifted(k == 2 ? g.shifted(node, 1, tp.di[1]) : node, 0, tp.di[0]);
          acc += tp.g * base_->at(j + tp.dj, nb);
        }
        out[static_cast<std::size_t>(j) * S + node] = acc / Z_;
      }
    }
    feps_ = std::move(out);
  });
}

bool MollifiedGraph::inner(int j, std::size_t node) const noexcept {
  if (j < jlo_ || j > jhi_) return false;
  const auto idx = grid().index(node);
  for (int a = 0; a < grid().axes(); ++a) {
    const int i = idx[static_cast<std::size_t>(a)];
    if (i < ilo_ || i > ihi_) return false;
  }
  return true;
}

bool MollifiedGraph::in_domain(const Vec& x, double t) const noexcept {
  const auto& g = grid();
  const double tol = 1e-12;
  for (int a = 0; a < g.axes(); ++a)
    if (std::abs(x[a]) > 1.0 - eps_ + tol) return false;
  return t >= g.t0 + eps_ * eps_ - tol && t <= g.t1 - eps_ * eps_ + tol;
}

void MollifiedGraph::set_regularity(double alpha, double seminorm) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw MollifyError("alpha must lie in (0,1]");
  alpha_ = alpha;
  seminorm_ = seminorm;
  const double c = seminorm * standard_kernel(n()).grad_l1;
  reach_ = c > 0.0 ? std::pow(eps_, 1.0 - alpha) / c : std::numeric_limits<double>::infinity();
}

MollifiedGraph::Eval MollifiedGraph::at_node(int j, std::size_t node) const {
  if (!inner(j, node)) throw MollifyError("node is outside the inner region");
  const auto& g = grid();
  const int k = g.axes();
  const double e2 = eps_ * eps_, e4 = e2 * e2;
  double Z = 0, S = 0, Zt = 0, St = 0;
  Vec Zg = Vec::Zero(k), Sg = Vec::Zero(k);
  Mat Zh = Mat::Zero(k, k), Sh = Mat::Zero(k, k);
  Vec r(k);
  for (const auto& tp : taps_) {
    const std::size_t nb = g.shifted(k == 2 ? g.shifted(node, 1, tp.di[1]) : node, 0, tp.di[0]);
    const double f = base_->at(j + tp.dj, nb);
    // derivatives with respect to the target point: r = target - node
    for (int a = 0; a < k; ++a) r[a] = tp.y[a];
    const double rs = tp.s;
    const Vec dK = tp.dg * 2.0 * r / e2;
    Mat hK = tp.d2g * 4.0 * r * r.transpose() / e4;
    hK.diagonal().array() += tp.dg * 2.0 / e2;
    const double tK = tp.dg * 2.0 * rs / e4;
    Z += tp.g, S += tp.g * f;
    Zg += dK, Sg += f * dK;
    Zh += hK, Sh += f * hK;
    Zt += tK, St += f * tK;
  }
  Eval e;
  e.value = S / Z;
  e.grad = (Sg - e.value * Zg) / Z;
  e.hess = (Sh - e.grad * Zg.transpose() - Zg * e.grad.transpose() - e.value * Zh) / Z;
  e.dt = (St - e.value * Zt) / Z;
  return e;
}

MollifiedGraph::Eval MollifiedGraph::operator()(const Vec& x, double t) const {
  if (!in_domain(x, t)) {
    std::ostringstream os;
    os << "point (" << x.transpose() << ", t=" << t << ") is outside the mollified region";
    throw MollifyError(os.str());
  }
  const auto& g = grid();
  const int k = g.axes();
  const double e2 = eps_ * eps_, e4 = e2 * e2;
  std::array<int, 2> lo{0, 0}, hi{0, 0};
  for (int a = 0; a < k; ++a) {
    lo[static_cast<std::size_t>(a)] = std::max(0, static_cast<int>(std::ceil((x[a] - eps_ + 1.0) / g.hx)));
    hi[static_cast<std::size_t>(a)] = std::min(g.N, static_cast<int>(std::floor((x[a] + eps_ + 1.0) / g.hx)));
  }
  const int jl = std::max(0, static_cast<int>(std::ceil((t - e2 - g.t0) / g.dt)));
  const int jh = std::min(g.M, static_cast<int>(std::floor((t + e2 - g.t0) / g.dt)));
  double Z = 0, S = 0, Zt = 0, St = 0;
  Vec Zg = Vec::Zero(k), Sg = Vec::Zero(k);
  Mat Zh = Mat::Zero(k, k), Sh = Mat::Zero(k, k);
  Vec r(k);
  for (int j = jl; j <= jh; ++j) {
    const double rs = t - g.t(j);
    const double us = rs * rs / e4;
    if (us >= 1.0) continue;
    for (int i0 = lo[0]; i0 <= hi[0]; ++i0) {
      r[0] = x[0] - g.x(i0);
      const double u0 = us + r[0] * r[0] / e2;
      if (u0 >= 1.0) continue;
      for (int i1 = (k == 2 ? lo[1] : 0); i1 <= (k == 2 ? hi[1] : 0); ++i1) {
        double u = u0;
        if (k == 2) {
          r[1] = x[1] - g.x(i1);
          u += r[1] * r[1] / e2;
          if (u >= 1.0) continue;
        }
        const double gv = g_profile(u), dg = g_first(u), d2g = g_second(u);
        const double f = base_->at(j, g.node({i0, i1}));
        const Vec dK = dg * 2.0 * r / e2;
        Mat hK = d2g * 4.0 * r * r.transpose() / e4;
        hK.diagonal().array() += dg * 2.0 / e2;
        const double tK = dg * 2.0 * rs / e4;
        Z += gv, S += gv * f;
        Zg += dK, Sg += f * dK;
        Zh += hK, Sh += f * hK;
        Zt += tK, St += f * tK;
      }
    }
  }
  if (!(Z > 0.0)) throw MollifyError("empty kernel stencil");
  Eval e;
  e.value = S / Z;
  e.grad = (Sg - e.value * Zg) / Z;
  e.hess = (Sh - e.grad * Zg.transpose() - Zg * e.grad.transpose() - e.value * Zh) / Z;
  e.dt = (St - e.value * Zt) / Z;
  return e;
}

MollifiedGraph mollify_graph(std::shared_ptr<const GraphFlow> gf, double eps) { return {std::move(gf), eps}; }

MollifiedGraph mollify_graph(const GraphFlow& gf, double eps) {
  return {std::make_shared<const GraphFlow>(gf), eps};
}

LemmaBounds lemma_bounds(MollifiedGraph& mg, double alpha, std::optional<double> seminorm) {
  LemmaBounds b;
  b.eps = mg.eps();
  b.alpha = alpha;
  b.seminorm = seminorm ? *seminorm : parabolic_seminorm(mg.base(), alpha).value;
  mg.set_regularity(alpha, b.seminorm);
  b.c_rho = b.seminorm * standard_kernel(mg.n()).grad_l1;
  b.bound_values = 2.0 * b.seminorm * std::pow(b.eps, 1.0 + alpha);
  b.bound_hessian = b.c_rho * std::pow(b.eps, alpha - 1.0);
  const auto& g = mg.grid();
  for (int j = mg.first_level(); j <= mg.last_level(); ++j) {
    for (std::size_t node = 0; node < g.spatial_size(); ++node) {
      if (!mg.inner(j, node)) continue;
      b.sup_diff = std::max(b.sup_diff, std::abs(mg.at(j, node) - mg.base().at(j, node)));
      b.max_hessian = std::max(b.max_hessian, spectral_norm(mg.at_node(j, node).hess));
    }
  }
  b.values_hold = b.sup_diff <= b.bound_values;
  b.hessian_holds = b.max_hessian <= b.bound_hessian;
  return b;
}

Clip clip_profile(double s, double eps) noexcept {
  const double a = std::abs(s);
  const double sign = s < 0.0 ? -1.0 : 1.0;
  if (a <= eps) return {s, 1.0, 0.0};
  if (a >= 2.0 * eps) return {sign * 1.5 * eps, 0.0, 0.0};
  // eta = eps q(tau), s = eps (1 + tau), q = 1 + tau - tau^3 + tau^4 / 2
  const double tau = a / eps - 1.0;
  const double q = 1.0 + tau - tau * tau * tau + 0.5 * tau * tau * tau * tau;
  const double dq = 1.0 - 3.0 * tau * tau + 2.0 * tau * tau * tau;
  const double d2q = -6.0 * tau + 6.0 * tau * tau;
  return {sign * eps * q, dq, sign * d2q / eps};
}

SignedDistance signed_distance(const MollifiedGraph& mg, const Vec& X, double t) {
  const int n = mg.n(), k = n - 1;
  if (X.size() != n) throw MollifyError("ambient point has the wrong dimension");
  const Vec x = X.head(k);
  const double Xn = X[k];
  auto energy = [&](const Vec& z, double fz) { return 0.5 * (z - x).squaredNorm() + 0.5 * (fz - Xn) * (fz - Xn); };

  Vec z = x;
  auto e = mg(z, t);
  SignedDistance sd;
  bool converged = false;
  double gnorm = 0.0;
  for (int it = 0; it < 50; ++it) {
    const double r = e.value - Xn;
    const Vec grad = (z - x) + r * e.grad;
    gnorm = grad.norm();
    sd.iterations = it;
    if (gnorm <= 1e-10) {
      converged = true;
      break;
    }
    Mat K = Mat::Identity(k, k) + e.grad * e.grad.transpose() + r * e.hess;
    Eigen::LLT<Mat> llt(K);
    Vec step = llt.info() == Eigen::Success ? Vec(-llt.solve(grad)) : Vec(-grad);
    const double E0 = energy(z, e.value);
    double lam = 1.0;
    for (int ls = 0; ls < 40; ++ls, lam *= 0.5) {
      const Vec zn = z + lam * step;
      if (!mg.in_domain(zn, t)) continue;
      auto en = mg(zn, t);
      if (energy(zn, en.value) <= E0 + 1e-16 * (1.0 + E0)) {
        z = zn;
        e = std::move(en);
        break;
      }
    }
  }
  if (!converged) {
    std::ostringstream os;
    os << "nearest-point Newton did not converge in 50 iterations at X=(" << X.transpose() << "), t=" << t
       << ": |grad| = " << gnorm;
    throw MollifyError(os.str());
  }

  const Vec p = e.grad;
  const double q = std::sqrt(1.0 + p.squaredNorm());
  const double r = e.value - Xn;
  Vec nu(n);
  nu.head(k) = -p / q;
  nu[k] = 1.0 / q;
  const double dist = std::sqrt((z - x).squaredNorm() + r * r);
  const double above = Xn - mg(x, t).value;
  sd.dtilde = above >= 0.0 ? dist : -dist;
  if (std::abs(sd.dtilde) >= mg.reach()) {
    std::ostringstream os;
    os << "point at distance " << std::abs(sd.dtilde) << " is outside the smoothness neighbourhood (reach "
       << mg.reach() << ")";
    throw MollifyError(os.str());
  }
  sd.foot = z;

  const Mat K = Mat::Identity(k, k) + p * p.transpose() + r * e.hess;
  Mat B(k, n);
  B.leftCols(k) = Mat::Identity(k, k);
  B.col(k) = p;
  const Mat J = K.ldlt().solve(B);  // D foot / D X
  Mat Dnu(n, k);
  Dnu.topRows(k) = (-Mat::Identity(k, k) / q + p * p.transpose() / (q * q * q)) * e.hess;
  Dnu.row(k) = -(p.transpose() * e.hess) / (q * q * q);
  Mat Ht = Dnu * J;
  sd.hess_tilde = 0.5 * (Ht + Ht.transpose());
  const double dt_tilde = -e.dt / q;

  const auto c = clip_profile(sd.dtilde, mg.eps());
  sd.d = c.value;
  sd.grad = c.d1 * nu;
  sd.hess = c.d2 * nu * nu.transpose() + c.d1 * sd.hess_tilde;
  sd.dt = c.d1 * dt_tilde;
  return sd;
}

SignedDistance signed_distance_at_level(const MollifiedGraph& mg, const Vec& X, int j) {
  return signed_distance(mg, X, mg.grid().t(j));
}

SliceInterpolant::SliceInterpolant(const SpaceTimeGrid& grid, std::span<const double> values)
    : grid_(grid), values_(values.begin(), values.end()) {
  if (values_.size() != grid.spatial_size()) throw MollifyError("slice has the wrong number of samples");
}

double SliceInterpolant::sample(int i, int k) const {
  const int N = grid_.N;
  // linear ghosts beyond the boundary
  if (i < 0) return 2.0 * sample(0, k) - sample(1, k);
  if (i > N) return 2.0 * sample(N, k) - sample(N - 1, k);
  if (grid_.n == 3) {
    if (k < 0) return 2.0 * sample(i, 0) - sample(i, 1);
    if (k > N) return 2.0 * sample(i, N) - sample(i, N - 1);
  }
  return values_[grid_.node({i, grid_.n == 3 ? k : 0})];
}

namespace {

void catmull_rom(double s, double w[4], double dw[4]) {
  const double s2 = s * s, s3 = s2 * s;
  w[0] = 0.5 * (-s + 2 * s2 - s3);
  w[1] = 0.5 * (2 - 5 * s2 + 3 * s3);
  w[2] = 0.5 * (s + 4 * s2 - 3 * s3);
  w[3] = 0.5 * (-s2 + s3);
  dw[0] = 0.5 * (-1 + 4 * s - 3 * s2);
  dw[1] = 0.5 * (-10 * s + 9 * s2);
  dw[2] = 0.5 * (1 + 8 * s - 9 * s2);
  dw[3] = 0.5 * (-2 * s + 3 * s2);
}

void locate(double x, const SpaceTimeGrid& g, int& cell, double& s) {
  const double pos = (x + 1.0) / g.hx;
  cell = std::clamp(static_cast<int>(std::floor(pos)), 0, g.N - 1);
  s = pos - cell;
}

}  // namespace

double SliceInterpolant::value(const Vec& x, Vec* grad) const {
  int c0 = 0;
  double s0 = 0.0;
  locate(x[0], grid_, c0, s0);
  double w0[4], d0[4];
  catmull_rom(s0, w0, d0);
  if (grid_.n == 2) {
    double v = 0, dv = 0;
    for (int a = 0; a < 4; ++a) {
      const double f = sample(c0 - 1 + a, 0);
      v += w0[a] * f;
      dv += d0[a] * f;
    }
    if (grad) {
      grad->resize(1);
      (*grad)[0] = dv / grid_.hx;
    }
    return v;
  }
  int c1 = 0;
  double s1 = 0.0;
  locate(x[1], grid_, c1, s1);
  double w1[4], d1[4];
  catmull_rom(s1, w1, d1);
  double v = 0, g0 = 0, g1 = 0;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      const double f = sample(c0 - 1 + a, c1 - 1 + b);
      v += w0[a] * w1[b] * f;
      g0 += d0[a] * w1[b] * f;
      g1 += w0[a] * d1[b] * f;
    }
  if (grad) {
    grad->resize(2);
    (*grad)[0] = g0 / grid_.hx;
    (*grad)[1] = g1 / grid_.hx;
  }
  return v;
}

ProjectionMap::ProjectionMap(const MollifiedGraph& mg, int j)
    : mg_(mg), j_(j), t_(mg.grid().t(j)), interp_(mg.grid(), mg.base().slice(j)) {
  if (j < mg.first_level() || j > mg.last_level()) throw MollifyError("level is outside the inner time range");
}

Vec ProjectionMap::F(const Vec& x, Mat* jacobian) const {
  const int k = static_cast<int>(x.size()), n = k + 1;
  Vec fg;
  const double f = interp_.value(x, &fg);
  Vec X(n);
  X.head(k) = x;
  X[k] = f;
  const auto sd = signed_distance(mg_, X, t_);
  const Vec dp = sd.grad.head(k);
  const double dn = sd.grad[k];
  if (jacobian) {
    // total derivatives along x -> (x, f(x)): D_j[d] = d_j d + d_n d d_j f
    const Vec Dd = dp + dn * fg;
    const Mat Dgrad = sd.hess.topLeftCorner(k, k) + sd.hess.topRightCorner(k, 1) * fg.transpose();
    *jacobian = Mat::Identity(k, k) - dp * Dd.transpose() - sd.d * Dgrad;
  }
  return x - sd.d * dp;
}

Vec ProjectionMap::G(const Vec& xstar, int* iterations) const {
  Vec x = xstar;
  for (int it = 0; it < 50; ++it) {
    Mat J;
    const Vec r = F(x, &J) - xstar;
    if (iterations) *iterations = it;
    if (r.norm() <= 1e-13) return x;
    x -= J.partialPivLu().solve(r);
  }
  std::ostringstream os;
  os << "inverse projection did not converge at x*=(" << xstar.transpose() << ")";
  throw MollifyError(os.str());
}

ProjectionReport projection_maps(const MollifiedGraph& mg, int j) {
  const auto& g = mg.grid();
  const int k = g.axes();
  ProjectionMap map(mg, j);
  ProjectionReport rep;
  rep.level = j;
  const double margin = 2.0 * mg.eps();
  const double kappa = (mg.alpha() && mg.seminorm())
                           ? *mg.seminorm() * standard_kernel(mg.n()).grad_l1 * std::pow(mg.eps(), *mg.alpha() - 1.0)
                           : 0.0;
  const double h = 1e-5;
  for (std::size_t node = 0; node < g.spatial_size(); ++node) {
    const Vec x = g.coords(node);
    bool inside = true;
    for (int a = 0; a < k; ++a) inside = inside && std::abs(x[a]) <= 1.0 - margin + 1e-12;
    if (!inside) continue;
    try {
      Mat J;
      const Vec Fx = map.F(x, &J);
      const Vec back = map.G(Fx);
      rep.nodes.push_back(node);
      rep.F.push_back(Fx);
      rep.gradF.push_back(J);
      rep.max_gradF_minus_I = std::max(rep.max_gradF_minus_I, (J - Mat::Identity(k, k)).norm());
      rep.max_roundtrip = std::max(rep.max_roundtrip, (back - x).norm());
      for (int a = 0; a < k; ++a) {
        Vec xp = x, xm = x;
        xp[a] += h;
        xm[a] -= h;
        const Vec col = (map.F(xp) - map.F(xm)) / (2.0 * h);
        rep.max_fd_jacobian = std::max(rep.max_fd_jacobian, (col - J.col(a)).norm());
      }
      Vec X(k + 1);
      X.head(k) = x;
      X[k] = mg.base().at(j, node);
      const auto sd = signed_distance(mg, X, g.t(j));
      rep.max_eikonal = std::max(rep.max_eikonal, std::abs(sd.grad.norm() - 1.0));
      if (kappa > 0.0) {
        const double norm2 = spectral_norm(sd.hess);
        rep.max_curvature_ratio = std::max(rep.max_curvature_ratio, norm2 * (1.0 - kappa * std::abs(sd.d)) / kappa);
      }
    } catch (const MollifyError& e) {
      std::ostringstream os;
      os << "node " << node << ": " << e.what();
      rep.failures.push_back(os.str());
    }
  }
  return rep;
}

ChangeOfVariables change_of_variables_check(const MollifiedGraph& mg, const TestFunction& phi, unsigned threads,
                                            int stride) {
  const auto& g = mg.grid();
  if (phi.uses_height) throw MollifyError("test function must not depend on x_n");
  if (stride < 1) throw MollifyError("quadrature stride must be positive");
  phi.require_inside(g);
  auto box = phi.support_box(g);
  // snap the box to the quadrature lattice (indices divisible by stride)
  auto up = [stride](int i) { return (i + stride - 1) / stride * stride; };
  box.jlo = up(box.jlo);
  for (int a = 0; a < 2; ++a) box.lo[static_cast<std::size_t>(a)] = up(box.lo[static_cast<std::size_t>(a)]);
  const double cell = std::pow(static_cast<double>(stride), g.n);
  const int levels = box.jhi >= box.jlo ? (box.jhi - box.jlo) / stride + 1 : 0;
  std::vector<double> lhs(static_cast<std::size_t>(levels), 0.0), rhs(lhs.size(), 0.0);
  std::vector<std::size_t> counts(lhs.size(), 0);
  const int k = g.axes();
  parallel_for(lhs.size(), threads, [&](std::size_t li) {
    const int j = box.jlo + stride * static_cast<int>(li);
    const double t = g.t(j);
    const auto sl = mg.base().slice(j);
    Vec X(g.n);
    for (int i0 = box.lo[0]; i0 <= box.hi[0]; i0 += stride)
      for (int i1 = (k == 2 ? box.lo[1] : 0); i1 <= (k == 2 ? box.hi[1] : 0); i1 += stride) {
        const std::size_t node = g.node({i0, i1});
        X.head(k) = g.coords(node);
        X[k] = sl[node];
        const auto v = phi(X, t);
        if (v.value == 0.0 && v.dt == 0.0) continue;
        const double w = cell * g.spatial_weight(node) * g.time_weight(j);
        rhs[li] += w * v.dt * sl[node];
        if (v.value == 0.0) continue;
        if (!mg.inner(j, node)) throw MollifyError("test function support leaves the mollified region");
        const double q = std::sqrt(1.0 + spatial_gradient(sl, g, node).squaredNorm());
        lhs[li] += w * v.value * signed_distance(mg, X, t).dt * q;
        ++counts[li];
      }
  });
  ChangeOfVariables c;
  for (std::size_t li = 0; li < lhs.size(); ++li) {
    c.lhs += lhs[li];
    c.rhs += rhs[li];
    c.points += counts[li];
  }
  c.gap = std::abs(c.lhs - c.rhs);
  return c;
}

}  // namespace mcflab
