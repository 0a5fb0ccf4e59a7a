#include "mcflab/allencahn.hpp"

#include <fftw3.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <algorithm>
#include <cmath>
#include <mutex>
#include <limits>
#include <numbers>

namespace mcflab {

namespace {

using GK15 = boost::math::quadrature::gauss_kronrod<double, 15>;
using GK61 = boost::math::quadrature::gauss_kronrod<double, 61>;

// FFTW planning is not thread safe.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

double sqrt2W(const DoubleWell& w, double s) { return std::sqrt(2.0 * std::max(0.0, w.W(s))); }

// |D+ phi|^2 at every node, walking each axis without index division.
std::vector<double> grad_sq_all(const PeriodicGrid& g, std::span<const double> phi) {
  std::vector<double> out(phi.size(), 0.0);
  const std::size_t N = static_cast<std::size_t>(g.N);
  for (int a = 0; a < g.n; ++a) {
    const std::size_t st = g.stride(a);
    const std::size_t outer = phi.size() / (N * st);
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t i = 0; i < N; ++i) {
        const std::size_t base = (o * N + i) * st;
        const std::size_t next = (o * N + (i + 1) % N) * st;
        for (std::size_t r = 0; r < st; ++r) {
          const double d = (phi[next + r] - phi[base + r]) / g.h;
          out[base + r] += d * d;
        }
      }
    }
  }
  return out;
}

}  // namespace

DoubleWell DoubleWell::standard() {
  DoubleWell w;
  w.W = [](double s) { return 0.5 * (1.0 - s * s) * (1.0 - s * s); };
  w.dW = [](double s) { return -2.0 * s * (1.0 - s * s); };
  w.d2W = [](double s) { return 6.0 * s * s - 2.0; };
  w.gamma = 0.0;
  w.alpha_w = 0.8;
  w.kappa = 1.84;
  w.name = "standard";
  // y = s^2 solves the logistic equation y' = 4 y (1 - y)
  w.flow = [](double s, double tau) {
    const double y = s * s;
    return s / std::sqrt(y + (1.0 - y) * std::exp(-4.0 * tau));
  };
  return w;
}

WellCheck check_well(const DoubleWell& well, int samples) {
  WellCheck c;
  auto fail = [&](std::string why) {
    if (c.ok) c.reason = std::move(why);
    c.ok = false;
  };
  if (!well.W || !well.dW || !well.d2W) {
    fail("double well is missing W, W' or W''");
    return c;
  }
  if (std::abs(well.W(1.0)) > 1e-12 || std::abs(well.W(-1.0)) > 1e-12) fail("W(+-1) != 0");
  if (!(well.gamma > -1.0 && well.gamma < 1.0)) fail("gamma outside (-1,1)");
  if (!(well.alpha_w > 0.0 && well.alpha_w < 1.0) || !(well.kappa > 0.0)) fail("need 0 < alpha_w < 1 and kappa > 0");
  for (int k = 0; k < samples; ++k) {
    const double s = -1.05 + 2.1 * k / (samples - 1);
    c.max_d2W = std::max(c.max_d2W, std::abs(well.d2W(s)));
    if (std::abs(s) >= 1.0) continue;
    if (well.W(s) < -1e-14) fail("W < 0 at s = " + std::to_string(s));
    const double dw = well.dW(s);
    if (s > well.gamma + 1e-12 && dw >= 0.0) fail("W' >= 0 on (gamma, 1) at s = " + std::to_string(s));
    if (s < well.gamma - 1e-12 && dw <= 0.0) fail("W' <= 0 on (-1, gamma) at s = " + std::to_string(s));
    if (std::abs(s) >= well.alpha_w && well.d2W(s) < well.kappa - 1e-12) {
      fail("W'' < kappa at s = " + std::to_string(s));
    }
  }
  return c;
}

PhaseMap::PhaseMap(DoubleWell well, int table) : well_(std::move(well)) {
  if (table < 2) throw AcError("phase map table needs at least two cells");
  auto f = [this](double s) { return sqrt2W(well_, s); };
  double err = 0.0;
  sigma_ = GK61::integrate(f, -1.0, 1.0, 20, 1e-10, &err);
  if (!std::isfinite(sigma_) || sigma_ <= 0.0 || err > 1e-8 * std::max(1.0, sigma_)) {
    throw AcError("quadrature for sigma failed");
  }
  h_ = 2.0 / table;
  table_.assign(static_cast<std::size_t>(table) + 1, 0.0);
  for (int k = 0; k < table; ++k) {
    const double a = -1.0 + k * h_;
    const double b = k + 1 == table ? 1.0 : a + h_;
    table_[static_cast<std::size_t>(k) + 1] = table_[static_cast<std::size_t>(k)] + GK15::integrate(f, a, b);
  }
  const double total = table_.back();
  for (double& v : table_) v /= total;
  table_.back() = 1.0;
  slope_.resize(table_.size());
  for (std::size_t k = 0; k < slope_.size(); ++k) slope_[k] = f(-1.0 + static_cast<double>(k) * h_) / total;
}

double PhaseMap::operator()(double s) const {
  auto f = [this](double y) { return sqrt2W(well_, y); };
  // Overshoot is at most a few percent, where one fixed rule is exact enough.
  // Round-off excursions past the wells use the trapezoid, since sqrt(2W(+-1)) = 0.
  if (s <= -1.0) {
    if (s > -1.0 - 1e-6) return -0.5 * (-1.0 - s) * f(s) / sigma_;
    return -GK15::integrate(f, s, -1.0) / sigma_;
  }
  if (s >= 1.0) {
    if (s < 1.0 + 1e-6) return 1.0 + 0.5 * (s - 1.0) * f(s) / sigma_;
    return 1.0 + GK15::integrate(f, 1.0, s) / sigma_;
  }
  const double x = (s + 1.0) / h_;
  const auto k = std::min(static_cast<std::size_t>(x), table_.size() - 2);
  const double tau = x - static_cast<double>(k);
  const double t2 = tau * tau, t3 = t2 * tau;
  // cubic Hermite on the cell
  return (2 * t3 - 3 * t2 + 1) * table_[k] + (t3 - 2 * t2 + tau) * h_ * slope_[k] + (-2 * t3 + 3 * t2) * table_[k + 1] +
         (t3 - t2) * h_ * slope_[k + 1];
}

std::size_t PeriodicGrid::size() const noexcept {
  std::size_t s = 1;
  for (int a = 0; a < n; ++a) s *= static_cast<std::size_t>(N);
  return s;
}

std::size_t PeriodicGrid::stride(int axis) const noexcept {
  const std::size_t m = static_cast<std::size_t>(N);
  const int k = n - 1 - axis;
  return k == 0 ? 1 : k == 1 ? m : m * m;
}

std::array<int, 3> PeriodicGrid::index(std::size_t node) const noexcept {
  std::array<int, 3> idx{0, 0, 0};
  for (int a = n - 1; a >= 0; --a) {
    idx[static_cast<std::size_t>(a)] = static_cast<int>(node % static_cast<std::size_t>(N));
    node /= static_cast<std::size_t>(N);
  }
  return idx;
}

Vec PeriodicGrid::coords(std::size_t node) const {
  const auto idx = index(node);
  Vec X(n);
  for (int a = 0; a < n; ++a) X[a] = -1.0 + idx[static_cast<std::size_t>(a)] * h;
  return X;
}

std::size_t PeriodicGrid::neighbour(std::size_t node, int axis, int offset) const noexcept {
  const std::size_t st = stride(axis);
  const int i = static_cast<int>((node / st) % static_cast<std::size_t>(N));
  const int j = ((i + offset) % N + N) % N;
  return node + static_cast<std::size_t>(j - i) * st;
}

double PeriodicGrid::cell_volume() const noexcept { return std::pow(h, n); }

PeriodicGrid periodic_grid(int n, int N) {
  if (n < 1 || n > 3) throw AcError("Allen-Cahn runs need 1 <= n <= 3");
  if (N < 4 || N % 2 != 0) throw AcError("periodic grid needs an even N >= 4");
  PeriodicGrid g;
  g.n = n;
  g.N = N;
  g.h = 2.0 / N;
  return g;
}

std::vector<double> initial_profile(const PeriodicGrid& grid, const Expr& d0, double eps) {
  if (!(eps > 0.0)) throw AcError("eps must be positive");
  std::vector<double> phi(grid.size());
  for (std::size_t node = 0; node < phi.size(); ++node) {
    const Vec X = grid.coords(node);
    const double d = d0(std::span<const double>(X.data(), static_cast<std::size_t>(X.size())), 0.0);
    if (std::isnan(d)) throw AcError("initial distance is NaN");
    phi[node] = std::clamp(std::tanh(d / eps), -1.0, 1.0);
  }
  return phi;
}

double ac_energy(const PeriodicGrid& grid, std::span<const double> phi, const DoubleWell& well, double eps) {
  const auto g2 = grad_sq_all(grid, phi);
  double e = 0.0;
  for (std::size_t node = 0; node < phi.size(); ++node) e += 0.5 * eps * g2[node] + well.W(phi[node]) / eps;
  return e * grid.cell_volume();
}

std::vector<double> energy_density(const PeriodicGrid& grid, std::span<const double> phi, const PhaseMap& map,
                                   double eps) {
  std::vector<double> mu = grad_sq_all(grid, phi);
  for (std::size_t node = 0; node < phi.size(); ++node) {
    mu[node] = (0.5 * eps * mu[node] + map.well().W(phi[node]) / eps) / map.sigma();
  }
  return mu;
}

struct AcStepper::Plan {
  double* real = nullptr;
  fftw_complex* spec = nullptr;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
  std::size_t half = 0;

  Plan(const PeriodicGrid& g) {
    std::vector<int> dims(static_cast<std::size_t>(g.n), g.N);
    half = g.size() / static_cast<std::size_t>(g.N) * static_cast<std::size_t>(g.N / 2 + 1);
    std::lock_guard lock(planner_mutex());
    real = fftw_alloc_real(g.size());
    spec = fftw_alloc_complex(half);
    forward = fftw_plan_dft_r2c(g.n, dims.data(), real, spec, FFTW_ESTIMATE);
    backward = fftw_plan_dft_c2r(g.n, dims.data(), spec, real, FFTW_ESTIMATE);
    if (!real || !spec || !forward || !backward) throw AcError("FFTW planning failed");
  }
  ~Plan() {
    std::lock_guard lock(planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
    fftw_free(real);
    fftw_free(spec);
  }
};

AcStepper::AcStepper(PeriodicGrid grid, DoubleWell well, AmbientField u, double eps, double dt, AcScheme scheme,
                     bool spectral)
    : grid_(grid), well_(std::move(well)), u_(std::move(u)), eps_(eps), dt_(dt), scheme_(scheme) {
  if (scheme_ == AcScheme::Strang && !well_.flow) throw AcError("split stepping needs the exact reaction flow of W");
  if (!(eps_ > 0.0)) throw AcError("eps must be positive");
  if (u_.dimension() != grid_.n) throw AcError("transport field dimension does not match the grid");
  if (u_.is_sampled()) throw AcError("Allen-Cahn transport must be given in closed form");
  const WellCheck wc = check_well(well_);
  if (!wc.ok) throw AcError("double well rejected: " + wc.reason);
  limit_ = eps_ * eps_ / wc.max_d2W;
  if (!u_.is_zero()) {
    double speed = 0.0;
    std::vector<double> cache;
    const bool fixed = !u_.time_dependent();
    if (fixed) cache.resize(grid_.size() * static_cast<std::size_t>(grid_.n));
    for (std::size_t node = 0; node < grid_.size(); ++node) {
      const Vec v = u_.at(grid_.coords(node), 0.0);
      speed = std::max(speed, v.cwiseAbs().sum());
      if (fixed) {
        for (int a = 0; a < grid_.n; ++a) cache[node * static_cast<std::size_t>(grid_.n) + static_cast<std::size_t>(a)] = v[a];
      }
    }
    if (speed > 0.0) limit_ = std::min(limit_, grid_.h / speed);
    ustatic_ = std::move(cache);
  }
  if (!(dt_ > 0.0) || dt_ > limit_ * (1.0 + 1e-12)) {
    throw AcError("time step " + std::to_string(dt_) + " violates the explicit gate " + std::to_string(limit_));
  }
  plan_ = std::make_unique<Plan>(grid_);
  symbol_.resize(plan_->half);
  const int last = grid_.N / 2 + 1;
  for (std::size_t k = 0; k < plan_->half; ++k) {
    std::size_t rest = k;
    double lambda = 0.0;
    for (int a = grid_.n - 1; a >= 0; --a) {
      const int extent = a == grid_.n - 1 ? last : grid_.N;
      const int m = static_cast<int>(rest % static_cast<std::size_t>(extent));
      rest /= static_cast<std::size_t>(extent);
      if (spectral) {
        const int w = std::min(m, grid_.N - m);  // wave number pi w on a box of side 2
        lambda += std::numbers::pi * std::numbers::pi * w * w;
      } else {
        const double s = std::sin(std::numbers::pi * m / grid_.N);
        lambda += 4.0 * s * s / (grid_.h * grid_.h);
      }
    }
    const double m = scheme_ == AcScheme::Imex ? 1.0 / (1.0 + dt_ * lambda) : std::exp(-0.5 * dt_ * lambda);
    symbol_[k] = m / static_cast<double>(grid_.size());
  }
}

AcStepper::~AcStepper() = default;

void AcStepper::transport(std::span<const double> phi, double t, std::vector<double>& out) const {
  const std::size_t n = static_cast<std::size_t>(grid_.n);
  double speed = 0.0;
  for (std::size_t node = 0; node < phi.size(); ++node) {
    Vec v(grid_.n);
    if (!ustatic_.empty()) {
      for (std::size_t a = 0; a < n; ++a) v[static_cast<int>(a)] = ustatic_[node * n + a];
    } else {
      v = u_.at(grid_.coords(node), t);
    }
    speed = std::max(speed, v.cwiseAbs().sum());
    double adv = 0.0;
    for (int a = 0; a < grid_.n; ++a) {
      if (v[a] > 0.0) {
        adv += v[a] * (phi[node] - phi[grid_.neighbour(node, a, -1)]);
      } else if (v[a] < 0.0) {
        adv += v[a] * (phi[grid_.neighbour(node, a, 1)] - phi[node]);
      }
    }
    out[node] = adv / grid_.h;
  }
  if (dt_ * speed > grid_.h * (1.0 + 1e-12)) {
    throw AcError("transport CFL violated at t = " + std::to_string(t));
  }
}

void AcStepper::diffuse(std::vector<double>& phi) {
  std::copy(phi.begin(), phi.end(), plan_->real);
  fftw_execute(plan_->forward);
  for (std::size_t m = 0; m < plan_->half; ++m) {
    plan_->spec[m][0] *= symbol_[m];
    plan_->spec[m][1] *= symbol_[m];
  }
  fftw_execute(plan_->backward);
  std::copy(plan_->real, plan_->real + phi.size(), phi.begin());
}

void AcStepper::step(std::vector<double>& phi, double t) {
  if (phi.size() != grid_.size()) throw AcError("phase field has the wrong size");
  std::vector<double> adv;
  if (scheme_ == AcScheme::Strang) {
    diffuse(phi);
    const double tau = dt_ / (eps_ * eps_);
    for (double& v : phi) v = well_.flow(v, tau);
    if (!u_.is_zero()) {
      adv.resize(phi.size());
      transport(phi, t + 0.5 * dt_, adv);
      for (std::size_t node = 0; node < phi.size(); ++node) phi[node] -= dt_ * adv[node];
    }
    diffuse(phi);
    return;
  }
  if (!u_.is_zero()) {
    adv.resize(phi.size());
    transport(phi, t, adv);
  }
  const double k = dt_ / (eps_ * eps_);
  for (std::size_t node = 0; node < phi.size(); ++node) {
    double r = phi[node] - k * well_.dW(phi[node]);
    if (!adv.empty()) r -= dt_ * adv[node];
    phi[node] = r;
  }
  diffuse(phi);
}

PairingAccumulator::PairingAccumulator(const PeriodicGrid& grid, const PhaseMap& map, TestFunction psi, double eps,
                                       double t0, double dt)
    : grid_(&grid), map_(&map), psi_(std::move(psi)), eps_(eps), t0_(t0), dt_(dt) {
  if (psi_.n() != grid.n) throw AcError("test function dimension does not match the phase field");
  const int used = psi_.uses_height ? grid.n : grid.n - 1;
  for (int a = 0; a < used; ++a) {
    if (psi_.center[a] - psi_.radius <= -1.0 || psi_.center[a] + psi_.radius >= 1.0 - grid.h) {
      throw AcError("test function support wraps around the periodic box");
    }
  }
  for (std::size_t node = 0; node < grid.size(); ++node) {
    const Vec X = grid.coords(node);
    double r2 = 0.0;
    for (int a = 0; a < used; ++a) r2 += std::pow((X[a] - psi_.center[a]) / psi_.radius, 2);
    if (r2 < 1.0) {
      support_.push_back(node);
      points_.push_back(X);
      std::array<std::size_t, 3> nb{0, 0, 0};
      for (int a = 0; a < grid.n; ++a) nb[static_cast<std::size_t>(a)] = grid.neighbour(node, a, 1);
      next_.push_back(nb);
    }
  }
  prev_.assign(support_.size(), 0.0);
}

double PairingAccumulator::psi_mid(std::size_t k, int j) const {
  return psi_.value(points_[k], t0_ + (j + 0.5) * dt_);
}

namespace {

void neumaier_add(double& sum, double& comp, double x) {
  const double t = sum + x;
  comp += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
  sum = t;
}

}  // namespace

void PairingAccumulator::add(int j, std::span<const double> phi_j, std::span<const double> phi_next) {
  const double hv = grid_->cell_volume();
  const double sigma = map_->sigma();
  const auto& well = map_->well();
  if (prev_j_ != j - 1) {
    for (std::size_t k = 0; k < support_.size(); ++k) prev_[k] = j > 0 ? psi_mid(k, j - 1) : 0.0;
  }
  prev_j_ = j;
  for (std::size_t k = 0; k < support_.size(); ++k) {
    const std::size_t node = support_[k];
    const double a = psi_mid(k, j);
    const double am = prev_[k];
    prev_[k] = a;
    const double p0 = phi_j[node], p1 = phi_next[node];
    const double w0 = (*map_)(p0), w1 = (*map_)(p1);
    const double dw = w1 - w0, dphi = p1 - p0;
    neumaier_add(A_, A_c_, a * dw * hv);
    neumaier_add(B_, B_c_, -w0 * (a - am) * hv);
    if (a == 0.0) continue;
    lhs_ += std::abs(a * dw) * hv;
    const double slope = std::abs(dphi) > 1e-14 ? sigma * dw / dphi : sqrt2W(well, p0);
    s1_ += a * a * 0.5 * slope * slope / eps_ * hv * dt_;
    s2_ += 0.5 * eps_ * (dphi / dt_) * (dphi / dt_) * hv * dt_;
    double g0 = 0.0, g1 = 0.0;
    for (int d = 0; d < grid_->n; ++d) {
      const std::size_t nb = next_[k][static_cast<std::size_t>(d)];
      g0 += (phi_j[nb] - p0) * (phi_j[nb] - p0);
      g1 += (phi_next[nb] - p1) * (phi_next[nb] - p1);
    }
    const double h2 = grid_->h * grid_->h;
    const double mu0 = (0.5 * eps_ * g0 / h2 + well.W(p0) / eps_) / sigma;
    const double mu1 = (0.5 * eps_ * g1 / h2 + well.W(p1) / eps_) / sigma;
    mu_ += a * a * 0.5 * (mu0 + mu1) * hv * dt_;
  }
}

void PairingAccumulator::finish(int J, std::span<const double> phi_J) {
  const double hv = grid_->cell_volume();
  for (std::size_t k = 0; k < support_.size(); ++k) {
    const double am = prev_j_ == J - 1 ? prev_[k] : psi_mid(k, J - 1);
    neumaier_add(B_, B_c_, (*map_)(phi_J[support_[k]]) * am * hv);
  }
}

TderivCheck PairingAccumulator::tderiv() const {
  TderivCheck c;
  c.lhs = lhs_;
  c.kinetic = std::sqrt(s2_);
  c.middle = 2.0 / map_->sigma() * std::sqrt(s1_) * c.kinetic;
  c.rhs = std::sqrt(mu_);
  c.constant = c.rhs > 0.0 ? c.lhs / c.rhs : 0.0;
  c.middle_constant = c.rhs > 0.0 ? c.middle / c.rhs : 0.0;
  c.chain_holds = c.lhs <= c.middle * (1.0 + 1e-12) + 1e-300;
  return c;
}

VelocityCheck PairingAccumulator::velocity() const {
  VelocityCheck v;
  v.A = A_ + A_c_;
  v.B = B_ + B_c_;
  v.gap = std::abs(v.A - v.B);
  return v;
}

double interface_radius(const PeriodicGrid& grid, std::span<const double> phi, const Vec& center) {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t node = 0; node < phi.size(); ++node) {
    const auto idx = grid.index(node);
    for (int a = 0; a < grid.n; ++a) {
      if (idx[static_cast<std::size_t>(a)] == grid.N - 1) continue;
      const std::size_t nb = grid.neighbour(node, a, 1);
      const double p0 = phi[node], p1 = phi[nb];
      if (!(p0 == 0.0 || p0 * p1 < 0.0)) continue;
      Vec X = grid.coords(node);
      X[a] += grid.h * p0 / (p0 - p1);
      sum += (X - center).norm();
      ++count;
    }
  }
  if (count == 0) throw AcError("no interface crossings found");
  return sum / static_cast<double>(count);
}

std::optional<std::vector<double>> interface_heights(const PeriodicGrid& grid, std::span<const double> phi) {
  if (grid.n < 2) throw AcError("graph extraction needs n >= 2");
  const std::size_t columns = grid.size() / static_cast<std::size_t>(grid.N);
  std::vector<double> heights(columns);
  for (std::size_t c = 0; c < columns; ++c) {
    const std::size_t base = c * static_cast<std::size_t>(grid.N);
    int found = 0;
    for (int k = 0; k < grid.N; ++k) {
      const double p0 = phi[base + static_cast<std::size_t>(k)];
      const double p1 = phi[base + static_cast<std::size_t>((k + 1) % grid.N)];
      if (p0 > 0.0 && p1 <= 0.0) {
        heights[c] = -1.0 + (k + p0 / (p0 - p1)) * grid.h;
        ++found;
      }
    }
    if (found != 1) return std::nullopt;
  }
  return heights;
}

namespace {

std::vector<double> graph_slice(const PeriodicGrid& pg, const SpaceTimeGrid& sg, const std::vector<double>& heights) {
  std::vector<double> f(sg.spatial_size());
  for (std::size_t node = 0; node < f.size(); ++node) {
    const auto idx = sg.index(node);
    std::size_t col = 0;
    for (int a = 0; a < sg.axes(); ++a) col = col * static_cast<std::size_t>(pg.N) + static_cast<std::size_t>(idx[static_cast<std::size_t>(a)] % pg.N);
    f[node] = heights[col];
  }
  return f;
}

double uniform_spacing(const std::vector<double>& times) {
  if (times.size() < 2) throw AcError("need at least two snapshots");
  const double d = times[1] - times[0];
  for (std::size_t k = 1; k + 1 < times.size(); ++k) {
    if (std::abs(times[k + 1] - times[k] - d) > 1e-9 * d) throw AcError("snapshots are not uniformly spaced");
  }
  return d;
}

PairingAccumulator accumulate(const PhaseField& pf, const PhaseMap& map, const TestFunction& psi) {
  if (pf.phi.size() != pf.times.size()) throw AcError("phase field snapshots and times disagree");
  PairingAccumulator acc(pf.grid, map, psi, pf.eps, pf.times.front(), uniform_spacing(pf.times));
  const int J = static_cast<int>(pf.phi.size()) - 1;
  for (int j = 0; j < J; ++j) acc.add(j, pf.phi[static_cast<std::size_t>(j)], pf.phi[static_cast<std::size_t>(j) + 1]);
  acc.finish(J, pf.phi.back());
  return acc;
}

}  // namespace

TderivCheck tderiv_bound_check(const PhaseField& pf, const PhaseMap& map, const TestFunction& psi) {
  return accumulate(pf, map, psi).tderiv();
}

double sharp_pairing(const GraphFlow& graph, const TestFunction& psi) {
  const auto& g = graph.grid;
  double total = 0.0;
  for (int j = 0; j <= g.M; ++j) {
    const auto slice = graph.slice(j);
    double level = 0.0;
    for (std::size_t node = 0; node < g.spatial_size(); ++node) {
      Vec X(g.n);
      X.head(g.axes()) = g.coords(node);
      X[g.n - 1] = slice[node];
      level += g.spatial_weight(node) * psi.value(X, g.t(j)) * time_derivative(graph, j, node);
    }
    total += g.time_weight(j) * level;
  }
  return total;
}

VelocityCheck velocity_formula_check(const PhaseField& pf, const PhaseMap& map, const TestFunction& psi,
                                     const GraphFlow* graph) {
  VelocityCheck v = accumulate(pf, map, psi).velocity();
  if (graph) v.sharp = sharp_pairing(*graph, psi);
  return v;
}

AcRun run_allen_cahn(const AcConfig& cfg, const DoubleWell& well, const AmbientField& u, const Expr& d0) {
  const PeriodicGrid grid = periodic_grid(cfg.n, cfg.N);
  if (!(cfg.T > 0.0)) throw AcError("final time must be positive");
  if (cfg.output_every < 1) throw AcError("output_every must be at least 1");
  const PhaseMap map(well);

  double dt = cfg.dt;
  if (!(dt > 0.0)) {
    const AcStepper probe(grid, well, u, cfg.eps, std::numeric_limits<double>::min(), cfg.scheme,
                          cfg.spectral);
    dt = cfg.dt_fraction * probe.dt_limit();
  }
  const int every = cfg.output_every;
  const int outputs = static_cast<int>(std::ceil(cfg.T / (dt * every) - 1e-9));
  const int M = outputs * every;
  dt = cfg.T / M;
  AcStepper stepper(grid, well, u, cfg.eps, dt, cfg.scheme, cfg.spectral);

  AcRun run;
  run.dt = dt;
  run.steps = M;
  run.field.grid = grid;
  run.field.eps = cfg.eps;
  run.field.sigma = map.sigma();

  std::vector<double> phi = initial_profile(grid, d0, cfg.eps);
  std::vector<PairingAccumulator> probes;
  for (const auto& psi : cfg.probes) probes.emplace_back(grid, map, psi, cfg.eps, 0.0, dt);
  const Vec center = cfg.center.size() == grid.n ? cfg.center : Vec::Zero(grid.n);

  std::vector<std::vector<double>> heights;
  bool graphical = cfg.extraction == Extraction::Graph;
  auto output = [&](int j) {
    const double t = j * dt;
    run.output_times.push_back(t);
    if (cfg.keep_fields) {
      run.field.times.push_back(t);
      run.field.phi.push_back(phi);
    }
    if (cfg.extraction == Extraction::Radial) run.radius.push_back(interface_radius(grid, phi, center));
    if (graphical) {
      auto h = interface_heights(grid, phi);
      if (!h) {
        graphical = false;
        run.graph_lost_at = t;
      } else {
        heights.push_back(std::move(*h));
      }
    }
  };

  run.energy.push_back(ac_energy(grid, phi, well, cfg.eps));
  output(0);
  std::vector<double> prev;
  for (int j = 0; j < M; ++j) {
    prev = phi;
    stepper.step(phi, j * dt);
    for (double v : phi) {
      run.max_abs_phi = std::max(run.max_abs_phi, std::abs(v));
      if (!std::isfinite(v)) throw AcError("phase field became non-finite at step " + std::to_string(j + 1));
    }
    if (run.max_abs_phi > cfg.overshoot_limit) {
      run.overshoot = true;
      throw AcError("phase field overshoot |phi| = " + std::to_string(run.max_abs_phi) + " at step " +
                    std::to_string(j + 1));
    }
    for (auto& p : probes) p.add(j, prev, phi);
    const double e = ac_energy(grid, phi, well, cfg.eps);
    const double rise = (e - run.energy.back()) / run.energy.front();
    run.max_energy_increase = std::max(run.max_energy_increase, rise);
    if (rise > 1e-10) run.energy_monotone = false;
    run.energy.push_back(e);
    if ((j + 1) % every == 0) output(j + 1);
  }
  for (auto& p : probes) {
    p.finish(M, phi);
    run.tderiv.push_back(p.tderiv());
    run.velocity.push_back(p.velocity());
  }
  run.phi_final = phi;
  if (cfg.extraction == Extraction::Graph && graphical) {
    const SpaceTimeGrid sg = build_grid(grid.n, grid.N, outputs, 0.0, cfg.T);
    std::vector<double> f;
    f.reserve(sg.size());
    for (const auto& h : heights) {
      const auto s = graph_slice(grid, sg, h);
      f.insert(f.end(), s.begin(), s.end());
    }
    run.graph = make_flow(sg, std::move(f));
    for (std::size_t k = 0; k < probes.size(); ++k) run.velocity[k].sharp = sharp_pairing(*run.graph, cfg.probes[k]);
  }
  return run;
}

}  // namespace mcflab
