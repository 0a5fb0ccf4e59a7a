#include "mcflab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace mcflab {

std::size_t SpaceTimeGrid::spatial_size() const noexcept {
  std::size_t s = 1;
  for (int a = 0; a < axes(); ++a) s *= static_cast<std::size_t>(per_axis());
  return s;
}

std::array<int, 2> SpaceTimeGrid::index(std::size_t node) const noexcept {
  if (n == 2) return {static_cast<int>(node), 0};
  const auto p = static_cast<std::size_t>(per_axis());
  return {static_cast<int>(node / p), static_cast<int>(node % p)};
}

std::size_t SpaceTimeGrid::node(std::array<int, 2> idx) const noexcept {
  if (n == 2) return static_cast<std::size_t>(idx[0]);
  return static_cast<std::size_t>(idx[0]) * static_cast<std::size_t>(per_axis()) + static_cast<std::size_t>(idx[1]);
}

std::size_t SpaceTimeGrid::stride(int axis) const noexcept {
  if (n == 2 || axis == 1) return 1;
  return static_cast<std::size_t>(per_axis());
}

std::size_t SpaceTimeGrid::shifted(std::size_t node, int axis, int offset) const noexcept {
  const auto s = static_cast<std::ptrdiff_t>(stride(axis));
  return static_cast<std::size_t>(static_cast<std::ptrdiff_t>(node) + s * offset);
}

Vec SpaceTimeGrid::coords(std::size_t node) const {
  const auto idx = index(node);
  Vec x(axes());
  for (int a = 0; a < axes(); ++a) x[a] = this->x(idx[static_cast<std::size_t>(a)]);
  return x;
}

bool SpaceTimeGrid::on_boundary(std::size_t node) const noexcept {
  const auto idx = index(node);
  for (int a = 0; a < axes(); ++a) {
    const int i = idx[static_cast<std::size_t>(a)];
    if (i == 0 || i == N) return true;
  }
  return false;
}

double SpaceTimeGrid::spatial_weight(std::size_t node) const noexcept {
  const auto idx = index(node);
  double w = 1.0;
  for (int a = 0; a < axes(); ++a) {
    const int i = idx[static_cast<std::size_t>(a)];
    w *= (i == 0 || i == N) ? 0.5 * hx : hx;
  }
  return w;
}

double SpaceTimeGrid::time_weight(int j) const noexcept { return (j == 0 || j == M) ? 0.5 * dt : dt; }

SpaceTimeGrid build_grid(int n, int N, int M, double t0, double t1) {
  if (n != 2 && n != 3) throw GridError("ambient dimension n must be 2 or 3, got " + std::to_string(n));
  if (N < 4) throw GridError("N must be at least 4, got " + std::to_string(N));
  if (M < 1) throw GridError("M must be at least 1, got " + std::to_string(M));
  if (!(t0 < t1)) throw GridError("time interval must satisfy t0 < t1");
  SpaceTimeGrid g;
  g.n = n;
  g.N = N;
  g.M = M;
  g.t0 = t0;
  g.t1 = t1;
  g.hx = 2.0 / N;
  g.dt = (t1 - t0) / M;
  return g;
}

std::span<const double> GraphFlow::slice(int j) const {
  const std::size_t s = grid.spatial_size();
  return {f.data() + static_cast<std::size_t>(j) * s, s};
}

GraphFlow make_flow(const SpaceTimeGrid& grid, std::vector<double> f) {
  if (f.size() != grid.size()) {
    throw GridError("flow has " + std::to_string(f.size()) + " samples, grid expects " + std::to_string(grid.size()));
  }
  for (double v : f) {
    if (!std::isfinite(v)) throw SampleError("flow contains non-finite samples");
  }
  GraphFlow gf;
  gf.grid = grid;
  gf.f = std::move(f);
  const std::size_t S = grid.spatial_size();
  for (std::size_t node = 0; node < S; ++node) {
    if (grid.on_boundary(node)) gf.boundary.nodes.push_back(node);
  }
  gf.boundary.values.reserve(gf.boundary.nodes.size() * grid.time_levels());
  for (int j = 0; j <= grid.M; ++j) {
    for (std::size_t node : gf.boundary.nodes) gf.boundary.values.push_back(gf.at(j, node));
  }
  return gf;
}

GraphFlow sample_graph(const Expr& expr, const SpaceTimeGrid& grid) {
  if (expr.uses_height()) throw SampleError("graph expression '" + expr.source() + "' must not depend on xn");
  const std::size_t S = grid.spatial_size();
  std::vector<double> f(grid.size());
  std::array<double, 3> X{0.0, 0.0, 0.0};
  for (int j = 0; j <= grid.M; ++j) {
    const double t = grid.t(j);
    for (std::size_t node = 0; node < S; ++node) {
      const auto idx = grid.index(node);
      for (int a = 0; a < grid.axes(); ++a) X[static_cast<std::size_t>(a)] = grid.x(idx[static_cast<std::size_t>(a)]);
      const double v = expr(std::span<const double>(X.data(), static_cast<std::size_t>(grid.n)), t);
      if (!std::isfinite(v)) {
        std::ostringstream os;
        os << "expression '" << expr.source() << "' is not finite at x=(";
        for (int a = 0; a < grid.axes(); ++a) os << (a ? ", " : "") << X[static_cast<std::size_t>(a)];
        os << "), t=" << t;
        throw SampleError(os.str());
      }
      f[static_cast<std::size_t>(j) * S + node] = v;
    }
  }
  return make_flow(grid, std::move(f));
}

AmbientField AmbientField::zero(int n) {
  AmbientField u;
  u.n_ = n;
  u.zero_ = true;
  for (int k = 0; k < n; ++k) u.exprs_.push_back(Expr::constant(0.0));
  return u;
}

AmbientField AmbientField::closed_form(std::vector<Expr> components) {
  AmbientField u;
  u.n_ = static_cast<int>(components.size());
  u.exprs_ = std::move(components);
  return u;
}

AmbientField AmbientField::parse(const std::vector<std::string>& components, int n) {
  if (static_cast<int>(components.size()) != n) {
    throw GridError("ambient field needs " + std::to_string(n) + " components, got " + std::to_string(components.size()));
  }
  std::vector<Expr> e;
  for (const auto& s : components) e.push_back(Expr::parse(s, n));
  return closed_form(std::move(e));
}

AmbientField AmbientField::sampled(const SpaceTimeGrid& grid, std::vector<double> samples) {
  const std::size_t expected = grid.size() * static_cast<std::size_t>(grid.n);
  if (samples.size() != expected) throw GridError("sampled ambient field has wrong size");
  for (double v : samples) {
    if (!std::isfinite(v)) throw SampleError("sampled ambient field contains non-finite values");
  }
  AmbientField u;
  u.n_ = grid.n;
  u.sampled_ = true;
  u.samples_ = std::move(samples);
  u.spatial_ = grid.spatial_size();
  return u;
}

Vec AmbientField::at(const Vec& X, double t) const {
  if (sampled_) throw std::logic_error("sampled ambient field has no closed form");
  Vec out(n_);
  if (zero_) {
    out.setZero();
    return out;
  }
  std::array<double, 3> buf{0.0, 0.0, 0.0};
  for (int k = 0; k < X.size(); ++k) buf[static_cast<std::size_t>(k)] = X[k];
  for (int k = 0; k < n_; ++k) {
    out[k] = exprs_[static_cast<std::size_t>(k)](std::span<const double>(buf.data(), static_cast<std::size_t>(n_)), t);
  }
  return out;
}

Vec AmbientField::at_node(const SpaceTimeGrid& grid, int j, std::size_t node, const Vec& X) const {
  if (!sampled_) return at(X, grid.t(j));
  Vec out(n_);
  const std::size_t base = (static_cast<std::size_t>(j) * spatial_ + node) * static_cast<std::size_t>(n_);
  for (int k = 0; k < n_; ++k) out[k] = samples_[base + static_cast<std::size_t>(k)];
  return out;
}

bool AmbientField::time_dependent() const noexcept {
  if (sampled_) return true;
  return std::any_of(exprs_.begin(), exprs_.end(), [](const Expr& e) { return e.uses_time(); });
}

std::vector<std::string> AmbientField::sources() const {
  std::vector<std::string> s;
  if (sampled_) return {"<sampled>"};
  for (const auto& e : exprs_) s.push_back(zero_ ? "0" : e.source());
  return s;
}

double axis_derivative(std::span<const double> v, const SpaceTimeGrid& grid, std::size_t node, int axis) {
  const int i = grid.index(node)[static_cast<std::size_t>(axis)];
  const double h = grid.hx;
  auto at = [&](int off) { return v[grid.shifted(node, axis, off)]; };
  if (i == 0) return (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h);
  if (i == grid.N) return (3.0 * at(0) - 4.0 * at(-1) + at(-2)) / (2.0 * h);
  return (at(1) - at(-1)) / (2.0 * h);
}

Vec spatial_gradient(std::span<const double> v, const SpaceTimeGrid& grid, std::size_t node) {
  Vec g(grid.axes());
  for (int a = 0; a < grid.axes(); ++a) g[a] = axis_derivative(v, grid, node, a);
  return g;
}

double time_derivative(const GraphFlow& gf, int j, std::size_t node) {
  const auto& g = gf.grid;
  if (g.M < 2) throw GridError("time derivative needs at least three time levels");
  if (j == 0) return (-3.0 * gf.at(0, node) + 4.0 * gf.at(1, node) - gf.at(2, node)) / (2.0 * g.dt);
  if (j == g.M) return (3.0 * gf.at(j, node) - 4.0 * gf.at(j - 1, node) + gf.at(j - 2, node)) / (2.0 * g.dt);
  return (gf.at(j + 1, node) - gf.at(j - 1, node)) / (2.0 * g.dt);
}

namespace {

struct NodeRef {
  int j;
  std::array<int, 2> idx;
  std::size_t node;
};

}  // namespace

SeminormResult parabolic_seminorm(const GraphFlow& gf, double alpha, std::uint64_t seed) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw GridError("Hölder exponent must lie in (0,1]");
  const auto& g = gf.grid;
  const std::size_t S = g.spatial_size();
  const std::size_t L = g.time_levels();
  const std::size_t total = S * L;
  const int axes = g.axes();

  std::vector<double> grad(total * static_cast<std::size_t>(axes));
  for (int j = 0; j <= g.M; ++j) {
    const auto sl = gf.slice(j);
    for (std::size_t node = 0; node < S; ++node) {
      for (int a = 0; a < axes; ++a) {
        grad[(static_cast<std::size_t>(j) * S + node) * static_cast<std::size_t>(axes) + static_cast<std::size_t>(a)] =
            axis_derivative(sl, g, node, a);
      }
    }
  }

  // Denominator tables indexed by integer offsets.
  const std::size_t max_d2 = static_cast<std::size_t>(axes) * static_cast<std::size_t>(g.N) * static_cast<std::size_t>(g.N);
  std::vector<double> space_pow(max_d2 + 1);
  for (std::size_t d2 = 0; d2 <= max_d2; ++d2) space_pow[d2] = std::pow(static_cast<double>(d2) * g.hx * g.hx, 0.5 * alpha);
  std::vector<double> time_pow(L), time_pow_f(L);
  for (std::size_t dj = 0; dj < L; ++dj) {
    const double ds = static_cast<double>(dj) * g.dt;
    time_pow[dj] = std::pow(ds, 0.5 * alpha);
    time_pow_f[dj] = std::pow(ds, 0.5 * (1.0 + alpha));
  }

  SeminormResult r;
  auto grad_pair = [&](std::size_t p, std::size_t q) {
    const int jp = static_cast<int>(p / S), jq = static_cast<int>(q / S);
    const auto ip = g.index(p % S), iq = g.index(q % S);
    std::size_t d2 = 0;
    double num2 = 0.0;
    for (int a = 0; a < axes; ++a) {
      const auto ua = static_cast<std::size_t>(a);
      const long di = ip[ua] - iq[ua];
      d2 += static_cast<std::size_t>(di * di);
      const double dg = grad[p * static_cast<std::size_t>(axes) + ua] - grad[q * static_cast<std::size_t>(axes) + ua];
      num2 += dg * dg;
    }
    const double den = std::max(space_pow[d2], time_pow[static_cast<std::size_t>(std::abs(jp - jq))]);
    ++r.pairs;
    if (den > 0.0) r.gradient_part = std::max(r.gradient_part, std::sqrt(num2) / den);
  };
  auto time_pair = [&](std::size_t node, std::size_t ja, std::size_t jb) {
    const double num = std::abs(gf.f[ja * S + node] - gf.f[jb * S + node]);
    r.time_part = std::max(r.time_part, num / time_pow_f[ja > jb ? ja - jb : jb - ja]);
    ++r.pairs;
  };

  constexpr std::size_t exhaustive_limit = 10000;
  if (total <= exhaustive_limit) {
    r.exhaustive = true;
    for (std::size_t p = 0; p < total; ++p) {
      for (std::size_t q = p + 1; q < total; ++q) grad_pair(p, q);
    }
    for (std::size_t node = 0; node < S; ++node) {
      for (std::size_t ja = 0; ja < L; ++ja) {
        for (std::size_t jb = ja + 1; jb < L; ++jb) time_pair(node, ja, jb);
      }
    }
    r.value = r.gradient_part + r.time_part;
    return r;
  }

  // Stratified: every node against its local window plus random partners.
  r.exhaustive = false;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> any(0, total - 1);
  constexpr int window = 2;
  constexpr int random_partners = 32;
  for (std::size_t p = 0; p < total; ++p) {
    const int jp = static_cast<int>(p / S);
    const auto ip = g.index(p % S);
    for (int dj = 0; dj <= window; ++dj) {
      if (jp + dj > g.M) break;
      for (int d0 = -window; d0 <= window; ++d0) {
        for (int d1 = (axes == 2 ? -window : 0); d1 <= (axes == 2 ? window : 0); ++d1) {
          const int i0 = ip[0] + d0, i1 = ip[1] + d1;
          if (i0 < 0 || i0 > g.N || i1 < 0 || i1 > g.N) continue;
          const std::size_t q = static_cast<std::size_t>(jp + dj) * S + g.node({i0, i1});
          if (q > p) grad_pair(p, q);
        }
      }
    }
    for (int k = 0; k < random_partners; ++k) {
      const std::size_t q = any(rng);
      if (q != p) grad_pair(p, q);
    }
  }
  const bool time_exhaustive = L * L * S <= 50'000'000;
  std::uniform_int_distribution<std::size_t> any_level(0, L - 1);
  for (std::size_t node = 0; node < S; ++node) {
    for (std::size_t ja = 0; ja < L; ++ja) {
      if (time_exhaustive) {
        for (std::size_t jb = ja + 1; jb < L; ++jb) time_pair(node, ja, jb);
      } else {
        for (std::size_t jb = ja + 1; jb < std::min(L, ja + 1 + window); ++jb) time_pair(node, ja, jb);
        for (int k = 0; k < random_partners; ++k) {
          const std::size_t jb = any_level(rng);
          if (jb != ja) time_pair(node, ja, jb);
        }
      }
    }
  }
  r.value = r.gradient_part + r.time_part;
  return r;
}

}  // namespace mcflab
