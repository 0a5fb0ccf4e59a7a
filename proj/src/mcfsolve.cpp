#include "mcflab/mcfsolve.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCore>
#include <cmath>
#include <sstream>

#include "mcflab/parallel.hpp"

namespace mcflab {

namespace {

std::vector<double> sample_level(const Expr& e, const SpaceTimeGrid& g, double t) {
  std::vector<double> out(g.spatial_size());
  std::array<double, 3> X{0.0, 0.0, 0.0};
  for (std::size_t node = 0; node < out.size(); ++node) {
    const auto idx = g.index(node);
    for (int a = 0; a < g.axes(); ++a) X[static_cast<std::size_t>(a)] = g.x(idx[static_cast<std::size_t>(a)]);
    out[node] = e(std::span<const double>(X.data(), static_cast<std::size_t>(g.n)), t);
  }
  return out;
}

double forcing(const SpaceTimeGrid& g, int j, std::size_t node, std::span<const double> fj, const Vec& grad,
               const AmbientField& u) {
  if (u.is_zero()) return 0.0;
  Vec X(g.n);
  X.head(g.axes()) = g.coords(node);
  X[g.axes()] = fj[node];
  const Vec un = u.at_node(g, j, node, X);
  return un[g.axes()] - un.head(g.axes()).dot(grad);
}

}  // namespace

SpaceTimeGrid solver_grid(const SolverConfig& cfg) {
  if (!(cfg.dt > 0.0)) throw GridError("time step must be positive");
  const double span = cfg.t1 - cfg.t0;
  const int M = static_cast<int>(std::ceil(span / cfg.dt - 1e-9));
  return build_grid(cfg.n, cfg.N, std::max(M, 1), cfg.t0, cfg.t1);
}

Mat cutoff_coefficients(const Vec& p) {
  const int k = static_cast<int>(p.size());
  Mat a = Mat::Identity(k, k);
  a -= p * p.transpose() / (1.0 + p.squaredNorm());
  return a;
}

std::vector<double> step(const SpaceTimeGrid& g, int j, std::span<const double> fj, const AmbientField& u,
                         const SolverConfig& cfg, std::span<const double> boundary_next, StepDiagnostics* diag) {
  const std::size_t S = g.spatial_size();
  if (fj.size() != S) throw SolverError("level has the wrong number of samples");
  for (double v : fj)
    if (!std::isfinite(v)) throw SolverError("non-finite height at level " + std::to_string(j));
  if (!(cfg.tol <= 1e-10)) throw SolverError("linear-solve tolerance must be at most 1e-10");
  const double h2 = g.hx * g.hx;
  const double dt = g.dt;
  const int k = g.axes();
  if (cfg.scheme == Scheme::Explicit && dt > h2 / (2.0 * k) * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "explicit scheme violates dt <= hx^2/(2(n-1)): dt=" << dt << ", limit=" << h2 / (2.0 * k);
    throw SolverError(os.str());
  }

  std::vector<long> unknown(S, -1);
  long count = 0;
  std::size_t b = 0;
  std::vector<double> bvalue(S, 0.0);
  for (std::size_t node = 0; node < S; ++node) {
    if (g.on_boundary(node)) {
      if (b >= boundary_next.size()) throw SolverError("boundary trace is too short");
      bvalue[node] = boundary_next[b++];
    } else {
      unknown[node] = count++;
    }
  }
  if (b != boundary_next.size()) throw SolverError("boundary trace has the wrong length");

  StepDiagnostics d;
  d.min_eigenvalue = 1.0;
  d.max_eigenvalue = 0.0;
  double worst_lower = 1.0;

  // Stencil weights of the frozen operator sum_ij a_ij d_ij at each interior node.
  struct Row {
    std::size_t node;
    Mat a;
    double rhs;
  };
  std::vector<Row> rows;
  rows.reserve(static_cast<std::size_t>(count));
  for (std::size_t node = 0; node < S; ++node) {
    const Vec grad = spatial_gradient(fj, g, node);
    const double slope = grad.norm();
    d.max_slope = std::max(d.max_slope, slope);
    if (unknown[node] < 0) continue;
    Row r{node, cutoff_coefficients(grad), fj[node] + dt * forcing(g, j, node, fj, grad, u)};
    if (k == 1) {
      d.min_eigenvalue = std::min(d.min_eigenvalue, r.a(0, 0));
      d.max_eigenvalue = std::max(d.max_eigenvalue, r.a(0, 0));
    } else {
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(Eigen::Matrix2d(r.a));
      d.min_eigenvalue = std::min(d.min_eigenvalue, es.eigenvalues()[0]);
      d.max_eigenvalue = std::max(d.max_eigenvalue, es.eigenvalues()[1]);
    }
    rows.push_back(std::move(r));
  }
  if (d.max_slope > cfg.slope_limit) {
    std::ostringstream os;
    os << "slope blow-up at level " << j << ": max|grad f| = " << d.max_slope << " > " << cfg.slope_limit;
    throw SolverError(os.str());
  }
  worst_lower = 1.0 / (1.0 + d.max_slope * d.max_slope);
  d.ellipticity_ok = d.min_eigenvalue >= worst_lower * (1.0 - 1e-12) && d.max_eigenvalue <= 1.0 + 1e-12;

  auto for_stencil = [&](const Row& r, auto&& emit) {
    for (int a = 0; a < k; ++a) {
      const double c = r.a(a, a) / h2;
      emit(g.shifted(r.node, a, 1), c);
      emit(g.shifted(r.node, a, -1), c);
      emit(r.node, -2.0 * c);
    }
    if (k == 2) {
      const double c = 2.0 * r.a(0, 1) / (4.0 * h2);
      const std::size_t p = g.shifted(r.node, 0, 1), m = g.shifted(r.node, 0, -1);
      emit(g.shifted(p, 1, 1), c);
      emit(g.shifted(m, 1, -1), c);
      emit(g.shifted(p, 1, -1), -c);
      emit(g.shifted(m, 1, 1), -c);
    }
  };

  std::vector<double> next(S);
  for (std::size_t node = 0; node < S; ++node)
    if (unknown[node] < 0) next[node] = bvalue[node];

  if (cfg.scheme == Scheme::Explicit) {
    for (const auto& r : rows) {
      double L = 0.0;
      for_stencil(r, [&](std::size_t nb, double c) { L += c * fj[nb]; });
      next[r.node] = r.rhs + dt * L;
    }
  } else {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(rows.size() * (k == 1 ? 3 : 9));
    Eigen::VectorXd rhs(count), guess(count);
    for (const auto& r : rows) {
      const long row = unknown[r.node];
      double bsum = 0.0;
      trip.emplace_back(row, row, 1.0);
      for_stencil(r, [&](std::size_t nb, double c) {
        if (unknown[nb] >= 0) trip.emplace_back(row, unknown[nb], -dt * c);
        else bsum += dt * c * bvalue[nb];
      });
      rhs[row] = r.rhs + bsum;
      guess[row] = fj[r.node];
    }
    Eigen::SparseMatrix<double> A(count, count);
    A.setFromTriplets(trip.begin(), trip.end());
    Eigen::BiCGSTAB<Eigen::SparseMatrix<double>, Eigen::DiagonalPreconditioner<double>> solver;
    solver.setTolerance(cfg.tol);
    solver.setMaxIterations(cfg.max_iterations);
    solver.compute(A);
    const Eigen::VectorXd x = solver.solveWithGuess(rhs, guess);
    d.iterations = static_cast<int>(solver.iterations());
    d.solve_error = solver.error();
    if (solver.info() != Eigen::Success) {
      std::ostringstream os;
      os << "linear solve did not converge at level " << j << " after " << d.iterations
         << " iterations (error " << d.solve_error << ")";
      throw SolverError(os.str());
    }
    for (const auto& r : rows) next[r.node] = x[unknown[r.node]];
  }

  for (double v : next)
    if (!std::isfinite(v)) throw SolverError("non-finite height produced at level " + std::to_string(j + 1));
  if (u.is_zero()) {
    double hi = *std::max_element(fj.begin(), fj.end()), lo = *std::min_element(fj.begin(), fj.end());
    for (double v : boundary_next) hi = std::max(hi, v), lo = std::min(lo, v);
    const double slack = 1e-10 * (1.0 + std::max(std::abs(hi), std::abs(lo)));
    for (double v : next)
      if (v > hi + slack || v < lo - slack) d.max_principle_ok = false;
  }
  if (diag) *diag = d;
  return next;
}

SolveResult solve(std::span<const double> f0, const AmbientField& u, const SolverConfig& cfg,
                  const std::optional<Expr>& exact) {
  const auto g = solver_grid(cfg);
  const std::size_t S = g.spatial_size();
  if (f0.size() != S) throw SolverError("initial data has the wrong number of samples");
  if (u.dimension() != g.n) throw SolverError("transport field dimension does not match n");
  if (cfg.boundary == BoundarySource::ExactTrace && !exact)
    throw SolverError("exact-trace boundary requires a closed-form solution");

  std::vector<std::size_t> bnodes;
  for (std::size_t node = 0; node < S; ++node)
    if (g.on_boundary(node)) bnodes.push_back(node);
  std::vector<double> frozen;
  for (std::size_t node : bnodes) frozen.push_back(f0[node]);

  std::vector<double> f(g.size());
  std::copy(f0.begin(), f0.end(), f.begin());
  SolveResult res;
  res.steps.reserve(static_cast<std::size_t>(g.M));
  std::vector<double> trace(bnodes.size());
  for (int j = 0; j < g.M; ++j) {
    if (cfg.boundary == BoundarySource::ExactTrace) {
      const auto lvl = sample_level(*exact, g, g.t(j + 1));
      for (std::size_t b = 0; b < bnodes.size(); ++b) trace[b] = lvl[bnodes[b]];
    } else {
      trace = frozen;
    }
    StepDiagnostics d;
    const std::span<const double> cur(f.data() + static_cast<std::size_t>(j) * S, S);
    const auto next = step(g, j, cur, u, cfg, trace, &d);
    std::copy(next.begin(), next.end(), f.begin() + static_cast<std::ptrdiff_t>((j + 1) * S));
    res.max_principle_ok = res.max_principle_ok && d.max_principle_ok;
    res.ellipticity_ok = res.ellipticity_ok && d.ellipticity_ok;
    res.steps.push_back(d);
  }
  res.flow = make_flow(g, std::move(f));
  return res;
}

SolveResult solve(const Expr& initial, const AmbientField& u, const SolverConfig& cfg,
                  const std::optional<Expr>& exact) {
  const auto g = solver_grid(cfg);
  const auto f0 = sample_level(initial, g, g.t0);
  return solve(f0, u, cfg, exact);
}

double log_slope(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw std::invalid_argument("log_slope needs matching inputs of length >= 2");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

ConvergenceStudy convergence_study(const Expr& exact, const AmbientField& u, int n, double t0, double t1,
                                   const std::vector<Level>& levels, Scheme scheme, unsigned threads,
                                   bool keep_runs) {
  if (levels.size() < 3) throw SolverError("a convergence study needs at least three levels");
  ConvergenceStudy st;
  st.levels = levels;
  st.hx.resize(levels.size());
  st.errors.resize(levels.size());
  st.runs.resize(levels.size());
  parallel_for(levels.size(), threads, [&](std::size_t i) {
    SolverConfig cfg;
    cfg.scheme = scheme;
    cfg.n = n;
    cfg.N = levels[i].N;
    cfg.dt = levels[i].dt;
    cfg.t0 = t0;
    cfg.t1 = t1;
    auto run = solve(exact, u, cfg, exact);
    const auto truth = sample_graph(exact, run.flow.grid);
    double err = 0.0;
    for (std::size_t k = 0; k < truth.f.size(); ++k) err = std::max(err, std::abs(truth.f[k] - run.flow.f[k]));
    st.hx[i] = run.flow.grid.hx;
    st.errors[i] = err;
    if (keep_runs) st.runs[i] = std::move(run);
  });
  if (!keep_runs) st.runs.clear();
  st.exact = std::all_of(st.errors.begin(), st.errors.end(), [](double e) { return e < 1e-11; });
  st.order = st.exact ? std::numeric_limits<double>::infinity() : log_slope(st.hx, st.errors);
  return st;
}

}  // namespace mcflab
