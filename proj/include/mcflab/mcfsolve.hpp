#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcflab/grid.hpp"

namespace mcflab {

class SolverError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class Scheme { SemiImplicit, Explicit };
enum class BoundarySource { ExactTrace, FrozenInitial };

struct SolverConfig {
  Scheme scheme = Scheme::SemiImplicit;
  int n = 2;
  int N = 64;
  double dt = 0.0;  // rounded down so that (t1 - t0) / dt is an integer
  double t0 = 0.0;
  double t1 = 0.5;
  BoundarySource boundary = BoundarySource::ExactTrace;
  double tol = 1e-12;
  int max_iterations = 2000;
  double slope_limit = 1e3;
};

struct StepDiagnostics {
  double max_slope = 0.0;
  int iterations = 0;
  double solve_error = 0.0;
  double min_eigenvalue = 1.0;  // of (a_ij) over all nodes
  double max_eigenvalue = 1.0;
  bool ellipticity_ok = true;
  bool max_principle_ok = true;  // only meaningful for u = 0
};

struct SolveResult {
  GraphFlow flow;
  std::vector<StepDiagnostics> steps;
  bool max_principle_ok = true;
  bool ellipticity_ok = true;
};

/// Grid implied by the configuration.
SpaceTimeGrid solver_grid(const SolverConfig& cfg);

/// Coefficients a_ij = delta_ij - p_i p_j / (1 + |p|^2).
Mat cutoff_coefficients(const Vec& p);

/// One step of  d_t f = a_ij(grad f) d_ij f + u.(-grad f, 1)  from level j to
/// j+1. `boundary_next` holds the Dirichlet values on grid boundary nodes, in
/// node order, at t_{j+1}.
std::vector<double> step(const SpaceTimeGrid& grid, int j, std::span<const double> fj, const AmbientField& u,
                         const SolverConfig& cfg, std::span<const double> boundary_next,
                         StepDiagnostics* diag = nullptr);

/// Marches from f0 at t0 to t1. With BoundarySource::ExactTrace the boundary
/// values are sampled from `exact`, otherwise frozen at their initial values.
SolveResult solve(std::span<const double> f0, const AmbientField& u, const SolverConfig& cfg,
                  const std::optional<Expr>& exact = std::nullopt);
SolveResult solve(const Expr& initial, const AmbientField& u, const SolverConfig& cfg,
                  const std::optional<Expr>& exact = std::nullopt);

struct Level {
  int N = 16;
  double dt = 0.0;
};

struct ConvergenceStudy {
  std::vector<Level> levels;
  std::vector<double> hx;
  std::vector<double> errors;  // max over space-time nodes
  double order = 0.0;          // least squares slope of log error against log hx
  bool exact = false;          // all errors at round-off
  std::vector<SolveResult> runs;
};

/// Semi-implicit solves on each level against a closed-form solution; levels
/// run concurrently up to `threads` at a time.
ConvergenceStudy convergence_study(const Expr& exact, const AmbientField& u, int n, double t0, double t1,
                                   const std::vector<Level>& levels, Scheme scheme = Scheme::SemiImplicit,
                                   unsigned threads = 1, bool keep_runs = false);

/// Least squares slope of log y against log x.
double log_slope(std::span<const double> x, std::span<const double> y);

}  // namespace mcflab
