#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mcflab/allencahn.hpp"
#include "mcflab/mcfsolve.hpp"
#include "mcflab/mollify.hpp"
#include "mcflab/weakform.hpp"

namespace mcflab {

// Multi-run studies composed from the modules. Each returns raw metrics; the
// experiment runner and the acceptance suite apply their own thresholds.

/// Bumps of (x', t) only, one per centre.
std::vector<TestFunction> planar_family(const std::vector<double>& centers, double s, double radius,
                                        double time_radius, BumpProfile profile = BumpProfile::Polynomial);

struct ResidualLevel {
  int N = 0;
  double hx = 0.0;
  double dt = 0.0;
  double solver_error = 0.0;     // max nodal error against the exact solution
  std::vector<double> velocity;  // velocity_identity_residual per test function
  std::vector<double> brakke;    // brakke_residual total per test function
  double max_velocity = 0.0;     // family sup of |.|
  double max_brakke = 0.0;
  [[nodiscard]] double scale() const noexcept { return hx * hx + dt; }
};

struct ResidualSeries {
  std::string name;
  std::vector<ResidualLevel> levels;
  GraphFlow finest;
};

/// Solves d_t f = a_ij f_ij + u.(-grad f,1) from the exact solution's initial
/// data (exact Dirichlet trace, dt = dt_scale hx^2) on each N and evaluates both
/// residuals of every output.
ResidualSeries solver_residuals(const std::string& name, const Expr& exact, const AmbientField& u, int n,
                                double t1, const std::vector<int>& Ns, double dt_scale,
                                const std::vector<TestFunction>& family, unsigned threads = 1);

/// Largest residual / (hx^2 + dt) over the levels of a series.
double residual_constant(const ResidualSeries& s);

struct WitnessScan {
  std::vector<TestFunction> family;
  std::vector<double> residual;
  double min = 0.0;
  std::size_t argmin = 0;
  std::size_t negatives = 0;  // residual < -threshold
};

/// Brakke residual against bumps of radius lambda centred at (x_a, f(x_a, s_c) +
/// offset_b, s_c), with x_a and s_c snapped to grid nodes. The order is
/// x-major, then offset, then time.
WitnessScan witness_scan(const GraphFlow& gf, const AmbientField& u, const std::vector<double>& xs,
                         const std::vector<double>& offsets, const std::vector<double>& times, double lambda,
                         double threshold = 0.0);

struct BlowupStudy {
  BlowupResult result;
  int resolved = 0;
  double smallest_lambda = 0.0;    // of the resolved entries
  double final_value = 0.0;
  double final_rel_error = 0.0;    // |value/limit - 1| at the smallest resolved lambda
  double curvature_slope = 0.0;    // slope of log |curvature term| against log lambda
};

BlowupStudy blowup_study(const GraphFlow& gf, const AmbientField& u, const BlowupSpec& spec);

struct MollifyFlow {
  std::string name;
  std::string expr;
  double alpha = 1.0;
  int n = 2;
};

struct MollifySweepSetup {
  std::vector<double> eps{0.2, 0.1, 0.05};
  double ratio = 12.0;  // eps/hx = eps^2/dt
  double t0 = 0.15;
  double t1 = 0.35;
  bool projections = true;
  /// time-derivative probe points: x' offsets and normal offsets around the graph at the mid time
  std::vector<double> probe_x{-0.2, 0.1, 0.3};
  std::vector<double> probe_offsets{-0.03, 0.0, 0.02};
  std::uint64_t seed = 20240611;
};

struct MollifyLevel {
  double eps = 0.0;
  int N = 0;
  int M = 0;
  double dt = 0.0;
  LemmaBounds bounds;
  double sup_common = 0.0;  // sup |f^eps - f| on the inner region of the largest eps
  // projection maps at the mid level
  double max_gradF_minus_I = 0.0;
  double max_roundtrip = 0.0;
  std::size_t projection_failures = 0;
  double max_curvature_ratio = 0.0;
  // |centred difference in t of d^eps (step dt) - d_t d^eps| over the probes
  double dt_distance_error = 0.0;
};

struct MollifySweep {
  MollifyFlow flow;
  std::vector<MollifyLevel> levels;
  double decay_order = 0.0;  // slope of log sup_common against log eps
};

MollifySweep mollify_sweep(const MollifyFlow& flow, const MollifySweepSetup& setup, unsigned threads = 1);

struct CovLevel {
  double eps = 0.0;
  int N = 0;
  int M = 0;
  int stride = 1;
  ChangeOfVariables cov;
};

struct CovSweep {
  std::vector<CovLevel> levels;
  double order = 0.0;  // slope of log gap against log eps
};

/// Change-of-variables gap for each eps on a grid with eps/hx = eps^2/dt = ratio
/// over [t0, t1]. The quadrature stride keeps the integration nodes those of
/// the largest eps.
CovSweep cov_sweep(const Expr& flow, int n, const std::vector<double>& eps, double ratio, double t0, double t1,
                   const TestFunction& phi, unsigned threads = 1);

struct AcCircleSetup {
  std::vector<double> eps{0.04, 0.02};
  std::vector<int> N{128, 256};
  double R0 = 0.5;
  double T = 0.05;
  AcScheme scheme = AcScheme::Strang;
  bool spectral = true;
  double dt_fraction = 0.5;
  int output_every = 20;
  double probe_radius = 0.8;
  double probe_time = 0.025;
  double probe_time_radius = 0.024;
};

struct AcCircleCase {
  double eps = 0.0;
  int N = 0;
  double dt = 0.0;
  int steps = 0;
  std::vector<double> times;
  std::vector<double> radius;
  std::vector<double> exact;  // sqrt(R0^2 - 2t)
  double max_error = 0.0;
  double signed_error = 0.0;  // at the time of the largest error
  bool energy_monotone = false;
  double max_energy_increase = 0.0;
  double max_abs_phi = 0.0;
  TderivCheck tderiv;
  VelocityCheck velocity;
  std::vector<double> phi_final;
  PeriodicGrid grid;
};

/// Shrinking circle phi0 = tanh((R0 - |x|)/eps), u = 0, one run per (eps, N).
std::vector<AcCircleCase> ac_circle_study(const AcCircleSetup& setup, const DoubleWell& well, unsigned threads = 1);

struct AcFlatSetup {
  double eps = 0.04;
  int N = 128;
  double c = 0.2;
  double T = 0.25;
  AcScheme scheme = AcScheme::Strang;
  bool spectral = false;
  int output_every = 25;
  double probe_radius = 0.5;
  double probe_time = 0.125;
  double probe_time_radius = 0.12;
};

struct AcFlatStudy {
  double eps = 0.0;
  double hx = 0.0;
  double max_height_error = 0.0;  // against c t over all outputs and columns
  double graph_lost_at = -1.0;
  VelocityCheck velocity;
  TderivCheck tderiv;
  double exact_pairing = 0.0;  // c int psi(x', ct, t) dx' dt by midpoint quadrature
  std::optional<GraphFlow> graph;
};

/// Flat interface at x_n = 0 carried by u = (0, c) (phase +1 below).
AcFlatStudy ac_forced_flat_study(const AcFlatSetup& setup, const DoubleWell& well);

}  // namespace mcflab
