#pragma once

#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcflab/grid.hpp"
#include "mcflab/test_function.hpp"

namespace mcflab {

class MollifyError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// rho(z) = C exp(-8|z|^2/(1-|z|^2)) on the unit ball of R^n (z = (x, t), x in R^{n-1}).
struct MollifierKernel {
  int n = 2;
  double C = 0.0;          // normalization, int rho = 1
  double grad_l1 = 0.0;    // int |grad_x rho| dz
  double second_moment = 0.0;  // int rho z_1^2 dz

  [[nodiscard]] double profile(double u) const noexcept;  // u = |z|^2
  [[nodiscard]] double profile_derivative(double u) const noexcept;
  [[nodiscard]] double operator()(double u) const noexcept { return C * profile(u); }
};

const MollifierKernel& standard_kernel(int n);

/// Parabolic mollification f^eps = rho^eps * f of a sampled flow, with
/// rho^eps(x,t) = eps^{-n-1} rho(x/eps, t/eps^2). Values off the grid come from
/// the normalized discrete convolution S/Z, which is smooth in (x,t).
class MollifiedGraph {
public:
  struct Eval {
    double value = 0.0;
    Vec grad;
    Mat hess;
    double dt = 0.0;
  };

  MollifiedGraph(std::shared_ptr<const GraphFlow> base, double eps);

  [[nodiscard]] const GraphFlow& base() const noexcept { return *base_; }
  [[nodiscard]] const SpaceTimeGrid& grid() const noexcept { return base_->grid; }
  [[nodiscard]] double eps() const noexcept { return eps_; }
  [[nodiscard]] int n() const noexcept { return base_->grid.n; }

  /// Nodes whose parabolic eps-neighbourhood lies inside the domain.
  [[nodiscard]] bool inner(int j, std::size_t node) const noexcept;
  [[nodiscard]] int first_level() const noexcept { return jlo_; }
  [[nodiscard]] int last_level() const noexcept { return jhi_; }
  [[nodiscard]] int first_index() const noexcept { return ilo_; }
  [[nodiscard]] int last_index() const noexcept { return ihi_; }

  /// f^eps on inner nodes (NaN elsewhere), (M+1) x spatial_size; tabulated on first use.
  [[nodiscard]] const std::vector<double>& samples() const {
    tabulate();
    return feps_;
  }
  [[nodiscard]] double at(int j, std::size_t node) const {
    return samples()[static_cast<std::size_t>(j) * grid().spatial_size() + node];
  }

  /// Value and derivatives at an inner node, from tabulated kernel values.
  [[nodiscard]] Eval at_node(int j, std::size_t node) const;
  /// Value and derivatives anywhere in the inner box.
  [[nodiscard]] Eval operator()(const Vec& x, double t) const;
  [[nodiscard]] bool in_domain(const Vec& x, double t) const noexcept;

  /// Discrete kernel mass before renormalization (1 up to quadrature error).
  [[nodiscard]] double raw_mass() const noexcept { return raw_mass_; }
  /// Reach of the smoothness neighbourhood, eps^{1-alpha}/c(rho); +inf until set.
  [[nodiscard]] double reach() const noexcept { return reach_; }
  void set_regularity(double alpha, double seminorm);
  [[nodiscard]] std::optional<double> alpha() const noexcept { return alpha_; }
  [[nodiscard]] std::optional<double> seminorm() const noexcept { return seminorm_; }

private:
  struct Tap {
    int di[2];
    int dj;
    double g, dg, d2g;  // profile and its u-derivatives
    double y[2];        // target minus node, spatial
    double s;           // time offset
  };

  void tabulate() const;

  std::shared_ptr<const GraphFlow> base_;
  double eps_ = 0.0;
  int ri_ = 0;  // stencil half-width in cells
  int rj_ = 0;  // stencil half-width in steps
  int ilo_ = 0, ihi_ = 0, jlo_ = 0, jhi_ = 0;
  std::vector<Tap> taps_;
  double Z_ = 0.0;
  mutable std::vector<double> feps_;
  std::shared_ptr<std::once_flag> tabulated_;
  double raw_mass_ = 0.0;
  double reach_ = std::numeric_limits<double>::infinity();
  std::optional<double> alpha_;
  std::optional<double> seminorm_;
};

/// Requires eps >= 2 hx and eps^2 >= 2 dt.
MollifiedGraph mollify_graph(const GraphFlow& gf, double eps);
MollifiedGraph mollify_graph(std::shared_ptr<const GraphFlow> gf, double eps);

struct LemmaBounds {
  double eps = 0.0;
  double alpha = 0.0;
  double seminorm = 0.0;
  double c_rho = 0.0;        // [f] int |grad rho|
  double sup_diff = 0.0;     // sup |f^eps - f| over inner nodes
  double bound_values = 0.0;     // 2 [f] eps^{1+alpha}
  double max_hessian = 0.0;  // sup ||D^2 f^eps|| (spectral norm)
  double bound_hessian = 0.0;    // c(rho) eps^{alpha-1}
  bool values_hold = false;
  bool hessian_holds = false;
};

/// Measures both mollification estimates. When `seminorm` is not given it is
/// computed from the base flow. Also records the smoothness reach on `mg`.
LemmaBounds lemma_bounds(MollifiedGraph& mg, double alpha, std::optional<double> seminorm = std::nullopt);

/// C^2 clipping profile: eta(s) = s on [-eps, eps], constant 1.5 eps beyond 2 eps, odd.
struct Clip {
  double value, d1, d2;
};
Clip clip_profile(double s, double eps) noexcept;

struct SignedDistance {
  double dtilde = 0.0;
  double d = 0.0;
  Vec foot;          // x* with X* = (x*, f^eps(x*, t))
  Vec grad;          // grad d^eps (ambient)
  Mat hess;          // D^2 d^eps
  Mat hess_tilde;    // D^2 of the unclipped distance
  double dt = 0.0;   // d_t d^eps
  int iterations = 0;
};

/// Signed distance to the graph of f^eps at time t by damped Newton on the
/// foot point; tolerance 1e-10, at most 50 iterations.
SignedDistance signed_distance(const MollifiedGraph& mg, const Vec& X, double t);
SignedDistance signed_distance_at_level(const MollifiedGraph& mg, const Vec& X, int j);

/// C^1 Catmull-Rom tensor interpolant of one time slice; its derivative at a
/// node equals the centred difference.
class SliceInterpolant {
public:
  SliceInterpolant(const SpaceTimeGrid& grid, std::span<const double> values);
  [[nodiscard]] double value(const Vec& x, Vec* grad = nullptr) const;

private:
  double sample(int i, int k) const;
  SpaceTimeGrid grid_;
  std::vector<double> values_;
};

/// x -> x* = x - d^eps grad' d^eps evaluated at (x, f(x,t), t), and its inverse.
class ProjectionMap {
public:
  ProjectionMap(const MollifiedGraph& mg, int j);
  [[nodiscard]] Vec F(const Vec& x, Mat* jacobian = nullptr) const;
  /// Newton inversion of F seeded at x*.
  [[nodiscard]] Vec G(const Vec& xstar, int* iterations = nullptr) const;
  [[nodiscard]] int level() const noexcept { return j_; }

private:
  const MollifiedGraph& mg_;
  int j_;
  double t_;
  SliceInterpolant interp_;
};

struct ProjectionReport {
  int level = 0;
  std::vector<std::size_t> nodes;
  std::vector<Vec> F;
  std::vector<Mat> gradF;
  double max_gradF_minus_I = 0.0;  // Frobenius
  double max_roundtrip = 0.0;      // |G(F(x)) - x|
  double max_fd_jacobian = 0.0;    // closed form against centred differences of F
  double max_curvature_ratio = 0.0;  // ||D^2 d|| (1 - k|d|) / k with k = c(rho) eps^{alpha-1}
  double max_eikonal = 0.0;        // | |grad dtilde| - 1 |
  std::vector<std::string> failures;
};

/// Assembles F^eps and its Jacobian on inner nodes with margin 2 eps and
/// round-trips every node through G^eps.
ProjectionReport projection_maps(const MollifiedGraph& mg, int j);

struct ChangeOfVariables {
  double lhs = 0.0;  // int int phi d_t d^eps sqrt(1+|grad f|^2) dx dt
  double rhs = 0.0;  // int int d_t phi f dx dt
  double gap = 0.0;  // |lhs - rhs|
  std::size_t points = 0;
};

/// phi must be a function of (x', t) supported in the inner region. The
/// quadrature uses every `stride`-th node in each direction.
ChangeOfVariables change_of_variables_check(const MollifiedGraph& mg, const TestFunction& phi, unsigned threads = 1,
                                            int stride = 1);

}  // namespace mcflab
