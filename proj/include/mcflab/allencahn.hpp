#pragma once

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcflab/grid.hpp"
#include "mcflab/test_function.hpp"

namespace mcflab {

class AcError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Double-well potential with W(+-1) = 0.
struct DoubleWell {
  std::function<double(double)> W;
  std::function<double(double)> dW;
  std::function<double(double)> d2W;
  double gamma = 0.0;    // interior critical point
  double alpha_w = 0.8;  // W'' >= kappa on alpha_w <= |s| <= 1
  double kappa = 1.84;
  std::string name;
  /// Optional exact flow of s' = -W'(s) over rescaled time tau.
  std::function<double(double s, double tau)> flow;

  /// W(s) = (1 - s^2)^2 / 2.
  static DoubleWell standard();
};

struct WellCheck {
  bool ok = true;
  std::string reason;
  double max_d2W = 0.0;  // sup |W''| on [-1.05, 1.05]
};

/// Samples the sign, monotonicity and convexity assumptions on W.
WellCheck check_well(const DoubleWell& well, int samples = 4001);

/// sigma = int_{-1}^{1} sqrt(2W) and Phi(s) = (1/sigma) int_{-1}^{s} sqrt(2W).
class PhaseMap {
public:
  explicit PhaseMap(DoubleWell well, int table = 10000);
  [[nodiscard]] double sigma() const noexcept { return sigma_; }
  [[nodiscard]] double operator()(double s) const;
  [[nodiscard]] const DoubleWell& well() const noexcept { return well_; }

private:
  DoubleWell well_;
  double sigma_ = 0.0;
  double h_ = 0.0;
  std::vector<double> table_;  // Phi at -1 + k h
  std::vector<double> slope_;  // Phi' = sqrt(2W)/sigma at the same nodes
};

/// Periodic grid on [-1,1)^n with N nodes per axis, x_i = -1 + i h.
struct PeriodicGrid {
  int n = 2;
  int N = 64;
  double h = 2.0 / 64;
  [[nodiscard]] std::size_t size() const noexcept;
  [[nodiscard]] std::size_t stride(int axis) const noexcept;
  [[nodiscard]] std::array<int, 3> index(std::size_t node) const noexcept;
  [[nodiscard]] Vec coords(std::size_t node) const;
  [[nodiscard]] std::size_t neighbour(std::size_t node, int axis, int offset) const noexcept;
  [[nodiscard]] double cell_volume() const noexcept;
};

PeriodicGrid periodic_grid(int n, int N);

/// phi0 = tanh(d0 / eps), with d0 > 0 on the phase {phi = 1}.
std::vector<double> initial_profile(const PeriodicGrid& grid, const Expr& d0, double eps);

/// Discrete energy sum h^n (eps |D+ phi|^2 / 2 + W(phi) / eps).
double ac_energy(const PeriodicGrid& grid, std::span<const double> phi, const DoubleWell& well, double eps);

/// Energy density (1/sigma)(eps |D+ phi|^2 / 2 + W(phi) / eps) per node.
std::vector<double> energy_density(const PeriodicGrid& grid, std::span<const double> phi, const PhaseMap& map,
                                   double eps);

enum class AcScheme {
  /// (I - dt Lap) phi+ = phi - dt (W'(phi)/eps^2 + u . grad phi)
  Imex,
  /// exp(dt Lap / 2), exact reaction flow over dt, upwind transport, exp(dt Lap / 2)
  Strang,
};

/// Time stepper on the periodic grid. The discrete Laplacian is the standard
/// (2n+1)-point stencil, diagonalized by FFT; transport is first-order upwind.
class AcStepper {
public:
  AcStepper(PeriodicGrid grid, DoubleWell well, AmbientField u, double eps, double dt,
            AcScheme scheme = AcScheme::Imex, bool spectral = false);
  ~AcStepper();
  AcStepper(const AcStepper&) = delete;
  AcStepper& operator=(const AcStepper&) = delete;

  /// Advances phi in place from time t.
  void step(std::vector<double>& phi, double t);
  [[nodiscard]] double dt() const noexcept { return dt_; }
  /// Largest admissible dt for this grid, well, field and eps.
  [[nodiscard]] double dt_limit() const noexcept { return limit_; }

private:
  struct Plan;
  PeriodicGrid grid_;
  DoubleWell well_;
  AmbientField u_;
  double eps_;
  double dt_;
  double limit_ = 0.0;
  std::vector<double> ustatic_;  // cached transport samples when u does not depend on t
  AcScheme scheme_;
  std::vector<double> symbol_;   // diffusion multiplier on the half spectrum, including 1/size
  std::unique_ptr<Plan> plan_;
  void transport(std::span<const double> phi, double t, std::vector<double>& out) const;
  void diffuse(std::vector<double>& phi);
};

/// Time-derivative bound and by-parts pairings of a test function against a run,
/// accumulated one time step at a time.
struct TderivCheck {
  double lhs = 0.0;       // sum |psi dw|
  double middle = 0.0;    // 2/sigma (sum psi^2 Wbar/eps)^(1/2) (sum eps phi_t^2 / 2)^(1/2)
  double rhs = 0.0;       // (sum psi^2 mu)^(1/2)
  double kinetic = 0.0;   // (sum eps phi_t^2 / 2)^(1/2)
  double constant = 0.0;  // lhs / rhs
  double middle_constant = 0.0;
  bool chain_holds = false;  // lhs <= middle
};

struct VelocityCheck {
  double A = 0.0;  // sum psi dw/dt
  double B = 0.0;  // -sum w dpsi/dt
  double gap = 0.0;
  std::optional<double> sharp;  // int psi(x', f) d_t f over the extracted graph
};

class PairingAccumulator {
public:
  PairingAccumulator(const PeriodicGrid& grid, const PhaseMap& map, TestFunction psi, double eps, double t0,
                     double dt);
  /// Adds the step from level j (time t0 + j dt) to j + 1.
  void add(int j, std::span<const double> phi_j, std::span<const double> phi_next);
  /// Closes the by-parts sum at the final level J.
  void finish(int J, std::span<const double> phi_J);
  [[nodiscard]] TderivCheck tderiv() const;
  [[nodiscard]] VelocityCheck velocity() const;

private:
  const PeriodicGrid* grid_;
  const PhaseMap* map_;
  TestFunction psi_;
  double eps_, t0_, dt_;
  std::vector<std::size_t> support_;
  std::vector<Vec> points_;
  std::vector<std::array<std::size_t, 3>> next_;  // forward neighbours
  std::vector<double> prev_;                      // psi at the previous midpoint
  int prev_j_ = -2;
  double lhs_ = 0.0, s1_ = 0.0, s2_ = 0.0, mu_ = 0.0, A_ = 0.0, B_ = 0.0;
  double A_c_ = 0.0, B_c_ = 0.0;  // Neumaier compensation for the by-parts sums
  [[nodiscard]] double psi_mid(std::size_t k, int j) const;
};

enum class Extraction { None, Graph, Radial };

struct AcConfig {
  int n = 2;
  int N = 128;
  double eps = 0.04;
  double T = 0.05;
  double dt = 0.0;             // 0 picks dt_fraction * gate
  double dt_fraction = 0.5;
  AcScheme scheme = AcScheme::Imex;
  bool spectral = false;  // Fourier symbol -|k|^2 instead of the finite-difference Laplacian
  int output_every = 10;       // steps between extracted outputs
  bool keep_fields = false;    // store phi at every output
  Extraction extraction = Extraction::None;
  Vec center;                  // radial extraction centre (defaults to the origin)
  double overshoot_limit = 1.05;
  std::vector<TestFunction> probes;
};

/// Samples of phi at output times.
struct PhaseField {
  PeriodicGrid grid;
  double eps = 0.0;
  double sigma = 0.0;
  std::vector<double> times;
  std::vector<std::vector<double>> phi;
};

struct AcRun {
  PhaseField field;
  double dt = 0.0;
  int steps = 0;
  std::vector<double> energy;  // per step, starting at t = 0
  bool energy_monotone = true;
  double max_energy_increase = 0.0;  // relative to the initial energy
  double max_abs_phi = 0.0;
  bool overshoot = false;
  std::vector<double> phi_final;
  std::vector<double> output_times;
  std::vector<double> radius;  // radial extraction
  std::optional<GraphFlow> graph;
  double graph_lost_at = -1.0;  // first output time with no graphical crossing
  std::vector<TderivCheck> tderiv;
  std::vector<VelocityCheck> velocity;
};

AcRun run_allen_cahn(const AcConfig& cfg, const DoubleWell& well, const AmbientField& u, const Expr& d0);

/// Mean distance from `center` of the linearly interpolated zero crossings
/// along grid edges (wrap-around edges skipped).
double interface_radius(const PeriodicGrid& grid, std::span<const double> phi, const Vec& center);

/// Height of the single crossing from phi > 0 (below) to phi <= 0 (above) in
/// each x_n column; nullopt if some column has none or more than one.
std::optional<std::vector<double>> interface_heights(const PeriodicGrid& grid, std::span<const double> phi);

/// Pairings over stored snapshots (time differences at the output cadence).
TderivCheck tderiv_bound_check(const PhaseField& pf, const PhaseMap& map, const TestFunction& psi);
VelocityCheck velocity_formula_check(const PhaseField& pf, const PhaseMap& map, const TestFunction& psi,
                                     const GraphFlow* graph = nullptr);

/// int psi(x', f(x',t), t) d_t f dx' dt over an extracted graph (trapezoid in x'
/// without the duplicated periodic node, trapezoid in t).
double sharp_pairing(const GraphFlow& graph, const TestFunction& psi);

}  // namespace mcflab
