#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mcflab/geometry.hpp"
#include "mcflab/grid.hpp"
#include "mcflab/test_function.hpp"

namespace mcflab {

class WeakFormError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Mixed space-time norm (int (int_{M_t} |u|^p dH)^{q/p} dt)^{1/q}, trapezoid
/// in x and t, u evaluated at the graph points.
double lpq_norm(const GraphFlow& gf, const AmbientField& u, double p, double q);

struct Exponents {
  int k = 0;
  double p = 0.0;
  double q = 0.0;
  double alpha = 0.0;
  bool admissible = false;
  /// Theorem mode with beta >= n: every p > 2 works and alpha may be any
  /// value in (0, alpha_max).
  bool any_p = false;
  double alpha_max = 0.0;
  std::optional<int> n;
  std::optional<double> beta;
  std::optional<double> gamma;
  std::string reason;
};

/// alpha = 1 - k/p - 2/q; inadmissible when alpha <= 0.
Exponents admissibility(int k, double p, double q);
/// Exponents for a transport field in L^gamma W^{1,beta}:
/// p = beta(n-1)/(n-beta), q = gamma, alpha = 2 - n/beta - 2/gamma (beta < n).
Exponents theorem_exponents(int n, double beta, double gamma);

struct WeakFormReport {
  double total = 0.0;
  double curvature_term = 0.0;  // int (grad phi - phi h) . h
  double transport_term = 0.0;  // int (grad phi - phi h) . (u.nu) nu
  double time_term = 0.0;       // int d_t phi
  double quad_error = 0.0;      // Richardson estimate; NaN when no coarse level exists
};

/// Brakke functional  int int_{M_t} (grad phi - phi h).{h + (u.nu)nu} + d_t phi dH dt.
WeakFormReport brakke_residual(const GraphFlow& gf, const AmbientField& u, const TestFunction& phi);

/// int int_{M_t} (grad psi - psi h).v + d_t psi dH dt, zero in the continuum
/// for any graph flow.
double velocity_identity_residual(const GraphFlow& gf, const TestFunction& psi);

struct PdeResidual {
  std::vector<double> field;  // (M+1) x spatial_size, zero off the interior
  double max_abs = 0.0;
  double l2 = 0.0;
};

/// d_t f/q - H - u.(-grad f,1)/q on interior space-time nodes.
PdeResidual pde_residual(const GraphFlow& gf, const AmbientField& u);

struct BlowupSpec {
  Vec y;                 // base point in x'
  double s = 0.5;        // base time
  std::vector<double> lambdas;
  Vec offset;            // centre of the profile psi~ relative to (y, f(y,s)), n entries
  double radius = 1.0;   // support radius of psi~
  BumpProfile profile = BumpProfile::Smooth;
  int min_cells = 4;     // spatial support must span this many cells
};

struct BlowupEntry {
  double lambda = 0.0;
  bool resolved = false;
  std::string note;
  double value = 0.0;           // int int (grad psi_l - psi_l h).w dH dt
  double gradient_term = 0.0;   // int int grad psi_l . w
  double curvature_term = 0.0;  // int int psi_l h . w
  double mass = 0.0;            // int int psi_l dH dt
  double gradient_mass = 0.0;   // int int |grad psi_l| dH dt
};

struct BlowupResult {
  std::vector<BlowupEntry> entries;
  double limit = 0.0;  // (int_{Tan} grad psi~ dH) . w(y,s)
  Vec w;               // h + (u.nu)nu - v at the base point
};

/// psi_l(X,t) = l^{-n} psi~((X - Y)/l) eta((t-s)/l^2) with Y = (y, f(y,s)).
TestFunction blowup_function(const BlowupSpec& spec, double height, double lambda, int n);

BlowupResult blowup_residual(const GraphFlow& gf, const AmbientField& u, const BlowupSpec& spec);

}  // namespace mcflab
