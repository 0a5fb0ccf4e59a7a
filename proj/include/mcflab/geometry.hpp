#pragma once

#include <vector>

#include "mcflab/grid.hpp"
#include "mcflab/test_function.hpp"

namespace mcflab {

/// Upward unit normal (-grad f, 1)/sqrt(1+|grad f|^2).
Vec unit_normal(const Vec& grad);

/// Flux grad f / sqrt(1+|grad f|^2) normal to the face between `node` and its
/// neighbour in +axis. Uses the face slope and, for n = 3, the transverse
/// slope averaged over the two adjacent columns.
double face_flux(std::span<const double> f, const SpaceTimeGrid& grid, std::size_t node, int axis);

/// Scalar mean curvature H = div(grad f / sqrt(1+|grad f|^2)) by the staggered
/// flux stencil; zero on boundary nodes. Concave-down caps have H < 0.
double curvature_at(std::span<const double> f, const SpaceTimeGrid& grid, std::size_t node);

struct NodeGeometry {
  Vec grad;
  double area = 1.0;
  Vec nu;
  double H = 0.0;
};

NodeGeometry node_geometry(const GraphFlow& gf, int j, std::size_t node);

struct NormalArea {
  std::vector<Vec> nu;
  std::vector<double> area;
};

struct CurvatureField {
  std::vector<double> H;
  std::vector<Vec> hvec;  // H * nu
  std::vector<Vec> nu;
};

struct VelocityField {
  std::vector<Vec> vvec;
  std::vector<double> vn;  // d_t f / sqrt(1+|grad f|^2)
  bool one_sided = false;
};

NormalArea normal_and_area(const GraphFlow& gf, int j);
CurvatureField mean_curvature(const GraphFlow& gf, int j);
VelocityField velocity(const GraphFlow& gf, int j);

/// Discrete  int grad psi . grad f / sqrt(1+|grad f|^2) dx + int psi H dx  at
/// level j, using face differences of psi against the same fluxes that define
/// H. Vanishes to round-off for any samples when psi is interior-supported.
double divergence_identity_residual(const GraphFlow& gf, int j, const TestFunction& psi);

struct W22Report {
  std::vector<double> hessian_inner;  // ||D^2 f(.,t)||_{L^2(inner cube)}
  std::vector<double> f_norm;         // ||f(.,t)||_{L^2}
  std::vector<double> h_norm;         // ||H(.,t)||_{L^2}
  std::vector<double> ratio;          // hessian_inner / (f_norm + h_norm)
  double max_ratio = 0.0;
};

/// Second-derivative diagnostic on the inner cube [-(1-s), 1-s]^{n-1}.
W22Report w22_diagnostic(const GraphFlow& gf, double s);

}  // namespace mcflab
