#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mcflab/expr.hpp"

namespace mcflab {

/// Small dense vector in R^k, k <= 3 (ambient points, gradients, normals).
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 3, 1>;
/// Small dense matrix, at most 3x3.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 3, 3>;

class GridError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Tensor grid on [-1,1]^{n-1} x [t0,t1] with N cells per axis and M steps.
struct SpaceTimeGrid {
  int n = 2;
  int N = 4;
  int M = 1;
  double t0 = 0.0;
  double t1 = 1.0;
  double hx = 0.5;
  double dt = 1.0;

  [[nodiscard]] int axes() const noexcept { return n - 1; }
  [[nodiscard]] int per_axis() const noexcept { return N + 1; }
  [[nodiscard]] std::size_t spatial_size() const noexcept;
  [[nodiscard]] std::size_t time_levels() const noexcept { return static_cast<std::size_t>(M) + 1; }
  [[nodiscard]] std::size_t size() const noexcept { return spatial_size() * time_levels(); }

  [[nodiscard]] double x(int i) const noexcept { return -1.0 + i * hx; }
  [[nodiscard]] double t(int j) const noexcept { return t0 + j * dt; }

  /// Axis indices of a spatial node; unused trailing entries are zero.
  [[nodiscard]] std::array<int, 2> index(std::size_t node) const noexcept;
  [[nodiscard]] std::size_t node(std::array<int, 2> idx) const noexcept;
  /// Node reached by moving `offset` cells along `axis`.
  [[nodiscard]] std::size_t shifted(std::size_t node, int axis, int offset) const noexcept;
  [[nodiscard]] std::size_t stride(int axis) const noexcept;
  [[nodiscard]] Vec coords(std::size_t node) const;
  [[nodiscard]] bool on_boundary(std::size_t node) const noexcept;

  /// Trapezoid weights.
  [[nodiscard]] double spatial_weight(std::size_t node) const noexcept;
  [[nodiscard]] double time_weight(int j) const noexcept;
};

SpaceTimeGrid build_grid(int n, int N, int M, double t0, double t1);

/// Dirichlet trace of a flow: boundary node ids and their values per time level.
struct BoundaryTrace {
  std::vector<std::size_t> nodes;
  std::vector<double> values;  // (M+1) x nodes.size(), row-major
};

/// Height samples f(x,t) of the moving graph x_n = f(x,t).
struct GraphFlow {
  SpaceTimeGrid grid;
  std::vector<double> f;  // (M+1) x spatial_size, row-major in time
  BoundaryTrace boundary;

  [[nodiscard]] std::span<const double> slice(int j) const;
  [[nodiscard]] double at(int j, std::size_t node) const { return f[static_cast<std::size_t>(j) * grid.spatial_size() + node]; }
};

/// Wraps samples into a flow, checking shape and finiteness and recording the trace.
GraphFlow make_flow(const SpaceTimeGrid& grid, std::vector<double> f);

class SampleError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

GraphFlow sample_graph(const Expr& expr, const SpaceTimeGrid& grid);

/// Transport field u. Either closed form in (x, x_n, t), or samples per grid
/// node already composed with the graph.
class AmbientField {
public:
  static AmbientField zero(int n);
  static AmbientField closed_form(std::vector<Expr> components);
  static AmbientField parse(const std::vector<std::string>& components, int n);
  /// samples: (M+1) x spatial_size x n, row-major.
  static AmbientField sampled(const SpaceTimeGrid& grid, std::vector<double> samples);

  [[nodiscard]] int dimension() const noexcept { return n_; }
  [[nodiscard]] bool is_sampled() const noexcept { return sampled_; }
  [[nodiscard]] bool is_zero() const noexcept { return zero_; }
  [[nodiscard]] bool time_dependent() const noexcept;

  /// Closed-form evaluation at an ambient point.
  [[nodiscard]] Vec at(const Vec& X, double t) const;
  /// Value at the graph point over node `node` at time level j.
  [[nodiscard]] Vec at_node(const SpaceTimeGrid& grid, int j, std::size_t node, const Vec& X) const;
  [[nodiscard]] std::vector<std::string> sources() const;

private:
  int n_ = 0;
  bool sampled_ = false;
  bool zero_ = false;
  std::vector<Expr> exprs_;
  std::vector<double> samples_;
  std::size_t spatial_ = 0;
};

/// First derivative along `axis`: centered in the interior, second-order
/// one-sided at the boundary. `values` is one time slice.
double axis_derivative(std::span<const double> values, const SpaceTimeGrid& grid, std::size_t node, int axis);
Vec spatial_gradient(std::span<const double> values, const SpaceTimeGrid& grid, std::size_t node);
/// Time derivative at level j: centered, second-order one-sided at the ends.
double time_derivative(const GraphFlow& gf, int j, std::size_t node);

struct SeminormResult {
  double value = 0.0;          // gradient_part + time_part
  double gradient_part = 0.0;  // sup |Df(y1,s1)-Df(y2,s2)| / max(|dy|^a, |ds|^{a/2})
  double time_part = 0.0;      // sup |f(y,s1)-f(y,s2)| / |ds|^{(1+a)/2}
  bool exhaustive = true;
  std::uint64_t pairs = 0;
};

/// Node-pair lower bound for the parabolic C^{1,alpha} seminorm. All pairs are
/// scanned up to 10^4 nodes; above that a fixed-seed stratified subset.
SeminormResult parabolic_seminorm(const GraphFlow& gf, double alpha, std::uint64_t seed = 20240611);

}  // namespace mcflab
