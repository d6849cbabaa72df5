#pragma once

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spinn/geometry.hpp"
#include "spinn/kernels.hpp"
#include "spinn/rng.hpp"
#include "spinn/tape.hpp"

namespace spinn {

// Model value and per-axis first/second derivatives at one point.
template <class S>
struct LocalFields {
  S u{};
  std::array<S, kMaxDim> grad{};
  std::array<S, kMaxDim> d2{};  // unmixed second derivatives along each axis
  int dim = 1;

  S laplacian() const {
    S lap = d2[0];
    for (int k = 1; k < dim; ++k) lap = lap + d2[k];
    return lap;
  }
};

// Location of a collocation point; `index` is its position in the full
// (unsubsampled) interior sample set.
struct PointContext {
  std::span<const double> x;
  std::size_t index = 0;
};

// Interior operator N(x, u, grad u, d2 u) = 0, available over reals and over
// tape variables. Built from one generic callable by make_residual.
struct Residual {
  std::function<double(const PointContext&, const LocalFields<double>&)> real;
  std::function<Var(const PointContext&, const LocalFields<Var>&)> taped;

  explicit operator bool() const { return static_cast<bool>(real); }
};

template <class F>
Residual make_residual(F f) {
  return Residual{f, f};
}

// Energy density e(x, u, u') of a 1-D functional I(u) = integral of e.
struct EnergyDensity {
  std::function<double(double, double, double)> real;
  std::function<Var(double, Var, Var)> taped;

  explicit operator bool() const { return static_cast<bool>(real); }
};

template <class F>
EnergyDensity make_energy(F f) {
  return EnergyDensity{f, f};
}

// Spatial operator S[u](x) of a 1-D evolution equation u_t = S[u].
struct SpatialOperator {
  std::function<double(double, double, double, double)> real;  // (x, u, ux, uxx)
  std::function<Var(double, Var, Var, Var)> taped;
};

template <class F>
SpatialOperator make_spatial_operator(F f) {
  return SpatialOperator{f, f};
}

using ScalarField = std::function<double(std::span<const double>)>;

struct Evolution {
  Geometry space = Geometry::interval(0.0, 1.0);
  SpatialOperator op;
  std::function<double(double)> initial;
  std::function<double(double, double)> exact;  // (x, t); empty when unknown
  std::function<double(double, double)> boundary_value = [](double, double) { return 0.0; };
  double t_end = 1.0;
  bool linear = true;
};

enum class BcKind { Dirichlet, Neumann };

struct BoundaryCondition {
  std::size_t segment = 0;
  BcKind kind = BcKind::Dirichlet;
  ScalarField value;  // u_0 for Dirichlet, g_0 for Neumann
};

// FD-SPINN settings of an evolution problem.
struct MarchDefaults {
  std::size_t nodes = 10;
  double dt = 5e-3;
  std::size_t inner_iterations = 200;
  double lr = 1e-3;
  double fit_tolerance = 1e-3;
};

// Per-problem defaults for node counts, kernel and penalty weights.
// fixed_per_segment = 0 picks round(sqrt(nodes)) + 1 per boundary segment in
// 2-D and one node per end in 1-D.
struct ProblemDefaults {
  KernelType kernel = KernelType::Gaussian;
  std::size_t nodes = 10;
  std::size_t fixed_per_segment = 0;
  double w_interior = 1.0;
  double w_dirichlet = 100.0;
  double w_neumann = 100.0;
  double lr = 1e-3;
  std::size_t iterations = 5000;
  MarchDefaults march;
  double width_scale = 1.0;   // initial widths in lattice spacings
  bool weight_solve = false;  // coefficient solve after Adam
};

struct ProblemSpec {
  std::string name;
  Geometry geometry = Geometry::interval(0.0, 1.0);
  Residual residual;
  std::vector<BoundaryCondition> boundary;
  ScalarField exact;          // empty when no closed form is known
  EnergyDensity energy;       // 1-D variational form, when available
  std::optional<Evolution> evolution;
  ProblemDefaults defaults;

  int dim() const { return geometry.dim(); }
  bool has_exact() const { return static_cast<bool>(exact); }
  // Segment indices carrying Dirichlet data, in boundary order.
  std::vector<std::size_t> dirichlet_segments() const;
};

std::vector<std::string> problem_names();

// Throws ConfigError listing valid names for an unknown name.
ProblemSpec make_problem(const std::string& name);
// Poisson problem  lap u + 1 = 0  with u = 0 on the polygon boundary.
ProblemSpec make_irregular_problem(Polygon polygon);
Polygon default_irregular_polygon();

// Signed residual at x from real-valued derivative slots. `grad` and `d2`
// must each have dim() entries. Throws UsageError on arity mismatch.
double residual_eval(const ProblemSpec& p, std::span<const double> x, double u, std::span<const double> grad,
                     std::span<const double> d2);

// Interior points. Full sampling returns the interior lattice; random sampling
// draws uniformly by rejection in the bounding box. Throws GeometryError after
// 1000 * count failed draws.
PointSet sample_interior(const ProblemSpec& p, std::size_t count, bool full, Rng& rng);

struct BoundarySamples {
  PointSet dirichlet;
  std::vector<double> dirichlet_values;
  PointSet neumann;
  PointSet normals;
  std::vector<double> neumann_values;
};

// Equispaced points on every boundary segment carrying a condition.
BoundarySamples sample_boundary(const ProblemSpec& p, std::size_t per_segment);

struct ErrorMetrics {
  double l1 = 0.0;
  double l2 = 0.0;
  double linf = 0.0;
};

// Mean-based L1 and L2 and max-norm of (approx - reference).
ErrorMetrics error_metrics(std::span<const double> approx, std::span<const double> reference);

// Points on which solutions are reported and compared: a uniform grid over
// the closure of the domain (per_axis points per axis, boundary included),
// filtered to the domain for non-rectangular shapes.
PointSet evaluation_grid(const Geometry& g, std::size_t per_axis);

// Space-time form of an evolution problem on space x [0, T]: residual
// u_t - S[u]; initial data on the t = 0 face and boundary data on the
// spatial faces are Dirichlet conditions.
ProblemSpec spacetime_problem(const std::string& name, const Evolution& evo, double t_end);

}  // namespace spinn
