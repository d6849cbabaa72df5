#include "spinn/problems.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <type_traits>

#include "spinn/errors.hpp"

namespace spinn {

namespace {

constexpr double kPi = std::numbers::pi;

ScalarField zero_field() {
  return [](std::span<const double>) { return 0.0; };
}

double call_op(const SpatialOperator& op, double x, double u, double ux, double uxx) { return op.real(x, u, ux, uxx); }
Var call_op(const SpatialOperator& op, double x, Var u, Var ux, Var uxx) { return op.taped(x, u, ux, uxx); }

std::vector<BoundaryCondition> dirichlet_everywhere(const Geometry& g, ScalarField value) {
  std::vector<BoundaryCondition> bcs;
  for (std::size_t s = 0; s < g.segments().size(); ++s) bcs.push_back({s, BcKind::Dirichlet, value});
  return bcs;
}

ProblemSpec ode_a() {
  ProblemSpec p;
  p.name = "1d-A";
  p.geometry = Geometry::interval(0.0, 1.0);
  p.residual = make_residual([](const PointContext&, const auto& f) { return f.d2[0] + 1.0; });
  p.boundary = dirichlet_everywhere(p.geometry, zero_field());
  p.exact = [](std::span<const double> x) { return 0.5 * x[0] * (1.0 - x[0]); };
  p.energy = make_energy([](double, auto u, auto du) { return 0.5 * (du * du) - u; });
  p.defaults = {KernelType::Gaussian, 3, 1, 1.0, 100.0, 100.0, 1e-2, 10000, {}};
  return p;
}

ProblemSpec ode_b() {
  ProblemSpec p;
  p.name = "1d-B";
  p.geometry = Geometry::interval(0.0, 1.0);
  p.residual = make_residual([](const PointContext& c, const auto& f) {
    return f.d2[0] + (kPi * kPi) * f.u - kPi * std::sin(kPi * c.x[0]);
  });
  p.boundary = {{0, BcKind::Dirichlet, zero_field()},
                {1, BcKind::Neumann, [](std::span<const double>) { return 0.5; }}};
  p.exact = [](std::span<const double> x) { return -0.5 * x[0] * std::cos(kPi * x[0]); };
  p.defaults = {KernelType::Gaussian, 5, 1, 1.0, 100.0, 100.0, 1e-2, 10000, {}};
  return p;
}

// Forcing of 1d-C: u'' + f(x) = 0.
double ode_c_forcing(double x) {
  constexpr double K = 0.01;
  const double s = x - 1.0 / 3.0;
  return x * (std::exp(-s * s / K) - std::exp(-4.0 / (9.0 * K)));
}

ProblemSpec ode_c() {
  ProblemSpec p;
  p.name = "1d-C";
  p.geometry = Geometry::interval(0.0, 1.0);
  p.residual = make_residual([](const PointContext& c, const auto& f) { return f.d2[0] + ode_c_forcing(c.x[0]); });
  p.boundary = dirichlet_everywhere(p.geometry, zero_field());
  p.energy = make_energy([](double x, auto u, auto du) { return 0.5 * (du * du) - ode_c_forcing(x) * u; });
  p.defaults = {KernelType::Gaussian, 7, 1, 1.0, 100.0, 100.0, 1e-2, 10000, {}};
  return p;
}

ProblemSpec poisson_sine() {
  ProblemSpec p;
  p.name = "2d-A";
  p.geometry = Geometry::rectangle(0.0, 1.0, 0.0, 1.0);
  p.residual = make_residual([](const PointContext& c, const auto& f) {
    return f.laplacian() + 20.0 * kPi * kPi * std::sin(2.0 * kPi * c.x[0]) * std::sin(4.0 * kPi * c.x[1]);
  });
  p.boundary = dirichlet_everywhere(p.geometry, zero_field());
  p.exact = [](std::span<const double> x) { return std::sin(2.0 * kPi * x[0]) * std::sin(4.0 * kPi * x[1]); };
  p.defaults = {KernelType::SoftplusHat, 100, 0, 1.0, 1e4, 100.0, 1e-2, 1000, {}};
  return p;
}

ProblemSpec poisson_unit_forcing(std::string name, Geometry g) {
  ProblemSpec p;
  p.name = std::move(name);
  p.geometry = std::move(g);
  p.residual = make_residual([](const PointContext&, const auto& f) { return f.laplacian() + 1.0; });
  p.boundary = dirichlet_everywhere(p.geometry, zero_field());
  p.defaults = {KernelType::Gaussian, 100, 0, 1.0, 1e4, 100.0, 1e-2, 1000, {}};
  return p;
}

Evolution heat_evolution() {
  Evolution e;
  e.space = Geometry::interval(0.0, 1.0);
  e.op = make_spatial_operator([](double, auto, auto, auto uxx) { return uxx; });
  e.initial = [](double x) { return 2.0 * std::sin(kPi * x); };
  e.exact = [](double x, double t) { return 2.0 * std::exp(-kPi * kPi * t) * std::sin(kPi * x); };
  e.t_end = 0.1;
  return e;
}

constexpr double kAdvectionSpeed = 0.5;
constexpr double kPulseMu = 0.3;
constexpr double kPulseSigma = 0.15;

double advection_initial(double x) {
  const double z = (x + kPulseMu) / (2.0 * kPulseSigma);
  return std::exp(-z * z);
}

Evolution advection_evolution() {
  Evolution e;
  e.space = Geometry::interval(-1.0, 1.0);
  e.op = make_spatial_operator([](double, auto, auto ux, auto) { return -kAdvectionSpeed * ux; });
  e.initial = advection_initial;
  e.exact = [](double x, double t) { return advection_initial(x - kAdvectionSpeed * t); };
  e.t_end = 1.0;
  return e;
}

Evolution burgers_evolution() {
  Evolution e;
  e.space = Geometry::interval(0.0, 1.0);
  e.op = make_spatial_operator([](double, auto u, auto ux, auto) { return -(u * ux); });
  e.initial = [](double x) { return std::sin(2.0 * kPi * x); };
  e.t_end = 0.3;
  e.linear = false;
  return e;
}

}  // namespace

std::vector<std::size_t> ProblemSpec::dirichlet_segments() const {
  std::vector<std::size_t> out;
  for (const auto& bc : boundary) {
    if (bc.kind == BcKind::Dirichlet) out.push_back(bc.segment);
  }
  return out;
}

std::vector<std::string> problem_names() {
  return {"1d-A", "1d-B", "1d-C", "2d-A", "2d-B", "irregular", "heat", "advection", "burgers"};
}

Polygon default_irregular_polygon() {
  return Polygon{{{0.0, 0.0}, {1.0, 0.1}, {1.3, 0.7}, {0.9, 1.2}, {0.5, 0.9}, {0.1, 1.1}, {-0.2, 0.6}}};
}

ProblemSpec make_irregular_problem(Polygon polygon) {
  ProblemSpec p = poisson_unit_forcing("irregular", Geometry::polygon(std::move(polygon)));
  p.defaults.w_dirichlet = 100.0;
  p.defaults.width_scale = 3.0;
  p.defaults.weight_solve = true;
  return p;
}

ProblemSpec spacetime_problem(const std::string& name, const Evolution& evo, double t_end) {
  if (!(t_end > 0.0)) throw ConfigError("spacetime_problem: horizon must be positive");
  ProblemSpec p;
  p.name = name;
  const double lo = evo.space.lo()[0], hi = evo.space.hi()[0];
  p.geometry = Geometry::rectangle(lo, hi, 0.0, t_end);
  const SpatialOperator op = evo.op;
  p.residual = make_residual([op](const PointContext& c, const auto& f) {
    return f.grad[1] - call_op(op, c.x[0], f.u, f.grad[0], f.d2[0]);
  });
  const auto initial = evo.initial;
  const auto bv = evo.boundary_value;
  // Segments: bottom (t = 0), right (x = hi), top (t = T, free), left (x = lo).
  p.boundary = {{0, BcKind::Dirichlet, [initial](std::span<const double> x) { return initial(x[0]); }},
                {1, BcKind::Dirichlet, [bv](std::span<const double> x) { return bv(x[0], x[1]); }},
                {3, BcKind::Dirichlet, [bv](std::span<const double> x) { return bv(x[0], x[1]); }}};
  if (evo.exact) {
    const auto exact = evo.exact;
    p.exact = [exact](std::span<const double> x) { return exact(x[0], x[1]); };
  }
  p.evolution = evo;
  p.evolution->t_end = t_end;
  p.defaults = {KernelType::Gaussian, 100, 0, 1.0, 1e3, 100.0, 1e-2, 1000, {}};
  return p;
}

ProblemSpec make_problem(const std::string& name) {
  if (name == "1d-A") return ode_a();
  if (name == "1d-B") return ode_b();
  if (name == "1d-C") return ode_c();
  if (name == "2d-A") return poisson_sine();
  if (name == "2d-B") return poisson_unit_forcing("2d-B", Geometry::slit_square());
  if (name == "irregular") return make_irregular_problem(default_irregular_polygon());
  if (name == "heat") {
    const Evolution e = heat_evolution();
    ProblemSpec p = spacetime_problem(name, e, e.t_end);
    p.defaults.march = {10, 5e-3, 200, 1e-3, 1e-4};
    return p;
  }
  if (name == "advection") {
    const Evolution e = advection_evolution();
    ProblemSpec p = spacetime_problem(name, e, e.t_end);
    p.defaults.march = {20, 1e-2, 200, 1e-3, 1e-3};
    return p;
  }
  if (name == "burgers") {
    const Evolution e = burgers_evolution();
    ProblemSpec p = spacetime_problem(name, e, e.t_end);
    p.defaults.march = {40, 5e-3, 200, 1e-3, 1e-2};
    return p;
  }
  std::ostringstream msg;
  msg << "unknown problem '" << name << "'; valid names:";
  for (const auto& n : problem_names()) msg << ' ' << n;
  throw ConfigError(msg.str());
}

double residual_eval(const ProblemSpec& p, std::span<const double> x, double u, std::span<const double> grad,
                     std::span<const double> d2) {
  const auto d = static_cast<std::size_t>(p.dim());
  if (x.size() != d || grad.size() != d || d2.size() != d) {
    throw UsageError("residual_eval: " + p.name + " expects " + std::to_string(d) +
                     " coordinates, gradient and second-derivative slots");
  }
  LocalFields<double> f;
  f.dim = p.dim();
  f.u = u;
  std::copy(grad.begin(), grad.end(), f.grad.begin());
  std::copy(d2.begin(), d2.end(), f.d2.begin());
  return p.residual.real(PointContext{x, 0}, f);
}

PointSet sample_interior(const ProblemSpec& p, std::size_t count, bool full, Rng& rng) {
  if (count < 1) throw ConfigError("sample_interior: count must be >= 1");
  const Geometry& g = p.geometry;
  if (full) return g.interior_lattice(count).points;
  PointSet out(g.dim());
  std::array<double, kMaxDim> pt{};
  const std::size_t max_draws = 1000 * count;
  std::size_t draws = 0;
  while (out.size() < count) {
    if (draws++ >= max_draws) {
      throw GeometryError("sample_interior: rejection sampling failed for " + g.describe());
    }
    for (int k = 0; k < g.dim(); ++k) pt[k] = rng.uniform(g.lo()[k], g.hi()[k]);
    const std::span<const double> view(pt.data(), static_cast<std::size_t>(g.dim()));
    if (g.contains(view)) out.push_back(view);
  }
  return out;
}

BoundarySamples sample_boundary(const ProblemSpec& p, std::size_t per_segment) {
  if (per_segment < 1) throw ConfigError("sample_boundary: need at least one point per segment");
  const int d = p.dim();
  BoundarySamples out{PointSet(d), {}, PointSet(d), PointSet(d), {}};
  for (const auto& bc : p.boundary) {
    const PointSet pts = p.geometry.sample_segment(bc.segment, per_segment);
    const Segment& seg = p.geometry.segments().at(bc.segment);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (bc.kind == BcKind::Dirichlet) {
        out.dirichlet.push_back(pts[i]);
        out.dirichlet_values.push_back(bc.value(pts[i]));
      } else {
        out.neumann.push_back(pts[i]);
        out.normals.push_back(seg.normal);
        out.neumann_values.push_back(bc.value(pts[i]));
      }
    }
  }
  return out;
}

ErrorMetrics error_metrics(std::span<const double> approx, std::span<const double> reference) {
  if (approx.size() != reference.size()) {
    throw UsageError("error_metrics: grids differ in size (" + std::to_string(approx.size()) + " vs " +
                     std::to_string(reference.size()) + ")");
  }
  ErrorMetrics m;
  if (approx.empty()) return m;
  double sum_abs = 0.0, sum_sq = 0.0;
  for (std::size_t i = 0; i < approx.size(); ++i) {
    const double e = std::abs(approx[i] - reference[i]);
    sum_abs += e;
    sum_sq += e * e;
    m.linf = std::max(m.linf, e);
  }
  const double n = static_cast<double>(approx.size());
  m.l1 = sum_abs / n;
  m.l2 = std::sqrt(sum_sq / n);
  return m;
}

PointSet evaluation_grid(const Geometry& g, std::size_t per_axis) {
  if (per_axis < 2) throw ConfigError("evaluation_grid: need at least 2 points per axis");
  PointSet out(g.dim());
  const double n1 = static_cast<double>(per_axis - 1);
  if (g.dim() == 1) {
    for (std::size_t i = 0; i < per_axis; ++i) {
      const double x = g.lo()[0] + (g.hi()[0] - g.lo()[0]) * static_cast<double>(i) / n1;
      out.push_back({x});
    }
    return out;
  }
  for (std::size_t j = 0; j < per_axis; ++j) {
    for (std::size_t i = 0; i < per_axis; ++i) {
      const double p[2] = {g.lo()[0] + (g.hi()[0] - g.lo()[0]) * static_cast<double>(i) / n1,
                           g.lo()[1] + (g.hi()[1] - g.lo()[1]) * static_cast<double>(j) / n1};
      const bool keep = g.kind() != Geometry::Kind::PolygonDomain || g.contains(p) || g.boundary_distance(p) < 1e-12;
      if (keep) out.push_back(p);
    }
  }
  return out;
}

}  // namespace spinn
