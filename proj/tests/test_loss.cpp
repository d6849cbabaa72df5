#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <vector>

#include "doctest.h"
#include "spinn/loss.hpp"
#include "spinn/optimizer.hpp"
#include "support.hpp"

using namespace spinn;
using doctest::Approx;

namespace {

// Gaussian model least-squares fitted to x(1 - x)/2 on [0, 1].
Model exact_1d_a_surrogate() {
  ProblemSpec fit;
  fit.name = "fit";
  fit.geometry = Geometry::interval(0.0, 1.0);
  fit.residual = make_residual([](const PointContext& c, const auto& f) { return f.u - 0.5 * c.x[0] * (1 - c.x[0]); });
  fit.boundary = {{0, BcKind::Dirichlet, [](std::span<const double>) { return 0.0; }},
                  {1, BcKind::Dirichlet, [](std::span<const double>) { return 0.0; }}};
  Rng rng(0);
  Model m = init_nodes(fit.geometry, 20, 1, std::vector<std::size_t>{0, 1}, KernelType::Gaussian, Variant::Plain, rng);
  for (double& h : std::get<ModelParams>(m).h) h *= 3.0;
  const SampleSet s = make_samples(fit, 400, 1, true, rng);
  solve_weights(m, fit, LossConfig{}, s);
  return m;
}

double energy(const Model& m, std::size_t cells) {
  const ProblemSpec p = make_problem("1d-A");
  LossConfig cfg;
  cfg.mode = LossMode::Variational;
  cfg.cells = cells;
  Rng rng(0);
  const SampleSet s = make_samples(p, 10, 1, true, rng);
  return variational_loss(m, p, cfg, s).interior;
}

}  // namespace

TEST_SUITE("loss") {
  TEST_CASE("zero model on 1d-A") {
    const ProblemSpec p = make_problem("1d-A");
    Rng rng(0);
    Model m = init_nodes(p.geometry, 3, 1, p.dirichlet_segments(), KernelType::Gaussian, Variant::Plain, rng);
    const SampleSet s = make_samples(p, 60, 1, true, rng);
    LossConfig cfg;
    cfg.w_i = 2.5;
    const LossParts l = collocation_loss(m, p, cfg, s, rng);
    CHECK(l.interior == 1.0);
    CHECK(l.dirichlet == 0.0);
    CHECK(l.total == 2.5);
  }

  TEST_CASE("exact solution has vanishing loss terms") {
    // 2d-A exact values on the boundary and residual of its analytic derivatives.
    const ProblemSpec p = make_problem("2d-A");
    Rng rng(2);
    const SampleSet s = make_samples(p, 200, 10, false, rng);
    double interior = 0.0, dirichlet = 0.0;
    const double pi = std::numbers::pi;
    for (std::size_t i = 0; i < s.interior.size(); ++i) {
      const double x = s.interior[i][0], y = s.interior[i][1];
      const double u = std::sin(2 * pi * x) * std::sin(4 * pi * y);
      const std::vector<double> g{0.0, 0.0}, d2{-4 * pi * pi * u, -16 * pi * pi * u};
      const double r = residual_eval(p, s.interior[i], u, g, d2);
      interior += r * r;
    }
    for (std::size_t i = 0; i < s.boundary.dirichlet.size(); ++i) {
      const double e = p.exact(s.boundary.dirichlet[i]) - s.boundary.dirichlet_values[i];
      dirichlet += e * e;
    }
    CHECK(interior / s.interior.size() + 100.0 * dirichlet / s.boundary.dirichlet.size() <= 1e-12);
  }

  TEST_CASE("components and determinism") {
    for (const testing::GradientCase& c : testing::gradient_cases()) {
      if (c.cfg.mode != LossMode::Collocation) continue;
      INFO(c.label);
      Rng r1(4), r2(4);
      const LossParts a = collocation_loss(c.model, c.problem, c.cfg, c.samples, r1);
      const LossParts b = collocation_loss(c.model, c.problem, c.cfg, c.samples, r2);
      CHECK(a.total == b.total);
      CHECK(a.interior >= 0.0);
      CHECK(a.dirichlet >= 0.0);
      CHECK(a.neumann >= 0.0);
      CHECK(a.total == c.cfg.w_i * a.interior + c.cfg.w_d * a.dirichlet + c.cfg.w_n * a.neumann);
    }
  }

  TEST_CASE("thread count does not change loss or gradient") {
    for (const testing::GradientCase& c : testing::gradient_cases()) {
      INFO(c.label);
      std::vector<double> g1(param_count(c.model)), g4(param_count(c.model));
      LossConfig serial = c.cfg, parallel = c.cfg;
      serial.threads = 1;
      parallel.threads = 4;
      Rng r1(9), r4(9);
      const LossParts a = evaluate_loss(c.model, c.problem, serial, c.samples, r1, g1);
      const LossParts b = evaluate_loss(c.model, c.problem, parallel, c.samples, r4, g4);
      CHECK(a.total == b.total);
      CHECK(g1 == g4);
    }
  }

  TEST_CASE("means are invariant under refinement") {
    // Constant residual field: the zero model on 1d-A.
    const ProblemSpec p = make_problem("1d-A");
    Rng rng(0);
    const Model zero =
        init_nodes(p.geometry, 5, 1, p.dirichlet_segments(), KernelType::Gaussian, Variant::Plain, rng);
    const SampleSet s1 = make_samples(p, 50, 1, true, rng), s2 = make_samples(p, 100, 1, true, rng);
    CHECK(collocation_loss(zero, p, {}, s1, rng).total == collocation_loss(zero, p, {}, s2, rng).total);

    // Random samples on a frozen non-trivial model.
    const testing::GradientCase c = testing::make_case("2d-A", "2d-A", KernelType::SoftplusHat, 9, 16);
    Rng ra(1), rb(2);
    const SampleSet a = make_samples(c.problem, 20000, 10, false, ra);
    const SampleSet b = make_samples(c.problem, 40000, 20, false, rb);
    const double la = collocation_loss(c.model, c.problem, {}, a, ra).interior;
    const double lb = collocation_loss(c.model, c.problem, {}, b, rb).interior;
    CHECK(std::abs(la - lb) <= 0.05 * lb);
  }

  TEST_CASE("residual rows reproduce loss and gradient") {
    for (const testing::GradientCase& c : testing::gradient_cases()) {
      if (c.cfg.mode != LossMode::Collocation || c.cfg.fraction != 1.0) continue;
      INFO(c.label);
      std::vector<std::size_t> cols(param_count(c.model));
      for (std::size_t j = 0; j < cols.size(); ++j) cols[j] = j;
      const ResidualRows rows = collocation_rows(c.model, c.problem, c.cfg, c.samples, cols);
      double sum = 0.0;
      for (double r : rows.r) sum += r * r;
      std::vector<double> grad(cols.size());
      Rng rng(0);
      const double total = collocation_loss(c.model, c.problem, c.cfg, c.samples, rng, grad).total;
      CHECK(sum == Approx(total).epsilon(1e-12));
      std::vector<double> jtr(cols.size(), 0.0);
      for (std::size_t i = 0; i < rows.rows; ++i) {
        for (std::size_t j = 0; j < rows.cols; ++j) jtr[j] += 2.0 * rows.jacobian[i * rows.cols + j] * rows.r[i];
      }
      CHECK(testing::max_relative_deviation(jtr, grad) <= 1e-9);
    }
  }

  TEST_CASE("configuration errors") {
    const ProblemSpec p = make_problem("1d-A");
    Rng rng(0);
    Model m = init_nodes(p.geometry, 3, 1, p.dirichlet_segments(), KernelType::Gaussian, Variant::Plain, rng);
    SampleSet s = make_samples(p, 10, 1, true, rng);
    SampleSet no_interior = s;
    no_interior.interior = PointSet(1);
    CHECK_THROWS_AS(collocation_loss(m, p, {}, no_interior, rng), ConfigError);
    SampleSet no_boundary = s;
    no_boundary.boundary.dirichlet = PointSet(1);
    no_boundary.boundary.dirichlet_values.clear();
    CHECK_THROWS_AS(collocation_loss(m, p, {}, no_boundary, rng), ConfigError);
    LossConfig bad;
    bad.fraction = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad.fraction = 1.0;
    bad.w_d = -1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    const ProblemSpec sq = make_problem("2d-A");
    Model m2 = init_nodes(sq.geometry, 9, 2, sq.dirichlet_segments(), KernelType::Gaussian, Variant::Plain, rng);
    LossConfig var;
    var.mode = LossMode::Variational;
    CHECK_THROWS_AS(variational_loss(m2, sq, var, make_samples(sq, 9, 2, true, rng)), ConfigError);
    CHECK_THROWS_AS(parse_mode("galerkin"), ConfigError);
  }

  TEST_CASE("variational energy") {
    const ProblemSpec p = make_problem("1d-A");
    Rng rng(0);
    Model zero = init_nodes(p.geometry, 4, 1, p.dirichlet_segments(), KernelType::Gaussian, Variant::Plain, rng);
    LossConfig cfg;
    cfg.mode = LossMode::Variational;
    const LossParts z = variational_loss(zero, p, cfg, make_samples(p, 10, 1, true, rng));
    CHECK(z.total == 0.0);
    CHECK(z.dirichlet == 0.0);

    const Model surrogate = exact_1d_a_surrogate();
    CHECK(std::abs(energy(surrogate, 10000) + 1.0 / 24.0) <= 1e-3);
    CHECK(std::abs(energy(surrogate, 1000) - energy(surrogate, 100000)) <= 1e-4);
  }

  TEST_CASE("subsampling") {
    Rng rng(5);
    CHECK(subsample_indices(10, 1.0, rng) == std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
    const auto half = subsample_indices(10, 0.5, rng);
    CHECK(half.size() == 5);
    CHECK(std::set<std::size_t>(half.begin(), half.end()).size() == 5);
    for (std::size_t i : half) CHECK(i < 10);
    CHECK(subsample_indices(7, 0.2, rng).size() == 2);
    Rng a(77), b(77);
    CHECK(subsample_indices(100, 0.3, a) == subsample_indices(100, 0.3, b));

    PointSet pts(1);
    for (int i = 0; i < 10; ++i) pts.push_back({0.1 * i});
    CHECK(subsample(pts, 1.0, rng) == pts);
    const PointSet sub = subsample(pts, 0.5, rng);
    CHECK(sub.size() == 5);
    for (std::size_t i = 0; i < sub.size(); ++i) {
      bool found = false;
      for (std::size_t j = 0; j < pts.size(); ++j) found = found || pts[j][0] == sub[i][0];
      CHECK(found);
    }
    CHECK_THROWS_AS(subsample_indices(10, 0.0, rng), ConfigError);

    // Uniformity: each index drawn with frequency f over many draws.
    std::vector<int> hits(20, 0);
    for (int t = 0; t < 4000; ++t) {
      for (std::size_t i : subsample_indices(20, 0.25, rng)) ++hits[i];
    }
    for (int h : hits) CHECK(std::abs(h - 1000) < 150);
  }

  TEST_CASE("interior subset changes with the generator when f < 1") {
    testing::GradientCase c = testing::make_case("1d-B", "1d-B", KernelType::Gaussian, 5, 30);
    c.cfg.fraction = 0.3;
    Rng a(1), b(2);
    CHECK(collocation_loss(c.model, c.problem, c.cfg, c.samples, a).interior !=
          collocation_loss(c.model, c.problem, c.cfg, c.samples, b).interior);
  }
}
