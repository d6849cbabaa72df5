#include "spinn/timestepping.hpp"

#include <cmath>
#include <limits>
#include <memory>

#include "spinn/errors.hpp"

namespace spinn {

namespace {

double apply_op(const SpatialOperator& op, double x, double u, double ux, double uxx) { return op.real(x, u, ux, uxx); }
Var apply_op(const SpatialOperator& op, double x, Var u, Var ux, Var uxx) { return op.taped(x, u, ux, uxx); }

std::vector<BoundaryCondition> boundary_at(const Evolution& evo, double t) {
  const auto bv = evo.boundary_value;
  const ScalarField g = [bv, t](std::span<const double> x) { return bv(x[0], t); };
  return {{0, BcKind::Dirichlet, g}, {1, BcKind::Dirichlet, g}};
}

std::optional<ErrorMetrics> metrics_at(const Evolution& evo, const Model& model, double t) {
  if (!evo.exact) return std::nullopt;
  const PointSet grid = evaluation_grid(evo.space, 201);
  std::vector<double> ref(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) ref[i] = evo.exact(grid[i][0], t);
  return error_metrics(eval_points(model, grid), ref);
}

}  // namespace

void MarchConfig::validate() const {
  if (!(dt > 0.0)) throw ConfigError("march: dt must be positive");
  if (!(t_end > 0.0)) throw ConfigError("march: horizon must be positive");
  if (inner_iterations < 1) throw ConfigError("march: need at least one inner iteration per step");
  loss.validate();
}

std::size_t MarchConfig::steps() const {
  return static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
}

ProblemSpec step_problem(const Evolution& evo, const std::vector<double>& u_prev, double dt, double t) {
  ProblemSpec p;
  p.name = "fd-step";
  p.geometry = evo.space;
  const auto prev = std::make_shared<const std::vector<double>>(u_prev);
  const SpatialOperator op = evo.op;
  p.residual = make_residual([prev, dt, op](const PointContext& c, const auto& f) {
    return (f.u - (*prev)[c.index]) / dt - apply_op(op, c.x[0], f.u, f.grad[0], f.d2[0]);
  });
  p.boundary = boundary_at(evo, t);
  return p;
}

std::vector<RunRecord> fd_spinn_step(const Model& prev, Model& curr, const Evolution& evo, double dt, double t,
                                     const SampleSet& samples, const MarchConfig& cfg, Rng& rng, std::size_t step,
                                     const TrainCallback& callback) {
  const ProblemSpec p = step_problem(evo, eval_points(prev, samples.interior), dt, t);
  SampleSet s = samples;
  for (std::size_t i = 0; i < s.boundary.dirichlet.size(); ++i) {
    s.boundary.dirichlet_values[i] = evo.boundary_value(s.boundary.dirichlet[i][0], t);
  }
  TrainConfig tc;
  tc.iterations = cfg.inner_iterations;
  tc.metric_every = cfg.inner_iterations;
  tc.adam = cfg.adam;
  try {
    if (cfg.weight_solve) solve_weights(curr, p, cfg.loss, s);
    auto records = train(curr, p, cfg.loss, s, tc, rng, nullptr, callback);
    if (cfg.weight_solve) {
      solve_weights(curr, p, cfg.loss, s);
      // The last record describes the state the step hands on.
      LossConfig full = cfg.loss;
      full.fraction = 1.0;
      const LossParts parts = collocation_loss(curr, p, full, s, rng);
      RunRecord& last = records.back();
      last.loss_total = parts.total;
      last.loss_interior = parts.interior;
      last.loss_dirichlet = parts.dirichlet;
      last.loss_neumann = parts.neumann;
    }
    return records;
  } catch (const TrainingError& e) {
    throw TrainingError("time step " + std::to_string(step) + ": " + e.what());
  } catch (const EvalError& e) {
    throw TrainingError("time step " + std::to_string(step) + ": " + e.what());
  }
}

double fit_initial_condition(Model& model, const Evolution& evo, const SampleSet& samples, const MarchConfig& cfg,
                             Rng& rng, std::size_t* iterations) {
  ProblemSpec p;
  p.name = "initial-fit";
  p.geometry = evo.space;
  const auto u0 = evo.initial;
  p.residual = make_residual([u0](const PointContext& c, const auto& f) { return f.u - u0(c.x[0]); });
  p.boundary = {{0, BcKind::Dirichlet, [u0](std::span<const double> x) { return u0(x[0]); }},
                {1, BcKind::Dirichlet, [u0](std::span<const double> x) { return u0(x[0]); }}};
  SampleSet s = samples;
  for (std::size_t i = 0; i < s.boundary.dirichlet.size(); ++i) {
    s.boundary.dirichlet_values[i] = u0(s.boundary.dirichlet[i][0]);
  }
  const PointSet grid = evaluation_grid(evo.space, cfg.fit_grid);
  std::vector<double> target(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) target[i] = u0(grid[i][0]);

  LossConfig lc = cfg.loss;
  lc.fraction = 1.0;
  TrainConfig tc;
  tc.iterations = std::max<std::size_t>(1, cfg.fit_chunk);
  tc.metric_every = tc.iterations;
  tc.adam = cfg.adam;
  AdamState state(tc.adam, param_count(model));
  // Linear solve for the weights over increasing common width scales, keeping
  // the narrowest that meets the tolerance, then Adam
  // rounds on all parameters, each followed by a fresh weight solve.
  double linf = std::numeric_limits<double>::infinity();
  const Model start = model;
  for (double scale : {1.0, 1.5, 2.0, 3.0, 4.0}) {
    Model trial = start;
    if (auto* m = std::get_if<ModelParams>(&trial)) {
      for (double& h : m->h) h *= scale;
    } else if (scale != 1.0) {
      break;
    }
    solve_weights(trial, p, lc, s);
    const double l = error_metrics(eval_points(trial, grid), target).linf;
    if (l < linf) {
      linf = l;
      model = std::move(trial);
    }
    if (linf <= cfg.fit_tolerance) break;
  }
  std::size_t used = 0;
  while (linf > cfg.fit_tolerance && used < cfg.fit_iterations) {
    train(model, p, lc, s, tc, rng, nullptr, {}, &state);
    used += tc.iterations;
    Model solved = model;
    solve_weights(solved, p, lc, s);
    const double l_solved = error_metrics(eval_points(solved, grid), target).linf;
    const double l_trained = error_metrics(eval_points(model, grid), target).linf;
    if (l_solved < l_trained) model = std::move(solved);
    linf = std::min(l_solved, l_trained);
  }
  if (iterations) *iterations = used;
  return linf;
}

MarchResult march(const Evolution& evo, const MarchConfig& cfg, Model model, const SampleSet& samples, Rng& rng,
                  const StepCallback& on_step) {
  cfg.validate();
  if (model_dim(model) != 1) throw ConfigError("march: FD-SPINN marches 1-D spatial models");
  MarchResult result;
  const Model initial = model;
  result.fit_linf = fit_initial_condition(model, evo, samples, cfg, rng, &result.fit_iterations);
  result.snapshots.push_back({0, 0.0, model, metrics_at(evo, model, 0.0)});

  const std::size_t n_steps = cfg.steps();
  const auto wanted = [&](std::size_t n, double t) {
    if (cfg.snapshot_times.empty() || n == n_steps) return true;
    for (double s : cfg.snapshot_times) {
      if (std::abs(s - t) <= 0.5 * cfg.dt * (1.0 - 1e-9)) return true;
    }
    return false;
  };
  for (std::size_t n = 0; n < n_steps; ++n) {
    const double t = static_cast<double>(n + 1) * cfg.dt;
    Model next = cfg.warm_start ? model : initial;
    StepReport report;
    report.step = n + 1;
    report.t = t;
    report.records = fd_spinn_step(model, next, evo, cfg.dt, t, samples, cfg, rng, n + 1);
    model = std::move(next);
    if (wanted(n + 1, t)) result.snapshots.push_back({n + 1, t, model, metrics_at(evo, model, t)});
    if (on_step) on_step(report, model);
    result.steps.push_back(std::move(report));
  }
  return result;
}

}  // namespace spinn
