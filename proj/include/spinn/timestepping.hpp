#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "spinn/loss.hpp"
#include "spinn/model.hpp"
#include "spinn/optimizer.hpp"
#include "spinn/problems.hpp"

namespace spinn {

struct MarchConfig {
  double dt = 5e-3;
  double t_end = 0.1;
  std::size_t inner_iterations = 200;
  bool warm_start = true;
  AdamConfig adam;
  LossConfig loss;
  // Gauss-Newton solve for the linear coefficients before and after the Adam
  // iterations of every step.
  bool weight_solve = true;
  // Initial-condition fit: coefficient solve over a few width scales, then
  // Adam rounds of fit_chunk iterations, each followed by a coefficient solve,
  // until the max error on the fit grid is <= fit_tolerance or fit_iterations
  // are spent.
  std::size_t fit_iterations = 20000;
  std::size_t fit_chunk = 500;
  double fit_tolerance = 1e-3;
  std::size_t fit_grid = 401;
  // Snapshot times; empty keeps every step.
  std::vector<double> snapshot_times;

  // Throws ConfigError for dt <= 0 or t_end <= 0.
  void validate() const;
  // ceil(t_end / dt), ignoring round-off.
  std::size_t steps() const;
};

struct MarchSnapshot {
  std::size_t step = 0;  // 0 is the fitted initial condition
  double t = 0.0;
  Model model;
  std::optional<ErrorMetrics> metrics;  // against the exact solution when known
};

struct StepReport {
  std::size_t step = 0;
  double t = 0.0;
  std::vector<RunRecord> records;  // inner iterations of this step
};

struct MarchResult {
  double fit_linf = 0.0;
  std::size_t fit_iterations = 0;
  std::vector<MarchSnapshot> snapshots;
  std::vector<StepReport> steps;
};

// The 1-D problem solved in one implicit step: residual (u - u_prev)/dt - S[u]
// at the interior samples (u_prev tabulated by sample index) and the spatial
// boundary data at time t.
ProblemSpec step_problem(const Evolution& evo, const std::vector<double>& u_prev, double dt, double t);

// Trains `curr` on one implicit Euler step from the frozen `prev`. Returns the
// inner run records. Throws TrainingError naming `step` on non-finite loss.
std::vector<RunRecord> fd_spinn_step(const Model& prev, Model& curr, const Evolution& evo, double dt, double t,
                                     const SampleSet& samples, const MarchConfig& cfg, Rng& rng, std::size_t step,
                                     const TrainCallback& callback = {});

// Least-squares fit of `model` to u0 (interior residual u - u0, Dirichlet data
// at the ends). Returns the achieved max error on the fit grid.
double fit_initial_condition(Model& model, const Evolution& evo, const SampleSet& samples, const MarchConfig& cfg,
                             Rng& rng, std::size_t* iterations = nullptr);

using StepCallback = std::function<void(const StepReport&, const Model&)>;

// Fits u0, then runs steps n = 0 .. N_t - 1 with warm start (parameters copied,
// Adam moments reset).
MarchResult march(const Evolution& evo, const MarchConfig& cfg, Model model, const SampleSet& samples, Rng& rng,
                  const StepCallback& on_step = {});

}  // namespace spinn
