#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "spinn/loss.hpp"
#include "spinn/model.hpp"

namespace spinn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig hp;
  std::size_t t = 0;
  std::vector<double> m;
  std::vector<double> v;

  AdamState() = default;
  AdamState(AdamConfig config, std::size_t n) : hp(config), m(n, 0.0), v(n, 0.0) {}
  // Zeroes the moments and step count, keeping the hyperparameters.
  void reset(std::size_t n);
};

// Bias-corrected Adam update of a raw parameter vector. Throws TrainingError
// naming the first non-finite gradient entry.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> gradient);
// Same on a model, followed by the width projection h <- max(h, h_min).
void adam_step(AdamState& state, Model& model, std::span<const double> gradient);

struct WeightSolveConfig {
  std::size_t max_iterations = 5;
  double tolerance = 1e-12;  // stop when the relative loss decrease falls below this
};

struct WeightSolveReport {
  std::size_t iterations = 0;
  double loss_before = 0.0;
  double loss_after = 0.0;
};

// Gauss-Newton on the linear coefficients with every other parameter frozen,
// minimizing the full-sample collocation loss. One iteration is exact when the
// residuals are affine in the coefficients. Steps that do not lower the loss
// are rejected, so the loss never increases.
WeightSolveReport solve_weights(Model& model, const ProblemSpec& p, const LossConfig& cfg, const SampleSet& samples,
                                const WeightSolveConfig& ws = {});

// Human-readable name of packed parameter i, e.g. "h[3]" or "X[5].y".
std::string parameter_name(const Model& model, std::size_t i);

struct RunRecord {
  std::size_t iteration = 0;
  double loss_total = 0.0;
  double loss_interior = 0.0;
  double loss_dirichlet = 0.0;
  double loss_neumann = 0.0;
  std::optional<double> l1, l2, linf;
  double wall_ms = 0.0;
};

// Timing is optional so that record streams of identical runs compare equal.
nlohmann::json to_json(const RunRecord& r, bool with_timing);

// Reference field on which error metrics are measured during training.
struct MetricTarget {
  PointSet grid;
  std::vector<double> values;
};

using TrainCallback = std::function<void(const RunRecord&, const Model&)>;

struct TrainConfig {
  std::size_t iterations = 1000;
  std::size_t metric_every = 100;
  AdamConfig adam;
};

// Runs `iterations` Adam steps on evaluate_loss. A record is taken after
// every metric_every-th step and after the last one; its loss is the full
// (unsubsampled) loss of the updated model. Throws TrainingError when the
// loss becomes non-finite.
std::vector<RunRecord> train(Model& model, const ProblemSpec& p, const LossConfig& cfg, const SampleSet& samples,
                             const TrainConfig& tc, Rng& rng, const MetricTarget* target = nullptr,
                             const TrainCallback& callback = {}, AdamState* state = nullptr);

}  // namespace spinn
