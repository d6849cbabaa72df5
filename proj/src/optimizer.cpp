#include "spinn/optimizer.hpp"

#include <chrono>
#include <cmath>

#include <Eigen/Dense>

#include "spinn/errors.hpp"

namespace spinn {

void AdamState::reset(std::size_t n) {
  t = 0;
  m.assign(n, 0.0);
  v.assign(n, 0.0);
}

void adam_step(AdamState& state, std::span<double> params, std::span<const double> gradient) {
  if (gradient.size() != params.size()) throw UsageError("adam_step: gradient and parameters differ in size");
  if (state.m.size() != params.size()) state.reset(params.size());
  for (std::size_t i = 0; i < gradient.size(); ++i) {
    if (!std::isfinite(gradient[i])) {
      throw TrainingError("adam_step: non-finite gradient for parameter " + std::to_string(i));
    }
  }
  const auto& hp = state.hp;
  ++state.t;
  const double c1 = 1.0 - std::pow(hp.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(hp.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = gradient[i];
    state.m[i] = hp.beta1 * state.m[i] + (1.0 - hp.beta1) * g;
    state.v[i] = hp.beta2 * state.v[i] + (1.0 - hp.beta2) * g * g;
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    params[i] -= hp.lr * mhat / (std::sqrt(vhat) + hp.eps);
  }
}

void adam_step(AdamState& state, Model& model, std::span<const double> gradient) {
  std::vector<double> theta = pack(model);
  try {
    adam_step(state, std::span<double>(theta), gradient);
  } catch (const TrainingError&) {
    for (std::size_t i = 0; i < gradient.size(); ++i) {
      if (!std::isfinite(gradient[i])) {
        throw TrainingError("adam_step: non-finite gradient for " + parameter_name(model, i) + " (" +
                            std::to_string(gradient[i]) + ")");
      }
    }
    throw;
  }
  unpack(model, theta);
  project(model);
}

std::string parameter_name(const Model& model, std::size_t i) {
  if (const auto* f = std::get_if<FourierParams>(&model)) {
    if (i == 0) return "a0";
    if (i <= f->modes()) return "a[" + std::to_string(i) + "]";
    return "b[" + std::to_string(i - f->modes()) + "]";
  }
  const auto& m = std::get<ModelParams>(model);
  const auto L = m.layout();
  if (i < L.h) {
    const auto d = static_cast<std::size_t>(m.dim);
    static const char* axes[] = {"x", "y", "z"};
    return "X[" + std::to_string(m.n_fixed() + i / d) + "]." + axes[i % d];
  }
  if (i < L.u) return "h[" + std::to_string(i - L.h) + "]";
  if (i < L.mlp) return "U[" + std::to_string(i - L.u) + "]";
  return "mlp[" + std::to_string(i - L.mlp) + "]";
}

nlohmann::json to_json(const RunRecord& r, bool with_timing) {
  nlohmann::json j;
  j["iteration"] = r.iteration;
  j["loss_total"] = r.loss_total;
  j["loss_interior"] = r.loss_interior;
  j["loss_dirichlet"] = r.loss_dirichlet;
  j["loss_neumann"] = r.loss_neumann;
  if (r.l1) j["L1"] = *r.l1;
  if (r.l2) j["L2"] = *r.l2;
  if (r.linf) j["Linf"] = *r.linf;
  if (with_timing) j["wall_ms"] = r.wall_ms;
  return j;
}

std::vector<RunRecord> train(Model& model, const ProblemSpec& p, const LossConfig& cfg, const SampleSet& samples,
                             const TrainConfig& tc, Rng& rng, const MetricTarget* target,
                             const TrainCallback& callback, AdamState* state) {
  if (tc.iterations < 1) throw ConfigError("train: iterations must be >= 1");
  const std::size_t every = std::max<std::size_t>(1, tc.metric_every);
  AdamState local(tc.adam, param_count(model));
  AdamState& adam = state ? *state : local;
  if (adam.m.size() != param_count(model)) adam.reset(param_count(model));

  LossConfig record_cfg = cfg;
  record_cfg.fraction = 1.0;
  std::vector<double> grad(param_count(model));
  std::vector<RunRecord> records;
  const auto start = std::chrono::steady_clock::now();

  for (std::size_t k = 1; k <= tc.iterations; ++k) {
    const LossParts l = evaluate_loss(model, p, cfg, samples, rng, grad);
    if (!std::isfinite(l.total)) throw TrainingError("train: non-finite loss at iteration " + std::to_string(k));
    adam_step(adam, model, grad);

    if (k % every != 0 && k != tc.iterations) continue;
    const LossParts now = evaluate_loss(model, p, record_cfg, samples, rng);
    if (!std::isfinite(now.total)) throw TrainingError("train: non-finite loss at iteration " + std::to_string(k));
    RunRecord r;
    r.iteration = k;
    r.loss_total = now.total;
    r.loss_interior = now.interior;
    r.loss_dirichlet = now.dirichlet;
    r.loss_neumann = now.neumann;
    if (target) {
      const auto e = error_metrics(eval_points(model, target->grid), target->values);
      r.l1 = e.l1;
      r.l2 = e.l2;
      r.linf = e.linf;
    }
    r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    records.push_back(r);
    if (callback) callback(records.back(), model);
  }
  return records;
}

WeightSolveReport solve_weights(Model& model, const ProblemSpec& p, const LossConfig& cfg, const SampleSet& samples,
                                const WeightSolveConfig& ws) {
  const auto cols = linear_coefficients(model);
  LossConfig full = cfg;
  full.fraction = 1.0;
  const auto squared = [](const std::vector<double>& r) {
    double sum = 0.0;
    for (double v : r) sum += v * v;
    return sum;
  };
  ResidualRows rows = collocation_rows(model, p, full, samples, cols);
  WeightSolveReport report;
  report.loss_before = report.loss_after = squared(rows.r);
  for (std::size_t it = 0; it < ws.max_iterations; ++it) {
    const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> J(
        rows.jacobian.data(), static_cast<Eigen::Index>(rows.rows), static_cast<Eigen::Index>(rows.cols));
    const Eigen::Map<const Eigen::VectorXd> r(rows.r.data(), static_cast<Eigen::Index>(rows.rows));
    const Eigen::VectorXd step = J.completeOrthogonalDecomposition().solve(-r);
    if (!step.allFinite()) break;
    Model trial = model;
    auto theta = pack(trial);
    for (std::size_t k = 0; k < cols.size(); ++k) theta[cols[k]] += step(static_cast<Eigen::Index>(k));
    unpack(trial, theta);
    ResidualRows next;
    try {
      next = collocation_rows(trial, p, full, samples, cols);
    } catch (const EvalError&) {
      break;
    }
    const double loss = squared(next.r);
    if (!(loss < report.loss_after)) break;
    const double drop = (report.loss_after - loss) / std::max(report.loss_after, 1e-300);
    model = std::move(trial);
    rows = std::move(next);
    report.loss_after = loss;
    report.iterations = it + 1;
    if (drop < ws.tolerance) break;
  }
  return report;
}

}  // namespace spinn
