#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "spinn/model.hpp"
#include "spinn/problems.hpp"
#include "spinn/rng.hpp"

namespace spinn {

enum class LossMode { Collocation, Variational };

std::string_view mode_name(LossMode mode);
// Throws ConfigError on an unknown name.
LossMode parse_mode(std::string_view name);

struct LossConfig {
  double w_i = 1.0;
  double w_d = 100.0;
  double w_n = 100.0;
  double fraction = 1.0;  // interior sampling fraction f in (0, 1]
  LossMode mode = LossMode::Collocation;
  std::size_t cells = 0;  // variational partition; 0 uses max(interior sample count, 1000)
  unsigned threads = 1;   // worker cap; 0 means hardware concurrency

  // Throws ConfigError for negative weights or f outside (0, 1].
  void validate() const;
};

struct SampleSet {
  PointSet interior;
  BoundarySamples boundary;
};

// Interior points (lattice when `full`, else random) plus full boundary
// sampling with `per_segment` points per boundary segment.
SampleSet make_samples(const ProblemSpec& p, std::size_t n_interior, std::size_t per_segment, bool full, Rng& rng);

struct LossParts {
  double total = 0.0;
  double interior = 0.0;
  double dirichlet = 0.0;
  double neumann = 0.0;
};

// ceil(f * n) distinct indices drawn uniformly without replacement, in
// ascending order; f = 1 returns 0..n-1 without touching the generator.
std::vector<std::size_t> subsample_indices(std::size_t n, double f, Rng& rng);
PointSet subsample(const PointSet& points, double f, Rng& rng);

// Collocation loss: w_i * mean N^2 over the interior subset + w_d * mean
// (u - u0)^2 + w_n * mean (grad u . n - g0)^2. When `gradient` is non-empty
// it receives dLoss/dtheta for the packed parameter vector.
LossParts collocation_loss(const Model& model, const ProblemSpec& p, const LossConfig& cfg, const SampleSet& s,
                           Rng& rng, std::span<double> gradient = {});

// Residual rows of the collocation loss over all samples, scaled so that the
// sum of squares equals the loss at f = 1: sqrt(w_i/M_i) N, sqrt(w_d/M_d)
// (u - u0), sqrt(w_n/M_n) (flux - g0), in that order. `jacobian` is row-major
// rows x cols with the derivatives of each row by the listed parameters.
struct ResidualRows {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> r;
  std::vector<double> jacobian;
};
ResidualRows collocation_rows(const Model& model, const ProblemSpec& p, const LossConfig& cfg, const SampleSet& s,
                              std::span<const std::size_t> columns);

// Variational loss for 1-D problems with an energy density: left Riemann sum
// of e(x, u, u') over a uniform partition plus the Dirichlet penalty. The
// `interior` component holds the energy and may be negative.
LossParts variational_loss(const Model& model, const ProblemSpec& p, const LossConfig& cfg, const SampleSet& s,
                           std::span<double> gradient = {});

// Dispatch on cfg.mode.
LossParts evaluate_loss(const Model& model, const ProblemSpec& p, const LossConfig& cfg, const SampleSet& s, Rng& rng,
                        std::span<double> gradient = {});

}  // namespace spinn
