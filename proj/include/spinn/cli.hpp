#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spinn/loss.hpp"
#include "spinn/model.hpp"
#include "spinn/optimizer.hpp"
#include "spinn/problems.hpp"
#include "spinn/timestepping.hpp"

namespace spinn {

// Options of `spinn solve`. Unset optionals take the problem defaults.
struct SolveOptions {
  std::string problem;
  std::optional<std::string> kernel;
  std::string variant = "plain";  // plain | pou | fourier
  std::optional<std::size_t> nodes;
  std::string samples = "auto";  // count, or 20 n in 1-D and 4 n in 2-D
  double fraction = 1.0;
  bool random_samples = false;  // interior samples drawn at random instead of a lattice
  std::optional<std::size_t> iterations;
  std::uint64_t seed = 0;
  std::optional<double> lr, wd, wn;
  std::string out;  // output directory; empty writes nothing
  std::string mode = "collocation";
  std::size_t cells = 0;  // variational partition; 0 uses the loss default
  bool march = false;
  std::optional<double> dt, tmax;
  std::optional<std::size_t> inner_iterations;
  std::vector<double> snapshot_times;  // march; empty uses T/4, T/2, 3T/4, T
  unsigned threads = 1;
  std::string polygon;  // vertex file for the irregular problem
  std::optional<std::size_t> grid;  // evaluation points per axis
  std::size_t metric_every = 0;     // 0 is max(1, iterations / 100)
  bool timing = false;              // include wall_ms in run.jsonl
  bool reference_metrics = true;    // compare oracle problems against the reference cache
  std::optional<double> width_scale;
  std::optional<bool> weight_solve;  // steady solves only
};

struct SolveResult {
  ProblemSpec problem;
  Model model;
  std::vector<RunRecord> records;
  std::optional<MarchResult> march;
  PointSet grid;
  std::vector<double> solution;        // model on `grid` (final snapshot when marching)
  std::optional<ErrorMetrics> metrics;  // final error against exact or reference
  double final_loss = 0.0;
};

// Builds, trains and (when opts.out is set) writes run.jsonl, solution.csv,
// nodes.csv and model.json; marching also writes snapshot_<step>.csv files
// indexed by snapshots.jsonl. Throws ConfigError/UsageError on bad options.
SolveResult run_solve(const SolveOptions& opts);

// Reference problem for solve-time and report-time comparisons, if any.
std::optional<std::string> reference_problem(const std::string& problem, bool march);

// Metrics of a run directory against the exact solution, the reference cache
// or another run directory. Throws ConfigError with a re-gridding instruction
// when grids differ and naming `spinn reference` when a file is missing.
struct ReportRow {
  std::string label;
  ErrorMetrics metrics;
};
std::vector<ReportRow> run_report(const std::string& run_dir, const std::string& against_dir = {},
                                  std::optional<std::size_t> reference_n = std::nullopt);

// Entry point of the `spinn` tool.
int cli_main(int argc, char** argv);

}  // namespace spinn
