#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "spinn/loss.hpp"
#include "spinn/model.hpp"
#include "spinn/problems.hpp"
#include "spinn/rng.hpp"
#include "spinn/timestepping.hpp"

namespace spinn::testing {

// Central differences with step 1e-5 * (|theta_i| + 1).
inline std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& f,
                                       std::vector<double> theta) {
  std::vector<double> g(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double t0 = theta[i];
    const double step = 1e-5 * (std::abs(t0) + 1.0);
    theta[i] = t0 + step;
    const double fp = f(theta);
    theta[i] = t0 - step;
    const double fm = f(theta);
    theta[i] = t0;
    g[i] = (fp - fm) / (2.0 * step);
  }
  return g;
}

// Largest |a - b| / max(|b|, floor), where the floor keeps entries that are
// zero up to round-off from dominating: 1e-6 of the largest |b|, at least 1e-10.
inline double max_relative_deviation(const std::vector<double>& a, const std::vector<double>& b) {
  double scale = 0.0;
  for (double v : b) scale = std::max(scale, std::abs(v));
  const double floor = std::max(1e-6 * scale, 1e-10);
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a[i] - b[i]) / std::max(std::abs(b[i]), floor));
  }
  return worst;
}

// Moves a freshly initialized model off its lattice: U random in [-1, 1],
// free positions jittered by 10% of the width, widths scaled by [0.8, 1.2].
inline void randomize(Model& model, Rng& rng) {
  if (auto* m = std::get_if<ModelParams>(&model)) {
    for (double& u : m->U) u = rng.uniform(-1.0, 1.0);
    const double h0 = m->h.empty() ? 0.1 : m->h.front();
    for (double& x : m->free_X) x += 0.1 * h0 * rng.uniform(-1.0, 1.0);
    for (double& h : m->h) h *= rng.uniform(0.8, 1.2);
    for (double& w : m->kernel.mlp_params) w += 0.1 * rng.uniform(-1.0, 1.0);
    return;
  }
  auto& f = std::get<FourierParams>(model);
  f.a0 = rng.uniform(-1.0, 1.0);
  for (double& a : f.a) a = rng.uniform(-1.0, 1.0);
  for (double& b : f.b) b = rng.uniform(-1.0, 1.0);
}

struct GradientCase {
  std::string label;
  ProblemSpec problem;
  Model model;
  SampleSet samples;
  LossConfig cfg;
};

// Tape gradient of the total loss against central differences.
inline double loss_gradient_deviation(const GradientCase& c) {
  Rng rng(1);
  std::vector<double> grad(param_count(c.model));
  evaluate_loss(c.model, c.problem, c.cfg, c.samples, rng, grad);
  const auto f = [&](const std::vector<double>& theta) {
    Model m = c.model;
    unpack(m, theta);
    Rng r(1);
    return evaluate_loss(m, c.problem, c.cfg, c.samples, r).total;
  };
  return max_relative_deviation(grad, fd_gradient(f, pack(c.model)));
}

inline GradientCase make_case(const std::string& label, const std::string& problem, KernelType kernel,
                              std::size_t nodes, std::size_t samples, Variant variant = Variant::Plain) {
  ProblemSpec p = make_problem(problem);
  Rng rng(7);
  const std::size_t per_segment = p.dim() == 1 ? 1 : 3;
  Model m = init_nodes(p.geometry, nodes, per_segment, p.dirichlet_segments(), kernel, variant, rng);
  randomize(m, rng);
  SampleSet s = make_samples(p, samples, per_segment, true, rng);
  return {label, std::move(p), std::move(m), std::move(s), LossConfig{}};
}

inline GradientCase make_step_case(const std::string& problem, std::size_t nodes) {
  const Evolution evo = *make_problem(problem).evolution;
  Rng rng(11);
  Model prev = init_nodes(evo.space, nodes, 1, std::vector<std::size_t>{0, 1}, KernelType::Gaussian,
                          Variant::Plain, rng);
  randomize(prev, rng);
  Model curr = prev;
  randomize(curr, rng);
  ProblemSpec space;
  space.geometry = evo.space;
  space.boundary = {{0, BcKind::Dirichlet, [](std::span<const double>) { return 0.0; }},
                    {1, BcKind::Dirichlet, [](std::span<const double>) { return 0.0; }}};
  SampleSet s = make_samples(space, 4 * nodes, 1, true, rng);
  const std::vector<double> u_prev = eval_points(prev, s.interior);
  return {problem + " step", step_problem(evo, u_prev, 5e-3, 5e-3), std::move(curr), std::move(s), LossConfig{}};
}

// Every benchmark loss at a random parameter state.
inline std::vector<GradientCase> gradient_cases() {
  std::vector<GradientCase> cases;
  cases.push_back(make_case("1d-A", "1d-A", KernelType::Gaussian, 5, 30));
  cases.push_back(make_case("1d-B", "1d-B", KernelType::Gaussian, 5, 30));
  cases.push_back(make_case("1d-C", "1d-C", KernelType::Gaussian, 7, 40));
  cases.push_back(make_case("2d-A", "2d-A", KernelType::SoftplusHat, 9, 16));
  cases.push_back(make_case("2d-B", "2d-B", KernelType::Gaussian, 9, 16));
  cases.push_back(make_case("irregular", "irregular", KernelType::Gaussian, 9, 16));
  cases.push_back(make_case("heat space-time", "heat", KernelType::Gaussian, 9, 16));
  cases.push_back(make_case("advection space-time", "advection", KernelType::Gaussian, 9, 16));
  cases.push_back(make_case("burgers space-time", "burgers", KernelType::Gaussian, 9, 16));
  cases.push_back(make_step_case("heat", 6));
  cases.push_back(make_step_case("advection", 6));
  cases.push_back(make_step_case("burgers", 6));

  cases.push_back(make_case("1d-A pou", "1d-A", KernelType::Gaussian, 5, 30, Variant::Pou));
  cases.push_back(make_case("1d-A mlp kernel", "1d-A", KernelType::Mlp, 4, 20));
  cases.push_back(make_case("1d-A softplus-hat", "1d-A", KernelType::SoftplusHat, 5, 30));
  cases.push_back(make_case("2d-A gaussian", "2d-A", KernelType::Gaussian, 9, 16));
  GradientCase frac = make_case("1d-B f=0.5", "1d-B", KernelType::Gaussian, 5, 30);
  frac.cfg.fraction = 0.5;
  cases.push_back(std::move(frac));
  GradientCase var = make_case("1d-A variational", "1d-A", KernelType::Gaussian, 5, 30);
  var.cfg.mode = LossMode::Variational;
  var.cfg.cells = 200;
  cases.push_back(std::move(var));
  GradientCase fourier = make_case("1d-A fourier", "1d-A", KernelType::Gaussian, 5, 30);
  fourier.model = FourierParams::zeros(0.0, 1.0, 4);
  Rng rng(3);
  randomize(fourier.model, rng);
  cases.push_back(fourier);
  fourier.label = "1d-A fourier variational";
  fourier.cfg.mode = LossMode::Variational;
  fourier.cfg.cells = 200;
  cases.push_back(std::move(fourier));
  return cases;
}

// Scratch directory removed on scope exit.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("spinn_" + tag + "_" + std::to_string(std::random_device{}()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

}  // namespace spinn::testing
