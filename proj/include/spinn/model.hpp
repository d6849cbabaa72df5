#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "spinn/errors.hpp"
#include "spinn/geometry.hpp"
#include "spinn/hyper_dual.hpp"
#include "spinn/kernels.hpp"
#include "spinn/rng.hpp"
#include "spinn/tape.hpp"

namespace spinn {

inline constexpr double kMinWidth = 1e-3;
inline constexpr double kPouFloor = 1e-30;

enum class Variant { Plain, Pou };

// Meshless ansatz over fixed and free nodes. Node order is fixed nodes first,
// then free nodes; h and U follow that order. Positions are stored flat with
// `dim` coordinates per node.
struct ModelParams {
  int dim = 1;
  Variant variant = Variant::Plain;
  KernelId kernel;
  std::vector<double> fixed_X;
  std::vector<double> free_X;
  std::vector<double> h;
  std::vector<double> U;

  std::size_t n_fixed() const { return fixed_X.size() / static_cast<std::size_t>(dim); }
  std::size_t n_free() const { return free_X.size() / static_cast<std::size_t>(dim); }
  std::size_t n_nodes() const { return n_fixed() + n_free(); }
  std::span<const double> position(std::size_t node) const;

  // Packed trainable vector: free positions, widths, weights, kernel network.
  struct Layout {
    std::size_t x = 0, h = 0, u = 0, mlp = 0, total = 0;
  };
  Layout layout() const;
  std::size_t param_count() const { return layout().total; }
  std::vector<double> pack() const;
  void unpack(std::span<const double> theta);
  // h_i <- max(h_i, kMinWidth).
  void project();
  // Throws ConfigError when the node/width/weight counts disagree.
  void validate() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

// u(x) = a0 + sum_k a_k cos(k w x) + b_k sin(k w x), w = 2 pi / (hi - lo).
// Frequencies are frozen; a0, a and b train.
struct FourierParams {
  double lo = 0.0;
  double hi = 1.0;
  double a0 = 0.0;
  std::vector<double> a;
  std::vector<double> b;

  static FourierParams zeros(double lo, double hi, std::size_t modes);
  std::size_t modes() const { return a.size(); }
  double omega() const;
  std::size_t param_count() const { return 1 + a.size() + b.size(); }
  std::vector<double> pack() const;
  void unpack(std::span<const double> theta);

  friend bool operator==(const FourierParams&, const FourierParams&) = default;
};

using Model = std::variant<ModelParams, FourierParams>;

// ---------------------------------------------------------------------------
// Generic evaluation. S is double, HyperDual, or a tape Var; theta is the
// packed parameter vector in the same scalar type.

namespace detail {

template <class S>
S node_kernel(KernelType type, std::span<const S> y, std::span<const S> mlp) {
  switch (type) {
    case KernelType::Gaussian:
    case KernelType::Mlp: {
      S q = y[0] * y[0];
      for (std::size_t k = 1; k < y.size(); ++k) q = q + y[k] * y[k];
      if (type == KernelType::Gaussian) return gaussian(q);
      return mlp_kernel(sqrt(q + kMlpRadiusEps * kMlpRadiusEps), mlp);
    }
    case KernelType::SoftplusHat:
      return softplus_hat(y);
    case KernelType::ReluHat:
      return relu_hat_unit(y[0]);
  }
  throw UsageError("unknown kernel type");
}

}  // namespace detail

template <class S>
S eval_meshless(const ModelParams& m, std::span<const S> theta, std::span<const S> x) {
  const auto L = m.layout();
  const std::size_t d = static_cast<std::size_t>(m.dim);
  const std::size_t nf = m.n_fixed();
  const std::size_t n = m.n_nodes();
  const std::span<const S> mlp = theta.subspan(L.mlp, L.total - L.mlp);
  std::array<S, kMaxDim> y{};
  const auto phi = [&](std::size_t i) {
    const S inv_h = 1.0 / theta[L.h + i];
    if (i < nf) {
      for (std::size_t k = 0; k < d; ++k) y[k] = (x[k] - m.fixed_X[i * d + k]) * inv_h;
    } else {
      for (std::size_t k = 0; k < d; ++k) y[k] = (x[k] - theta[L.x + (i - nf) * d + k]) * inv_h;
    }
    return detail::node_kernel<S>(m.kernel.type, std::span<const S>(y.data(), d), mlp);
  };
  S phi0 = phi(0);
  S num = theta[L.u] * phi0;
  if (m.variant == Variant::Plain) {
    for (std::size_t i = 1; i < n; ++i) num = num + theta[L.u + i] * phi(i);
    return num;
  }
  S den = phi0;
  for (std::size_t i = 1; i < n; ++i) {
    const S p = phi(i);
    num = num + theta[L.u + i] * p;
    den = den + p;
  }
  if (!(real_part(den) > kPouFloor)) {
    std::string where = "(";
    for (std::size_t k = 0; k < d; ++k) where += (k ? ", " : "") + std::to_string(real_part(x[k]));
    where += ")";
    throw EvalError("pou", real_part(den), "partition of unity: all kernels vanish at x = " + where);
  }
  return num / den;
}

template <class S>
S eval_fourier(const FourierParams& f, std::span<const S> theta, std::span<const S> x) {
  const std::size_t K = f.modes();
  const double w = f.omega();
  S u = theta[0];
  for (std::size_t k = 1; k <= K; ++k) {
    const S arg = (static_cast<double>(k) * w) * x[0];
    u = u + theta[k] * cos(arg) + theta[K + k] * sin(arg);
  }
  return u;
}

template <class S>
S evaluate(const Model& model, std::span<const S> theta, std::span<const S> x) {
  if (const auto* m = std::get_if<ModelParams>(&model)) return eval_meshless<S>(*m, theta, x);
  return eval_fourier<S>(std::get<FourierParams>(model), theta, x);
}

// Records u(x) on `tape` with coordinate `axis` seeded (1, 1), or unseeded
// when axis < 0. `params` are tape leaves holding the packed parameters.
// Meshless models with Gaussian, softplus-hat or ReLU-hat kernels become a
// single node whose partials are the closed-form node derivatives; other
// models are recorded operation by operation.
Var record_eval(const Model& model, Tape& tape, std::span<const Var> params, std::span<const double> x, int axis);
// out[k] = u(x) seeded along axis k, for every axis; shares the per-node
// transcendental work between axes when fused.
void record_eval_axes(const Model& model, Tape& tape, std::span<const Var> params, std::span<const double> x,
                      std::span<Var> out);
// Always operation by operation; reference path for the fused form.
Var record_eval_generic(const Model& model, Tape& tape, std::span<const Var> params, std::span<const double> x,
                        int axis);

// ---------------------------------------------------------------------------
// Model-level helpers.

int model_dim(const Model& model);
std::size_t param_count(const Model& model);
std::vector<double> pack(const Model& model);
void unpack(Model& model, std::span<const double> theta);
void project(Model& model);
// Packed indices of the coefficients u depends on linearly: U for meshless
// models, every coefficient for Fourier models.
std::vector<std::size_t> linear_coefficients(const Model& model);

double eval_plain(const ModelParams& p, std::span<const double> x);
double eval_pou(const ModelParams& p, std::span<const double> x);
double eval_fourier(const FourierParams& p, double x);
double eval(const Model& model, std::span<const double> x);
std::vector<double> eval_points(const Model& model, const PointSet& points);

struct SpatialDerivs {
  double u = 0.0;
  double du = 0.0;
  double d2u = 0.0;
};

// u, du/dx_axis and d2u/dx_axis^2 from one hyper-dual pass with the axis
// coordinate seeded (1, 1). Throws UsageError for an axis outside [0, dim).
SpatialDerivs spatial_derivs(const Model& model, std::span<const double> x, int axis);

// Free nodes on an interior lattice of the domain (actual count may differ
// from n_interior for non-rectangular shapes), `n_fixed_per_segment` fixed
// nodes on each listed boundary segment (one per endpoint in 1-D), widths set
// to the lattice spacing and all weights zero. `rng` initializes the kernel
// network when the kernel is Mlp.
ModelParams init_nodes(const Geometry& domain, std::size_t n_interior, std::size_t n_fixed_per_segment,
                       std::span<const std::size_t> fixed_segments, KernelType kernel, Variant variant,
                       Rng& rng);

std::string_view variant_name(const Model& model);

nlohmann::json to_json(const Model& model);
Model model_from_json(const nlohmann::json& doc);

}  // namespace spinn
