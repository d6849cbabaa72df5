#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spinn/hyper_dual.hpp"
#include "spinn/rng.hpp"

namespace spinn {

enum class KernelType { Gaussian, SoftplusHat, ReluHat, Mlp };

std::string_view kernel_name(KernelType type);
// Accepts "gaussian", "softplus-hat", "relu-hat", "mlp". Throws ConfigError otherwise.
KernelType parse_kernel(std::string_view name);

// Layer sizes of the kernel network: 1 -> 5 -> 5 -> 1, tanh hidden, linear output.
inline constexpr int kMlpHidden = 5;
inline constexpr std::size_t kMlpParamCount =
    kMlpHidden + kMlpHidden + kMlpHidden * kMlpHidden + kMlpHidden + kMlpHidden + 1;
// Regularizes the radial distance fed to the kernel network: r = sqrt(q + eps^2).
inline constexpr double kMlpRadiusEps = 1e-6;

struct KernelId {
  KernelType type = KernelType::Gaussian;
  // Kernel network weights; empty unless type == Mlp. Layout: W1 (5), b1 (5),
  // W2 (5x5 row-major, out x in), b2 (5), W3 (5), b3 (1).
  std::vector<double> mlp_params;

  bool trainable() const { return type == KernelType::Mlp; }
  friend bool operator==(const KernelId&, const KernelId&) = default;
};

// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] per layer.
std::vector<double> mlp_init(Rng& rng);
KernelId make_kernel(KernelType type, Rng& rng);

// exp(-q), where q is the squared scaled distance |x - X|^2 / h^2.
template <class S>
S gaussian(const S& q) {
  return exp(-q);
}

// (1/rho(1)) * rho(1 + 2 d log 2 - sum_k (rho(y_k) + rho(-y_k))).
template <class S>
S softplus_hat(std::span<const S> y) {
  const double d = static_cast<double>(y.size());
  const double inv_norm = 1.0 / softplus(1.0);
  S sum = softplus_pair(y[0]);
  for (std::size_t k = 1; k < y.size(); ++k) sum = sum + softplus_pair(y[k]);
  return inv_norm * softplus((1.0 + 2.0 * d * std::numbers::ln2) - sum);
}

// The same function evaluated as an explicit two-layer softplus network.
double softplus_hat_as_network(std::span<const double> y);

// Piecewise-linear hat on knots xm < xc < xp written as three ReLUs.
// Throws ConfigError for non-monotone knots.
double relu_hat(double x, double xm, double xc, double xp);

// Unit hat on [-1, 1] in scaled coordinate y, via the same three-ReLU form.
template <class S>
S relu_hat_unit(const S& y) {
  return relu(y + 1.0) - 2.0 * relu(y) + relu(y - 1.0);
}

template <class S>
S mlp_kernel(const S& r, std::span<const S> p) {
  constexpr int H = kMlpHidden;
  const S* w1 = p.data();
  const S* b1 = w1 + H;
  const S* w2 = b1 + H;
  const S* b2 = w2 + H * H;
  const S* w3 = b2 + H;
  const S* b3 = w3 + H;
  std::array<S, H> h1;
  for (int i = 0; i < H; ++i) h1[i] = tanh(w1[i] * r + b1[i]);
  S out = b3[0];
  for (int i = 0; i < H; ++i) {
    S z = b2[i];
    for (int j = 0; j < H; ++j) z = z + w2[i * H + j] * h1[j];
    out = out + w3[i] * tanh(z);
  }
  return out;
}

}  // namespace spinn
