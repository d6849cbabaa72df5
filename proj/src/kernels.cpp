#include "spinn/kernels.hpp"

#include <sstream>

#include "spinn/errors.hpp"

namespace spinn {

std::string_view kernel_name(KernelType type) {
  switch (type) {
    case KernelType::Gaussian: return "gaussian";
    case KernelType::SoftplusHat: return "softplus-hat";
    case KernelType::ReluHat: return "relu-hat";
    case KernelType::Mlp: return "mlp";
  }
  return "?";
}

KernelType parse_kernel(std::string_view name) {
  for (KernelType t : {KernelType::Gaussian, KernelType::SoftplusHat, KernelType::ReluHat, KernelType::Mlp}) {
    if (kernel_name(t) == name) return t;
  }
  throw ConfigError("unknown kernel '" + std::string(name) + "' (expected gaussian, softplus-hat, relu-hat or mlp)");
}

std::vector<double> mlp_init(Rng& rng) {
  constexpr int H = kMlpHidden;
  std::vector<double> p;
  p.reserve(kMlpParamCount);
  const auto fill = [&](int count, int fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (int i = 0; i < count; ++i) p.push_back(rng.uniform(-bound, bound));
  };
  fill(H, 1);      // W1
  fill(H, 1);      // b1
  fill(H * H, H);  // W2
  fill(H, H);      // b2
  fill(H, H);      // W3
  fill(1, H);      // b3
  return p;
}

KernelId make_kernel(KernelType type, Rng& rng) {
  KernelId k{type, {}};
  if (type == KernelType::Mlp) k.mlp_params = mlp_init(rng);
  return k;
}

double softplus_hat_as_network(std::span<const double> y) {
  const std::size_t d = y.size();
  // Layer 1: each coordinate feeds two neurons with weights (1, -1), bias 0.
  std::vector<double> hidden(2 * d);
  for (std::size_t k = 0; k < d; ++k) {
    hidden[2 * k] = softplus(1.0 * y[k] + 0.0);
    hidden[2 * k + 1] = softplus(-1.0 * y[k] + 0.0);
  }
  // Layer 2: one neuron, all weights -1, bias 1 + 2 d log 2.
  const double bias = 1.0 + 2.0 * static_cast<double>(d) * std::numbers::ln2;
  double z = 0.0;
  for (double h : hidden) z += -1.0 * h;
  const double out = softplus(bias + z);
  return out / softplus(1.0);
}

double relu_hat(double x, double xm, double xc, double xp) {
  if (!(xm < xc && xc < xp)) {
    std::ostringstream msg;
    msg << "relu_hat: knots must satisfy xm < xc < xp, got (" << xm << ", " << xc << ", " << xp << ")";
    throw ConfigError(msg.str());
  }
  const double h_left = xc - xm;
  const double h_right = xp - xc;
  return relu(x - xm) / h_left - (1.0 / h_left + 1.0 / h_right) * relu(x - xc) + relu(x - xp) / h_right;
}

}  // namespace spinn
