#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "spinn/kernels.hpp"
#include "spinn/tape.hpp"
#include "support.hpp"

using namespace spinn;
using doctest::Approx;

namespace {

// Largest |softplus_hat - network form| on an m^d grid over [-5, 5]^d.
double hat_network_gap(int d, int m) {
  double worst = 0.0;
  std::vector<double> y(static_cast<std::size_t>(d));
  const int total = d == 1 ? m : m * m;
  for (int i = 0; i < total; ++i) {
    y[0] = -5.0 + 10.0 * (i % m) / (m - 1);
    if (d == 2) y[1] = -5.0 + 10.0 * (i / m) / (m - 1);
    worst = std::max(worst, std::abs(softplus_hat<double>(y) - softplus_hat_as_network(y)));
  }
  return worst;
}

double interpolate(const std::vector<double>& knots, const std::vector<double>& values, double x) {
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    if (x >= knots[i] && x <= knots[i + 1]) {
      const double t = (x - knots[i]) / (knots[i + 1] - knots[i]);
      return (1.0 - t) * values[i] + t * values[i + 1];
    }
  }
  return 0.0;
}

}  // namespace

TEST_SUITE("kernels") {
  TEST_CASE("gaussian") {
    CHECK(gaussian(0.0) == 1.0);
    CHECK(gaussian(1.0) == Approx(0.367879441171442).epsilon(1e-14));
    // q = x^2 / h^2 with x seeded: second derivative at the centre is -2 / h^2.
    const double h = 0.4;
    const HyperDual x = hd_lift(0.0, 1, 1);
    const HyperDual y = x * (1.0 / h);
    CHECK(gaussian(y * y).d12 == Approx(-2.0 / (h * h)).epsilon(1e-14));
  }

  TEST_CASE("softplus asymptotes") {
    CHECK(softplus(0.0) == Approx(std::numbers::ln2).epsilon(1e-15));
    CHECK(std::abs(softplus(50.0) - 50.0) <= 1e-12);
    CHECK(softplus(-50.0) == Approx(std::exp(-50.0)).epsilon(1e-12));
    CHECK(std::isfinite(softplus(1000.0)));
    CHECK(softplus(-1000.0) >= 0.0);
  }

  TEST_CASE("softplus hat peak, decay and symmetry") {
    for (int d = 1; d <= 3; ++d) {
      const std::vector<double> zero(static_cast<std::size_t>(d), 0.0);
      CHECK(softplus_hat<double>(zero) == Approx(1.0).epsilon(1e-15));
    }
    double prev = 1.0;
    for (double t = 2.0; t <= 30.0; t += 0.5) {
      const double a = softplus_hat<double>(std::vector<double>{t});
      const double b = softplus_hat<double>(std::vector<double>{-t});
      CHECK(a < prev);
      CHECK(a > 0.0);
      CHECK(a == b);
      prev = a;
    }
    CHECK(prev < 1e-10);
    Rng rng(9);
    for (int i = 0; i < 100; ++i) {
      const double u = rng.uniform(-4, 4), v = rng.uniform(-4, 4);
      CHECK(softplus_hat<double>(std::vector<double>{u, v}) == softplus_hat<double>(std::vector<double>{-u, -v}));
    }
  }

  TEST_CASE("softplus hat equals its two-layer network") {
    const std::vector<double> zero{0.0};
    CHECK(std::abs(softplus_hat_as_network(zero) - 1.0) <= 1e-14);
    for (const auto& y : {std::vector<double>{0.7, -1.3}, std::vector<double>{5.0}}) {
      CHECK(std::abs(softplus_hat<double>(y) - softplus_hat_as_network(y)) <= 1e-14);
    }
    CHECK(hat_network_gap(1, 1000) <= 1e-13);
    CHECK(hat_network_gap(2, 32) <= 1e-13);
  }

  TEST_CASE("relu hat") {
    CHECK(relu_hat(0.4, 0.1, 0.4, 0.5) == Approx(1.0).epsilon(1e-15));
    CHECK(relu_hat(0.1, 0.1, 0.4, 0.5) == 0.0);
    CHECK(relu_hat(0.5, 0.1, 0.4, 0.5) == Approx(0.0).scale(1.0).epsilon(1e-15));
    CHECK(relu_hat(0.25, 0.1, 0.4, 0.5) == Approx(0.5).epsilon(1e-14));
    CHECK(relu_hat(0.9, 0.1, 0.4, 0.5) == Approx(0.0).scale(1.0).epsilon(1e-15));
    CHECK_THROWS_AS(relu_hat(0.2, 0.4, 0.1, 0.5), ConfigError);
    CHECK_THROWS_AS(relu_hat(0.2, 0.1, 0.4, 0.4), ConfigError);
  }

  TEST_CASE("relu hat expansion is piecewise-linear interpolation") {
    Rng rng(4);
    std::vector<double> knots{0.0};
    for (int i = 0; i < 12; ++i) knots.push_back(knots.back() + rng.uniform(0.02, 0.15));
    std::vector<double> values(knots.size());
    for (double& v : values) v = rng.uniform(-2, 2);
    const double lo = knots.front(), hi = knots.back();
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
      const double x = lo + (hi - lo) * k / 999.0;
      double s = 0.0;
      for (std::size_t i = 0; i < knots.size(); ++i) {
        // End nodes get a mirrored outer knot so that their hats reach the boundary.
        const double xm = i == 0 ? 2 * knots[0] - knots[1] : knots[i - 1];
        const double xp = i + 1 == knots.size() ? 2 * knots[i] - knots[i - 1] : knots[i + 1];
        s += values[i] * relu_hat(x, xm, knots[i], xp);
      }
      worst = std::max(worst, std::abs(s - interpolate(knots, values, x)));
    }
    CHECK(worst <= 1e-12);
  }

  TEST_CASE("mlp kernel") {
    std::vector<double> p(kMlpParamCount, 0.0);
    p.back() = 0.37;
    for (double r : {0.0, 0.5, 3.0}) CHECK(mlp_kernel<double>(r, p) == 0.37);

    Rng rng(12);
    const std::vector<double> w = mlp_init(rng);
    REQUIRE(w.size() == kMlpParamCount);
    CHECK(mlp_kernel<double>(0.0, w) == mlp_kernel<double>(0.0, w));
    for (std::size_t i = 0; i < 5; ++i) CHECK(std::abs(w[i]) <= 1.0);
    for (std::size_t i = 10; i < 35; ++i) CHECK(std::abs(w[i]) <= 1.0 / std::sqrt(5.0));

    Tape t;
    const auto leaves = t.leaves(w);
    const Var r = t.constant(HyperDual(0.5));
    t.backward(mlp_kernel<Var>(r, leaves));
    const auto g = t.gradient(leaves);
    const auto f = [](const std::vector<double>& th) { return mlp_kernel<double>(0.5, th); };
    CHECK(testing::max_relative_deviation(g, testing::fd_gradient(f, w)) <= 1e-5);
  }

  TEST_CASE("smooth kernels are differentiable on any real input") {
    for (double x : {-1e3, -30.0, -1.0, 0.0, 1e-8, 2.0, 40.0, 1e3}) {
      const HyperDual y = hd_lift(x, 1, 1);
      const HyperDual g = gaussian(y * y);
      const HyperDual s = softplus_hat<HyperDual>(std::vector<HyperDual>{y});
      CHECK(std::isfinite(g.d12));
      CHECK(std::isfinite(s.d12));
    }
  }

  TEST_CASE("kernel names") {
    for (const char* n : {"gaussian", "softplus-hat", "relu-hat", "mlp"}) CHECK(kernel_name(parse_kernel(n)) == n);
    CHECK_THROWS_AS(parse_kernel("wavelet"), ConfigError);
  }
}
