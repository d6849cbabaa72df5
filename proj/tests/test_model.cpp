#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "spinn/model.hpp"
#include "support.hpp"

using namespace spinn;
using doctest::Approx;

namespace {

ModelParams one_d(std::vector<double> X, std::vector<double> h, std::vector<double> U,
                  KernelType k = KernelType::Gaussian, Variant v = Variant::Plain) {
  ModelParams m;
  m.free_X = std::move(X);
  m.h = std::move(h);
  m.U = std::move(U);
  m.kernel.type = k;
  m.variant = v;
  return m;
}

double at(const ModelParams& m, double x) { return m.variant == Variant::Pou ? eval_pou(m, std::span<const double>(&x, 1)) : eval_plain(m, std::span<const double>(&x, 1)); }

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("plain evaluation") {
    CHECK(at(one_d({0.0}, {1.0}, {1.0}), 0.0) == 1.0);
    const double a = 0.3, h = 0.2, U = 1.7;
    CHECK(at(one_d({-a, a}, {h, h}, {U, U}), 0.0) == Approx(2 * U * std::exp(-a * a / (h * h))).epsilon(1e-15));

    Rng rng(1);
    ModelParams z = init_nodes(Geometry::rectangle(0, 1, 0, 1), 25, 3, std::vector<std::size_t>{0, 1, 2, 3},
                               KernelType::SoftplusHat, Variant::Plain, rng);
    for (int i = 0; i < 20; ++i) {
      const std::vector<double> x{rng.uniform(), rng.uniform()};
      CHECK(eval_plain(z, x) == 0.0);
    }
  }

  TEST_CASE("partition of unity") {
    CHECK(at(one_d({0.3}, {0.1}, {4.2}, KernelType::Gaussian, Variant::Pou), 0.77) == Approx(4.2).epsilon(1e-15));
    const ModelParams far = one_d({0.0, 1.0}, {0.05, 0.05}, {0.0, 1.0}, KernelType::Gaussian, Variant::Pou);
    CHECK(std::abs(at(far, 0.0)) <= 1e-6);
    // All kernels vanish far from narrow nodes.
    const ModelParams dead = one_d({0.0}, {1e-3}, {1.0}, KernelType::Gaussian, Variant::Pou);
    CHECK_THROWS_AS(at(dead, 0.9), EvalError);
  }

  TEST_CASE("partition of unity reproduces constants") {
    Rng rng(21);
    for (KernelType k : {KernelType::Gaussian, KernelType::SoftplusHat}) {
      for (int layout = 0; layout < 3; ++layout) {
        ModelParams m = init_nodes(Geometry::rectangle(0, 1, 0, 1), 16, 2, std::vector<std::size_t>{0, 1, 2, 3}, k,
                                   Variant::Pou, rng);
        for (double& x : m.free_X) x += 0.05 * rng.uniform(-1, 1);
        for (double& h : m.h) h *= rng.uniform(0.7, 1.5);
        for (double c : {-3.0, 0.0, 7.0}) {
          std::fill(m.U.begin(), m.U.end(), c);
          for (int i = 0; i < 200; ++i) {
            const std::vector<double> x{rng.uniform(), rng.uniform()};
            CHECK(std::abs(eval_pou(m, x) - c) <= 1e-12);
          }
        }
      }
    }
  }

  TEST_CASE("constant POU model has vanishing derivatives") {
    Rng rng(2);
    ModelParams m = init_nodes(Geometry::interval(0, 1), 6, 1, std::vector<std::size_t>{0, 1},
                               KernelType::Gaussian, Variant::Pou, rng);
    std::fill(m.U.begin(), m.U.end(), 7.0);
    for (double x : {0.13, 0.5, 0.81}) {
      const SpatialDerivs d = spatial_derivs(Model{m}, std::span<const double>(&x, 1), 0);
      CHECK(d.u == Approx(7.0).epsilon(1e-14));
      CHECK(std::abs(d.du) <= 1e-10);
      CHECK(std::abs(d.d2u) <= 1e-8);
    }
  }

  TEST_CASE("fourier evaluation") {
    FourierParams f = FourierParams::zeros(0.0, 1.0, 3);
    f.a0 = 5.0;
    CHECK(eval_fourier(f, 0.123) == 5.0);
    f.a0 = 0.0;
    f.b[0] = 1.0;
    CHECK(eval_fourier(f, 0.25) == Approx(1.0).epsilon(1e-15));
    f.a = {0.3, -0.2, 0.1};
    f.b = {1.0, 0.5, -0.7};
    for (double x : {-0.4, 0.1, 0.66}) CHECK(std::abs(eval_fourier(f, x) - eval_fourier(f, x + 1.0)) <= 1e-12);
  }

  TEST_CASE("node initialization") {
    Rng rng(0);
    const ModelParams m = init_nodes(Geometry::interval(0, 1), 3, 1, std::vector<std::size_t>{0, 1},
                                     KernelType::Gaussian, Variant::Plain, rng);
    REQUIRE(m.free_X.size() == 3);
    CHECK(m.free_X[0] == Approx(0.25));
    CHECK(m.free_X[1] == Approx(0.5));
    CHECK(m.free_X[2] == Approx(0.75));
    CHECK(m.fixed_X == std::vector<double>{0.0, 1.0});
    for (double h : m.h) CHECK(h == Approx(0.25));
    for (double u : m.U) CHECK(u == 0.0);

    const ModelParams sq = init_nodes(Geometry::rectangle(0, 1, 0, 1), 100, 0, {}, KernelType::SoftplusHat,
                                      Variant::Plain, rng);
    CHECK(sq.n_free() == 100);
    for (double x : sq.free_X) CHECK((x > 0.0 && x < 1.0));
    for (double h : sq.h) CHECK(h == Approx(1.0 / 11.0));

    Rng a(5), b(5);
    CHECK(init_nodes(Geometry::interval(0, 1), 4, 1, std::vector<std::size_t>{0, 1}, KernelType::Mlp,
                     Variant::Plain, a) ==
          init_nodes(Geometry::interval(0, 1), 4, 1, std::vector<std::size_t>{0, 1}, KernelType::Mlp,
                     Variant::Plain, b));
  }

  TEST_CASE("single node POU is its weight") {
    const ModelParams m = one_d({0.4}, {0.3}, {-2.5}, KernelType::SoftplusHat, Variant::Pou);
    for (double x : {0.0, 0.4, 0.93}) CHECK(at(m, x) == -2.5);
  }

  TEST_CASE("hyper-dual value slot equals real evaluation") {
    for (const testing::GradientCase& c : testing::gradient_cases()) {
      INFO(c.label);
      const auto theta = pack(c.model);
      const std::vector<HyperDual> th(theta.begin(), theta.end());
      for (std::size_t i = 0; i < std::min<std::size_t>(c.samples.interior.size(), 10); ++i) {
        const auto p = c.samples.interior[i];
        for (int axis = 0; axis < c.samples.interior.dim(); ++axis) {
          CHECK(spatial_derivs(c.model, p, axis).u == eval(c.model, p));
        }
      }
    }
  }

  TEST_CASE("fused tape node equals the generic recording") {
    for (KernelType k : {KernelType::Gaussian, KernelType::SoftplusHat, KernelType::ReluHat}) {
      for (Variant v : {Variant::Plain, Variant::Pou}) {
        const char* problem = k == KernelType::ReluHat ? "1d-A" : "2d-A";
        testing::GradientCase c = testing::make_case("fused", problem, k, 9, 16, v);
        const auto theta = pack(c.model);
        for (std::size_t i = 0; i < c.samples.interior.size(); ++i) {
          const auto x = c.samples.interior[i];
          for (int axis = -1; axis < c.samples.interior.dim(); ++axis) {
            Tape t1, t2;
            const auto l1 = t1.leaves(theta), l2 = t2.leaves(theta);
            const Var a = record_eval(c.model, t1, l1, x, axis);
            const Var b = record_eval_generic(c.model, t2, l2, x, axis);
            CHECK(a.value() == b.value());
            CHECK(a.hd().d12 == Approx(b.hd().d12).epsilon(1e-12));
            t1.backward(t1.slot(a, Slot::D12));
            t2.backward(t2.slot(b, Slot::D12));
            const auto g1 = t1.gradient(l1), g2 = t2.gradient(l2);
            double scale = 1.0, gap = 0.0;
            for (std::size_t j = 0; j < g1.size(); ++j) {
              scale = std::max(scale, std::abs(g2[j]));
              gap = std::max(gap, std::abs(g1[j] - g2[j]));
            }
            INFO(kernel_name(k) << " pou=" << (v == Variant::Pou) << " axis=" << axis << " i=" << i);
            CHECK(gap <= 1e-10 * scale);
          }
        }
      }
    }
  }

  TEST_CASE("width projection") {
    ModelParams m = one_d({0.1, 0.2}, {1e-5, 0.3}, {1, 1});
    m.project();
    CHECK(m.h[0] == kMinWidth);
    CHECK(m.h[1] == 0.3);
  }

  TEST_CASE("pack round trip and counts") {
    testing::GradientCase c = testing::make_case("mlp", "1d-A", KernelType::Mlp, 4, 10);
    const auto& m = std::get<ModelParams>(c.model);
    CHECK(param_count(c.model) == m.n_free() + 2 * m.n_nodes() + kMlpParamCount);
    Model copy = c.model;
    std::vector<double> th = pack(c.model);
    for (double& v : th) v += 0.01;
    unpack(copy, th);
    CHECK(pack(copy) == th);
    ModelParams bad = m;
    bad.U.pop_back();
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    CHECK(linear_coefficients(c.model).size() == m.n_nodes());
    CHECK(linear_coefficients(Model{FourierParams::zeros(0, 1, 3)}).size() == 7);
  }

  TEST_CASE("json round trip") {
    for (const testing::GradientCase& c : testing::gradient_cases()) {
      INFO(c.label);
      const Model back = model_from_json(nlohmann::json::parse(to_json(c.model).dump()));
      CHECK(back == c.model);
    }
  }
}
