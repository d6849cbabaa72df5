#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "doctest.h"
#include "spinn/oracles.hpp"
#include "spinn/problems.hpp"
#include "support.hpp"

using namespace spinn;
using std::numbers::pi;

namespace {

double max_error_1d(const Grid1D& g, const ProblemSpec& p) {
  double e = 0.0;
  for (std::size_t i = 0; i < g.u.size(); ++i) {
    const std::vector<double> x{g.x(i)};
    e = std::max(e, std::abs(g.u[i] - p.exact(x)));
  }
  return e;
}

double total_variation(const CellGrid& c) {
  double tv = 0.0;
  for (std::size_t i = 1; i < c.u.size(); ++i) tv += std::abs(c.u[i] - c.u[i - 1]);
  return tv;
}

double sine(double x) { return std::sin(2 * pi * x); }

// Max difference between two Burgers solutions at the coarse cell centers
// away from x = 0.5.
double smooth_gap(const CellGrid& coarse, const CellGrid& fine) {
  double e = 0.0;
  for (std::size_t i = 0; i < coarse.u.size(); ++i) {
    const double x = coarse.center(i);
    if (std::abs(x - 0.5) < 0.2 || x < 0.05 || x > 0.95) continue;
    e = std::max(e, std::abs(coarse.u[i] - fine.interpolate(x)));
  }
  return e;
}

}  // namespace

TEST_SUITE("oracles") {
  TEST_CASE("ODE oracles against exact solutions") {
    CHECK(max_error_1d(ode_fd_solve("1d-A", 1000), make_problem("1d-A")) <= 1e-6);
    const ProblemSpec b = make_problem("1d-B");
    CHECK(max_error_1d(ode_fd_solve("1d-B", 1000), b) <= 1e-4);
    const double e1 = max_error_1d(ode_fd_solve("1d-B", 64), b);
    const double e2 = max_error_1d(ode_fd_solve("1d-B", 128), b);
    CHECK(std::log2(e1 / e2) >= 1.8);
  }

  TEST_CASE("1d-C converges at second order") {
    const double a = ode_fd_solve("1d-C", 100).interpolate(0.5);
    const double b = ode_fd_solve("1d-C", 200).interpolate(0.5);
    const double c = ode_fd_solve("1d-C", 400).interpolate(0.5);
    const double ratio = (a - b) / (b - c);
    CHECK(ratio == doctest::Approx(4.0).epsilon(0.1));
  }

  TEST_CASE("ODE oracle errors") {
    CHECK_THROWS_AS(ode_fd_solve("1d-A", 8), ConfigError);
    CHECK_THROWS_AS(ode_fd_solve("2d-A", 100), ConfigError);
  }

  TEST_CASE("Poisson oracle") {
    const ProblemSpec sq = make_problem("2d-A");
    CgReport rep;
    const Grid2D g = poisson_fd_solve("2d-A", 256, 1e-10, {}, &rep);
    CHECK(rep.residual <= 1e-10);
    double e = 0.0;
    for (std::size_t j = 0; j <= g.n; ++j) {
      for (std::size_t i = 0; i <= g.n; ++i) {
        const std::vector<double> x{g.x(i), g.y(j)};
        e = std::max(e, std::abs(g.at(i, j) - sq.exact(x)));
      }
    }
    CHECK(e <= 5e-4);

    const Grid2D zero = poisson_fd_solve("2d-A", 32, 1e-10, [](double, double) { return 0.0; });
    for (double u : zero.u) CHECK(u == 0.0);

    const Grid2D slit = poisson_fd_solve("2d-B", 64);
    double asym = 0.0, peak = 0.0;
    for (std::size_t j = 0; j <= slit.n; ++j) {
      for (std::size_t i = 0; i <= slit.n; ++i) {
        asym = std::max(asym, std::abs(slit.at(i, j) - slit.at(i, slit.n - j)));
        peak = std::max(peak, slit.at(i, j));
      }
    }
    CHECK(asym <= 1e-8);
    CHECK(peak > 0.0);
    // Slit nodes are pinned.
    for (std::size_t i = slit.n / 2; i < slit.n; ++i) CHECK(slit.at(i, slit.n / 2) == 0.0);

    CHECK_THROWS_AS(poisson_fd_solve("2d-A", 16), ConfigError);
    CHECK_THROWS_AS(poisson_fd_solve("2d-B", 33), ConfigError);
  }

  TEST_CASE("Godunov flux") {
    CHECK(burgers_godunov_flux(1.0, 1.0) == 0.5);
    CHECK(burgers_godunov_flux(-1.0, 1.0) == 0.0);   // transonic rarefaction
    CHECK(burgers_godunov_flux(1.0, -1.0) == 0.5);   // stationary shock
    CHECK(burgers_godunov_flux(-2.0, -1.0) == 0.5);  // left-moving
  }

  TEST_CASE("Burgers finite volumes") {
    // A constant state away from the ends is untouched for short times.
    const auto flat = burgers_fv_solve([](double) { return 0.7; }, 0.0, 1.0, 100, 0.1, 0.5);
    const CellGrid& f = flat.back().cells;
    for (std::size_t i = 20; i < 100; ++i) CHECK(f.u[i] == doctest::Approx(0.7).epsilon(1e-14));

    const auto snaps = burgers_fv_solve(sine, 0.0, 1.0, 400, 0.3, 0.9, {0.05, 0.1, 0.15, 0.2, 0.25, 0.3});
    REQUIRE(snaps.size() == 6);
    double tv = 4.0;  // total variation of sin 2 pi x on [0, 1]
    for (const BurgersSnapshot& s : snaps) {
      const double v = total_variation(s.cells);
      CHECK(v <= tv + 1e-12);
      tv = v;
    }
    CHECK(snaps.back().t == 0.3);

    const CellGrid& c = snaps.back().cells;
    std::size_t jump = 0;
    for (std::size_t i = 1; i < c.u.size(); ++i) {
      if (std::abs(c.u[i] - c.u[i - 1]) > std::abs(c.u[jump + 1] - c.u[jump])) jump = i - 1;
    }
    CHECK(std::abs(0.5 * (c.center(jump) + c.center(jump + 1)) - 0.5) <= c.dx());

    CHECK_THROWS_AS(burgers_fv_solve(sine, 0.0, 1.0, 100, 0.1, 0.95), ConfigError);
    CHECK_THROWS_AS(burgers_fv_solve(sine, 0.0, 1.0, 100, 0.1, 0.0), ConfigError);
  }

  TEST_CASE("Burgers converges on smooth regions") {
    std::vector<CellGrid> sols;
    for (std::size_t n : {200, 400, 800}) sols.push_back(burgers_fv_solve(sine, 0.0, 1.0, n, 0.1, 0.9).back().cells);
    const double e1 = smooth_gap(sols[0], sols[1]), e2 = smooth_gap(sols[1], sols[2]);
    CHECK(std::log2(e1 / e2) >= 0.8);
  }

  TEST_CASE("reference cache") {
    testing::TempDir dir("refcache");
    const std::string d = dir.path.string();
    CHECK(ensure_reference(d, "1d-A", 200));
    const auto path = reference_path(d, "1d-A", 200);
    REQUIRE(std::filesystem::exists(path));
    const auto stamp = std::filesystem::last_write_time(path);
    CHECK_FALSE(ensure_reference(d, "1d-A", 200));
    CHECK(std::filesystem::last_write_time(path) == stamp);

    const auto v = reference_values(d, "1d-A", 200, {{0.5}, {0.25}});
    CHECK(v[0] == doctest::Approx(0.125).epsilon(1e-9));
    CHECK(v[1] == doctest::Approx(0.09375).epsilon(1e-9));

    try {
      reference_values(d, "1d-B", 200, {{0.5}}, false);
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("spinn reference --problem 1d-B") != std::string::npos);
    }
    CHECK_THROWS_AS(ensure_reference(d, "heat", 100), ConfigError);

    const auto g = reference_values(d, "2d-A", 64, {{0.125, 0.125}});
    CHECK(g[0] == doctest::Approx(std::sqrt(0.5)).epsilon(1e-2));
  }
}
