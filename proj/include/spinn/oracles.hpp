#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace spinn {

// Node values on a uniform grid lo = x_0 < ... < x_n = hi.
struct Grid1D {
  double lo = 0.0;
  double hi = 1.0;
  std::vector<double> u;

  std::size_t cells() const { return u.empty() ? 0 : u.size() - 1; }
  double spacing() const { return (hi - lo) / static_cast<double>(cells()); }
  double x(std::size_t i) const { return lo + static_cast<double>(i) * spacing(); }
  // Piecewise-linear interpolation, clamped to [lo, hi].
  double interpolate(double x) const;
};

// Node values on a uniform (n+1) x (n+1) grid, row-major in y.
struct Grid2D {
  double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
  std::size_t n = 0;
  std::vector<double> u;

  double at(std::size_t i, std::size_t j) const { return u[j * (n + 1) + i]; }
  double x(std::size_t i) const { return x0 + (x1 - x0) * static_cast<double>(i) / static_cast<double>(n); }
  double y(std::size_t j) const { return y0 + (y1 - y0) * static_cast<double>(j) / static_cast<double>(n); }
  // Bilinear interpolation, clamped to the box.
  double interpolate(double x, double y) const;
};

// Cell averages of a finite-volume solution on [lo, hi].
struct CellGrid {
  double lo = 0.0;
  double hi = 1.0;
  std::vector<double> u;

  double dx() const { return (hi - lo) / static_cast<double>(u.size()); }
  double center(std::size_t i) const { return lo + (static_cast<double>(i) + 0.5) * dx(); }
  // Linear interpolation between cell centers; constant in the outer half cells.
  double interpolate(double x) const;
};

// Second-order central differences with a tridiagonal direct solve for
// 1d-A, 1d-B (one-sided second-order Neumann end) and 1d-C. Throws
// ConfigError for n < 16 or an unknown problem, SolverError on a zero pivot.
Grid1D ode_fd_solve(const std::string& problem, std::size_t n);

struct CgReport {
  std::size_t iterations = 0;
  double residual = 0.0;  // final ||r|| / ||b||
};

// Five-point Laplacian on an n x n cell grid for 2d-A (unit square) or 2d-B
// (slit square, slit nodes pinned to zero), solved by conjugate gradients to
// relative residual `tol`. `forcing` replaces the problem's right-hand side f
// in -lap u = f when given. Throws ConfigError for n < 32 or odd n on the slit
// square, SolverError without convergence in 1e5 iterations.
Grid2D poisson_fd_solve(const std::string& problem, std::size_t n, double tol = 1e-10,
                        const std::function<double(double, double)>& forcing = {}, CgReport* report = nullptr);

// Godunov scheme with the exact Riemann solver for u_t + (u^2/2)_x = 0 on
// [lo, hi] with zero-valued ghost cells. Returns one CellGrid per requested
// time (sorted ascending, each <= T hit exactly). Throws ConfigError when
// cfl is outside (0, 0.9].
struct BurgersSnapshot {
  double t = 0.0;
  CellGrid cells;
};
std::vector<BurgersSnapshot> burgers_fv_solve(const std::function<double(double)>& u0, double lo, double hi,
                                              std::size_t n, double T, double cfl, std::vector<double> times = {});

// Godunov flux of the Burgers equation.
double burgers_godunov_flux(double ul, double ur);

// Reference cache. Files live in `dir` (SPINN_REF_DIR, else "references")
// as <problem>_<n>.csv. Supported: 1d-A, 1d-B, 1d-C, 2d-A, 2d-B, burgers.
std::string reference_dir();
std::string reference_path(const std::string& dir, const std::string& problem, std::size_t n);
std::vector<std::string> reference_problems();
std::size_t default_reference_resolution(const std::string& problem);
// Computes and writes the reference unless the file already exists.
// Returns true when a file was written.
bool ensure_reference(const std::string& dir, const std::string& problem, std::size_t n);

// Reference values at arbitrary points, read from the cache (computed first
// when missing and `compute_missing`). Points are (x) for 1-D problems,
// (x, y) for 2-D, and (x, t) for burgers, which is only tabulated at its final
// time. Throws ConfigError naming the command that creates a missing file.
std::vector<double> reference_values(const std::string& dir, const std::string& problem, std::size_t n,
                                     const std::vector<std::vector<double>>& points, bool compute_missing = true);

}  // namespace spinn
