#include "spinn/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "spinn/errors.hpp"

namespace spinn {

namespace {

constexpr double kPi = std::numbers::pi;

// u'' + c u = r(x) on [0, 1].
struct OdeData {
  double c = 0.0;
  std::function<double(double)> r;
  bool neumann_right = false;
  double right = 0.0;  // u(1) or u'(1)
};

OdeData ode_data(const std::string& problem) {
  if (problem == "1d-A") return {0.0, [](double) { return -1.0; }, false, 0.0};
  if (problem == "1d-B") return {kPi * kPi, [](double x) { return kPi * std::sin(kPi * x); }, true, 0.5};
  if (problem == "1d-C") {
    return {0.0,
            [](double x) {
              constexpr double K = 0.01;
              const double s = x - 1.0 / 3.0;
              return -x * (std::exp(-s * s / K) - std::exp(-4.0 / (9.0 * K)));
            },
            false, 0.0};
  }
  throw ConfigError("ode_fd_solve: no ODE oracle for '" + problem + "' (valid: 1d-A 1d-B 1d-C)");
}

// Thomas algorithm; a, b, c are sub-, main and super-diagonals.
std::vector<double> solve_tridiagonal(std::vector<double> a, std::vector<double> b, std::vector<double> c,
                                      std::vector<double> d) {
  const std::size_t n = b.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) {
      const double m = a[i] / b[i - 1];
      b[i] -= m * c[i - 1];
      d[i] -= m * d[i - 1];
    }
    if (b[i] == 0.0 || !std::isfinite(b[i])) throw SolverError("tridiagonal solve: singular system");
  }
  std::vector<double> x(n);
  x[n - 1] = d[n - 1] / b[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) x[i] = (d[i] - c[i] * x[i + 1]) / b[i];
  return x;
}

}  // namespace

double Grid1D::interpolate(double x) const {
  const std::size_t n = cells();
  const double s = std::clamp((x - lo) / spacing(), 0.0, static_cast<double>(n));
  const auto i = std::min(static_cast<std::size_t>(s), n - 1);
  const double w = s - static_cast<double>(i);
  return (1.0 - w) * u[i] + w * u[i + 1];
}

double Grid2D::interpolate(double x, double y) const {
  const double nn = static_cast<double>(n);
  const double sx = std::clamp((x - x0) / (x1 - x0) * nn, 0.0, nn);
  const double sy = std::clamp((y - y0) / (y1 - y0) * nn, 0.0, nn);
  const auto i = std::min(static_cast<std::size_t>(sx), n - 1);
  const auto j = std::min(static_cast<std::size_t>(sy), n - 1);
  const double wx = sx - static_cast<double>(i), wy = sy - static_cast<double>(j);
  return (1.0 - wx) * (1.0 - wy) * at(i, j) + wx * (1.0 - wy) * at(i + 1, j) + (1.0 - wx) * wy * at(i, j + 1) +
         wx * wy * at(i + 1, j + 1);
}

double CellGrid::interpolate(double x) const {
  const double s = (x - lo) / dx() - 0.5;
  if (s <= 0.0) return u.front();
  const double last = static_cast<double>(u.size() - 1);
  if (s >= last) return u.back();
  const auto i = static_cast<std::size_t>(s);
  const double w = s - static_cast<double>(i);
  return (1.0 - w) * u[i] + w * u[i + 1];
}

Grid1D ode_fd_solve(const std::string& problem, std::size_t n) {
  if (n < 16) throw ConfigError("ode_fd_solve: need n >= 16 cells");
  const OdeData p = ode_data(problem);
  const double h = 1.0 / static_cast<double>(n);
  const double h2 = h * h;
  // Unknowns u_1 .. u_m; m = n - 1 with Dirichlet at both ends, n with Neumann on the right.
  const std::size_t m = p.neumann_right ? n : n - 1;
  std::vector<double> a(m, 1.0), b(m, -2.0 + p.c * h2), c(m, 1.0), d(m);
  for (std::size_t k = 0; k < m; ++k) d[k] = h2 * p.r(static_cast<double>(k + 1) * h);
  a[0] = 0.0;
  c[m - 1] = 0.0;
  if (!p.neumann_right) {
    d[m - 1] -= p.right;
  } else {
    // (3 u_n - 4 u_{n-1} + u_{n-2}) / (2h) = g, with u_{n-2} eliminated via the
    // interior equation at n-1: u_{n-2} = h^2 r_{n-1} - (c h^2 - 2) u_{n-1} - u_n.
    const double r1 = p.r(static_cast<double>(n - 1) * h);
    a[m - 1] = -4.0 - (p.c * h2 - 2.0);
    b[m - 1] = 3.0 - 1.0;
    d[m - 1] = 2.0 * h * p.right - h2 * r1;
  }
  const auto x = solve_tridiagonal(a, b, c, d);
  Grid1D g{0.0, 1.0, std::vector<double>(n + 1, 0.0)};
  for (std::size_t k = 0; k < m; ++k) g.u[k + 1] = x[k];
  if (!p.neumann_right) g.u[n] = p.right;
  return g;
}

Grid2D poisson_fd_solve(const std::string& problem, std::size_t n, double tol,
                        const std::function<double(double, double)>& forcing, CgReport* report) {
  if (n < 32) throw ConfigError("poisson_fd_solve: need n >= 32");
  Grid2D g;
  std::function<double(double, double)> f = forcing;
  bool slit = false;
  if (problem == "2d-A") {
    if (!f) f = [](double x, double y) { return 20.0 * kPi * kPi * std::sin(2.0 * kPi * x) * std::sin(4.0 * kPi * y); };
  } else if (problem == "2d-B") {
    if (n % 2 != 0) throw ConfigError("poisson_fd_solve: slit square needs even n");
    g.x0 = g.y0 = -1.0;
    slit = true;
    if (!f) f = [](double, double) { return 1.0; };
  } else {
    throw ConfigError("poisson_fd_solve: no Poisson oracle for '" + problem + "' (valid: 2d-A 2d-B)");
  }
  g.n = n;
  const std::size_t N = n + 1;
  g.u.assign(N * N, 0.0);
  const double h = (g.x1 - g.x0) / static_cast<double>(n);
  // Unknown mask: interior nodes that are not pinned to the slit.
  std::vector<char> free(N * N, 0);
  for (std::size_t j = 1; j < n; ++j) {
    for (std::size_t i = 1; i < n; ++i) free[j * N + i] = !(slit && j == n / 2 && g.x(i) >= 0.0);
  }
  const auto apply = [&](const std::vector<double>& v, std::vector<double>& out) {
    for (std::size_t j = 1; j < n; ++j) {
      for (std::size_t i = 1; i < n; ++i) {
        const std::size_t k = j * N + i;
        if (!free[k]) continue;
        out[k] = (4.0 * v[k] - v[k - 1] - v[k + 1] - v[k - N] - v[k + N]) / (h * h);
      }
    }
  };
  std::vector<double> b(N * N, 0.0), r(N * N, 0.0), p(N * N, 0.0), Ap(N * N, 0.0);
  for (std::size_t j = 1; j < n; ++j) {
    for (std::size_t i = 1; i < n; ++i) {
      if (free[j * N + i]) b[j * N + i] = f(g.x(i), g.y(j));
    }
  }
  const auto dot = [&](const std::vector<double>& x, const std::vector<double>& y) {
    double s = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) s += x[k] * y[k];
    return s;
  };
  r = b;
  p = r;
  const double bnorm = std::sqrt(dot(b, b));
  CgReport rep;
  if (bnorm == 0.0) {
    if (report) *report = rep;
    return g;
  }
  double rr = dot(r, r);
  constexpr std::size_t kMaxIter = 100000;
  while (std::sqrt(rr) / bnorm > tol) {
    if (rep.iterations++ >= kMaxIter) throw SolverError("poisson_fd_solve: conjugate gradients did not converge");
    apply(p, Ap);
    const double alpha = rr / dot(p, Ap);
    for (std::size_t k = 0; k < r.size(); ++k) {
      g.u[k] += alpha * p[k];
      r[k] -= alpha * Ap[k];
    }
    const double rr_new = dot(r, r);
    const double beta = rr_new / rr;
    rr = rr_new;
    for (std::size_t k = 0; k < p.size(); ++k) p[k] = r[k] + beta * p[k];
  }
  rep.residual = std::sqrt(rr) / bnorm;
  if (report) *report = rep;
  return g;
}

double burgers_godunov_flux(double ul, double ur) {
  const auto f = [](double u) { return 0.5 * u * u; };
  if (ul <= ur) {
    if (ul >= 0.0) return f(ul);
    if (ur <= 0.0) return f(ur);
    return 0.0;
  }
  return 0.5 * (ul + ur) >= 0.0 ? f(ul) : f(ur);
}

std::vector<BurgersSnapshot> burgers_fv_solve(const std::function<double(double)>& u0, double lo, double hi,
                                              std::size_t n, double T, double cfl, std::vector<double> times) {
  if (!(cfl > 0.0 && cfl <= 0.9)) throw ConfigError("burgers_fv_solve: CFL must lie in (0, 0.9]");
  if (n < 3) throw ConfigError("burgers_fv_solve: need at least 3 cells");
  if (times.empty()) times.push_back(T);
  std::sort(times.begin(), times.end());
  CellGrid c{lo, hi, std::vector<double>(n)};
  const double dx = c.dx();
  // Three-point Gauss average of u0 over each cell.
  const double g = std::sqrt(0.6) * 0.5 * dx;
  for (std::size_t i = 0; i < n; ++i) {
    const double m = c.center(i);
    c.u[i] = (5.0 * u0(m - g) + 8.0 * u0(m) + 5.0 * u0(m + g)) / 18.0;
  }
  std::vector<BurgersSnapshot> out;
  std::vector<double> flux(n + 1);
  double t = 0.0;
  std::size_t next = 0;
  while (next < times.size() && times[next] <= 0.0) out.push_back({times[next++], c});
  while (next < times.size()) {
    double umax = 0.0;
    for (double v : c.u) umax = std::max(umax, std::abs(v));
    double dt = cfl * dx / std::max(umax, 1e-12);
    const bool hit = t + dt >= times[next];
    if (hit) dt = times[next] - t;
    for (std::size_t i = 0; i <= n; ++i) {
      const double ul = i == 0 ? 0.0 : c.u[i - 1];
      const double ur = i == n ? 0.0 : c.u[i];
      flux[i] = burgers_godunov_flux(ul, ur);
    }
    for (std::size_t i = 0; i < n; ++i) c.u[i] -= dt / dx * (flux[i + 1] - flux[i]);
    t = hit ? times[next] : t + dt;
    while (next < times.size() && times[next] <= t) out.push_back({times[next++], c});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reference cache.

namespace {

constexpr double kBurgersReferenceTime = 0.3;

std::vector<std::vector<double>> compute_rows(const std::string& problem, std::size_t n) {
  std::vector<std::vector<double>> rows;
  if (problem == "1d-A" || problem == "1d-B" || problem == "1d-C") {
    const Grid1D g = ode_fd_solve(problem, n);
    for (std::size_t i = 0; i < g.u.size(); ++i) rows.push_back({g.x(i), g.u[i]});
  } else if (problem == "2d-A" || problem == "2d-B") {
    const Grid2D g = poisson_fd_solve(problem, n);
    for (std::size_t j = 0; j <= n; ++j) {
      for (std::size_t i = 0; i <= n; ++i) rows.push_back({g.x(i), g.y(j), g.at(i, j)});
    }
  } else if (problem == "burgers") {
    const auto snaps = burgers_fv_solve([](double x) { return std::sin(2.0 * kPi * x); }, 0.0, 1.0, n,
                                        kBurgersReferenceTime, 0.9);
    const CellGrid& c = snaps.back().cells;
    for (std::size_t i = 0; i < c.u.size(); ++i) rows.push_back({c.center(i), c.u[i]});
  } else {
    std::string names;
    for (const auto& p : reference_problems()) names += " " + p;
    throw ConfigError("no reference oracle for '" + problem + "'; valid:" + names);
  }
  return rows;
}

std::vector<std::vector<double>> read_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read reference file " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || !(std::isdigit(static_cast<unsigned char>(line[0])) || line[0] == '-' ||
                                            line[0] == '+' || line[0] == '.')) {
      continue;
    }
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::string reference_dir() {
  const char* env = std::getenv("SPINN_REF_DIR");
  return env && *env ? env : "references";
}

std::string reference_path(const std::string& dir, const std::string& problem, std::size_t n) {
  return (std::filesystem::path(dir) / (problem + "_" + std::to_string(n) + ".csv")).string();
}

std::vector<std::string> reference_problems() { return {"1d-A", "1d-B", "1d-C", "2d-A", "2d-B", "burgers"}; }

std::size_t default_reference_resolution(const std::string& problem) {
  if (problem == "2d-A" || problem == "2d-B") return 256;
  if (problem == "burgers") return 4000;
  return 4000;
}

bool ensure_reference(const std::string& dir, const std::string& problem, std::size_t n) {
  const std::string path = reference_path(dir, problem, n);
  if (std::filesystem::exists(path)) return false;
  const auto rows = compute_rows(problem, n);
  std::filesystem::create_directories(dir);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw ConfigError("cannot write reference file " + path);
    const bool two_d = problem == "2d-A" || problem == "2d-B";
    out << (two_d ? "x,y,u\n" : "x,u\n");
    char buf[64];
    for (const auto& row : rows) {
      for (std::size_t k = 0; k < row.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.17g", row[k]);
        out << (k ? "," : "") << buf;
      }
      out << '\n';
    }
  }
  std::filesystem::rename(tmp, path);
  return true;
}

std::vector<double> reference_values(const std::string& dir, const std::string& problem, std::size_t n,
                                     const std::vector<std::vector<double>>& points, bool compute_missing) {
  const std::string path = reference_path(dir, problem, n);
  if (!std::filesystem::exists(path)) {
    if (!compute_missing) {
      throw ConfigError("missing reference " + path + "; create it with: spinn reference --problem " + problem +
                        " --n " + std::to_string(n));
    }
    ensure_reference(dir, problem, n);
  }
  const auto rows = read_rows(path);
  std::vector<double> out;
  out.reserve(points.size());
  if (problem == "2d-A" || problem == "2d-B") {
    Grid2D g;
    g.n = n;
    g.x0 = rows.front()[0];
    g.y0 = rows.front()[1];
    g.x1 = rows.back()[0];
    g.y1 = rows.back()[1];
    if (rows.size() != (n + 1) * (n + 1)) throw ConfigError("reference file " + path + " has the wrong size");
    for (const auto& r : rows) g.u.push_back(r[2]);
    for (const auto& p : points) out.push_back(g.interpolate(p.at(0), p.at(1)));
  } else if (problem == "burgers") {
    CellGrid c{0.0, 1.0, {}};
    for (const auto& r : rows) c.u.push_back(r[1]);
    for (const auto& p : points) out.push_back(c.interpolate(p.at(0)));
  } else {
    Grid1D g{rows.front()[0], rows.back()[0], {}};
    for (const auto& r : rows) g.u.push_back(r[1]);
    for (const auto& p : points) out.push_back(g.interpolate(p.at(0)));
  }
  return out;
}

}  // namespace spinn
