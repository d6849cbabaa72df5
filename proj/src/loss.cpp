#include "spinn/loss.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "spinn/errors.hpp"
#include "spinn/tape.hpp"

namespace spinn {

std::string_view mode_name(LossMode mode) {
  return mode == LossMode::Collocation ? "collocation" : "variational";
}

LossMode parse_mode(std::string_view name) {
  if (name == "collocation") return LossMode::Collocation;
  if (name == "variational") return LossMode::Variational;
  throw ConfigError("unknown loss mode '" + std::string(name) + "'; valid: collocation variational");
}

void LossConfig::validate() const {
  if (!(w_i >= 0.0) || !(w_d >= 0.0) || !(w_n >= 0.0)) throw ConfigError("loss weights must be nonnegative");
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("sampling fraction must lie in (0, 1]");
}

SampleSet make_samples(const ProblemSpec& p, std::size_t n_interior, std::size_t per_segment, bool full, Rng& rng) {
  return SampleSet{sample_interior(p, n_interior, full, rng), sample_boundary(p, per_segment)};
}

std::vector<std::size_t> subsample_indices(std::size_t n, double f, Rng& rng) {
  if (!(f > 0.0 && f <= 1.0)) throw ConfigError("subsample: fraction must lie in (0, 1]");
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  if (f == 1.0 || n == 0) return idx;
  // The small offset keeps products like 0.2 * 100 from rounding up.
  auto k = static_cast<std::size_t>(std::ceil(f * static_cast<double>(n) - 1e-9));
  k = std::clamp<std::size_t>(k, 1, n);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

PointSet subsample(const PointSet& points, double f, Rng& rng) {
  PointSet out(points.dim());
  for (std::size_t i : subsample_indices(points.size(), f, rng)) out.push_back(points[i]);
  return out;
}

namespace {

constexpr std::size_t kBlock = 16;
constexpr std::size_t kMinCells = 1000;

enum class JobKind : std::uint8_t { Interior, Dirichlet, Neumann, Cell };

struct Job {
  JobKind kind;
  std::size_t index;
};

struct Context {
  const Model& model;
  const ProblemSpec& p;
  const SampleSet& s;
  std::span<const double> theta;
  double cell_lo = 0.0;
  double cell_dx = 0.0;
  std::array<double, 4> grad_scale{};  // per JobKind
};

double take(Tape&, const HyperDual& u, Slot s) {
  switch (s) {
    case Slot::Value: return u.v;
    case Slot::D1: return u.d1;
    case Slot::D2: return u.d2;
    case Slot::D12: return u.d12;
  }
  return u.v;
}
Var take(Tape& t, Var u, Slot s) { return t.slot(u, s); }

double call(const Residual& r, const PointContext& c, const LocalFields<double>& f) { return r.real(c, f); }
Var call(const Residual& r, const PointContext& c, const LocalFields<Var>& f) { return r.taped(c, f); }
double call(const EnergyDensity& e, double x, double u, double du) { return e.real(x, u, du); }
Var call(const EnergyDensity& e, double x, Var u, Var du) { return e.taped(x, u, du); }

double value_of(double v) { return v; }
double value_of(Var v) { return v.value(); }

// Per-thread evaluation state. S is HyperDual (value only) or Var (taped).
template <class S>
struct Worker {
  Tape tape;
  std::vector<S> params;
  std::array<S, kMaxDim> xs{};

  void begin(std::span<const double> theta) {
    if constexpr (std::is_same_v<S, Var>) {
      tape.reset();
      params.resize(theta.size());
      for (std::size_t i = 0; i < theta.size(); ++i) params[i] = tape.leaf(theta[i]);
    } else if (params.size() != theta.size()) {
      params.assign(theta.begin(), theta.end());
    }
  }

  // Model at x with coordinate `axis` seeded (1, 1); axis < 0 seeds nothing.
  S eval(const Model& model, std::span<const double> x, int axis) {
    if constexpr (std::is_same_v<S, Var>) {
      return record_eval(model, tape, params, x, axis);
    } else {
      for (std::size_t k = 0; k < x.size(); ++k) {
        const double seed = static_cast<int>(k) == axis ? 1.0 : 0.0;
        xs[k] = HyperDual(x[k], seed, seed, 0.0);
      }
      return evaluate<S>(model, params, std::span<const S>(xs.data(), x.size()));
    }
  }

  std::array<S, kMaxDim> eval_axes(const Model& model, std::span<const double> x) {
    std::array<S, kMaxDim> out{};
    if constexpr (std::is_same_v<S, Var>) {
      record_eval_axes(model, tape, params, x, std::span<Var>(out.data(), x.size()));
    } else {
      for (std::size_t k = 0; k < x.size(); ++k) out[k] = eval(model, x, static_cast<int>(k));
    }
    return out;
  }

  // Unscaled term of one job: N^2, (u - u0)^2, (flux - g0)^2 or e(x, u, u').
  auto term(const Context& c, const Job& job) {
    using R = decltype(take(tape, std::declval<S>(), Slot::Value));
    if (job.kind == JobKind::Cell) {
      const double x = c.cell_lo + static_cast<double>(job.index) * c.cell_dx;
      const S U = eval(c.model, std::span<const double>(&x, 1), 0);
      return call(c.p.energy, x, take(tape, U, Slot::Value), take(tape, U, Slot::D1));
    }
    const R r = residual(c, job);
    return R(r * r);
  }

  // Unsquared residual of a collocation job: N, u - u0 or flux - g0.
  auto residual(const Context& c, const Job& job) {
    using R = decltype(take(tape, std::declval<S>(), Slot::Value));
    const int d = c.p.dim();
    switch (job.kind) {
      case JobKind::Interior: {
        const auto x = c.s.interior[job.index];
        LocalFields<R> f;
        f.dim = d;
        const auto Us = eval_axes(c.model, x);
        for (int k = 0; k < d; ++k) {
          const S& U = Us[k];
          if (k == 0) f.u = take(tape, U, Slot::Value);
          f.grad[k] = take(tape, U, Slot::D1);
          f.d2[k] = take(tape, U, Slot::D12);
        }
        return call(c.p.residual, PointContext{x, job.index}, f);
      }
      case JobKind::Dirichlet: {
        const R u = take(tape, eval(c.model, c.s.boundary.dirichlet[job.index], -1), Slot::Value);
        return R(u - c.s.boundary.dirichlet_values[job.index]);
      }
      case JobKind::Neumann: {
        const auto x = c.s.boundary.neumann[job.index];
        const auto n = c.s.boundary.normals[job.index];
        const auto Us = eval_axes(c.model, x);
        R flux = take(tape, Us[0], Slot::D1) * n[0];
        for (int k = 1; k < d; ++k) flux = flux + take(tape, Us[k], Slot::D1) * n[k];
        return R(flux - c.s.boundary.neumann_values[job.index]);
      }
      case JobKind::Cell:
        break;
    }
    throw UsageError("loss: unknown job kind");
  }
};

struct BlockResult {
  std::array<double, 4> sums{};
  std::vector<double> grad;
};

template <class S>
void run_block(Worker<S>& w, const Context& c, std::span<const Job> jobs, BlockResult& out) {
  for (const Job& job : jobs) {
    w.begin(c.theta);
    const auto t = w.term(c, job);
    const double v = value_of(t);
    if (!std::isfinite(v)) {
      throw EvalError("loss", v, "loss: non-finite term at sample " + std::to_string(job.index));
    }
    out.sums[static_cast<std::size_t>(job.kind)] += v;
    if constexpr (std::is_same_v<S, Var>) {
      const double scale = c.grad_scale[static_cast<std::size_t>(job.kind)];
      if (scale != 0.0) {
        w.tape.backward(t);
        w.tape.accumulate_gradient(w.params, scale, out.grad);
      }
    }
  }
}

// Pairwise combination of blocks [lo, hi) into blocks[lo].
void reduce(std::vector<BlockResult>& blocks, std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return;
  const std::size_t mid = lo + (hi - lo) / 2;
  reduce(blocks, lo, mid);
  reduce(blocks, mid, hi);
  for (std::size_t k = 0; k < 4; ++k) blocks[lo].sums[k] += blocks[mid].sums[k];
  auto& g = blocks[lo].grad;
  const auto& h = blocks[mid].grad;
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += h[i];
}

// Runs every job in fixed-size blocks and returns the reduced block. The
// block partition and reduction order do not depend on the thread count.
BlockResult run_jobs(const Context& c, const std::vector<Job>& jobs, unsigned threads, bool with_gradient) {
  const std::size_t nblocks = std::max<std::size_t>(1, (jobs.size() + kBlock - 1) / kBlock);
  std::vector<BlockResult> blocks(nblocks);
  if (with_gradient) {
    for (auto& b : blocks) b.grad.assign(c.theta.size(), 0.0);
  }
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, nblocks));

  std::atomic<std::size_t> next{0};
  auto work = [&](auto& worker) {
    for (std::size_t b = next++; b < nblocks; b = next++) {
      const std::size_t lo = b * kBlock, hi = std::min(jobs.size(), lo + kBlock);
      if (lo < hi) run_block(worker, c, std::span<const Job>(jobs.data() + lo, hi - lo), blocks[b]);
    }
  };
  auto body = [&] {
    if (with_gradient) {
      Worker<Var> w;
      work(w);
    } else {
      Worker<HyperDual> w;
      work(w);
    }
  };
  if (threads <= 1) {
    body();
  } else {
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          body();
        } catch (...) {
          errors[t] = std::current_exception();
          next = nblocks;
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  reduce(blocks, 0, nblocks);
  return std::move(blocks[0]);
}

void check_gradient_span(const Model& model, std::span<double> gradient) {
  if (!gradient.empty() && gradient.size() != param_count(model)) {
    throw UsageError("loss: gradient buffer has " + std::to_string(gradient.size()) + " entries, model has " +
                     std::to_string(param_count(model)));
  }
}

void check_boundary(const ProblemSpec& p, const SampleSet& s) {
  bool has_d = false, has_n = false;
  for (const auto& bc : p.boundary) (bc.kind == BcKind::Dirichlet ? has_d : has_n) = true;
  if (has_d && s.boundary.dirichlet.empty()) throw ConfigError("loss: no Dirichlet samples for " + p.name);
  if (has_n && s.boundary.neumann.empty()) throw ConfigError("loss: no Neumann samples for " + p.name);
}

}  // namespace

LossParts collocation_loss(const Model& model, const ProblemSpec& p, const LossConfig& cfg, const SampleSet& s,
                           Rng& rng, std::span<double> gradient) {
  cfg.validate();
  check_gradient_span(model, gradient);
  if (s.interior.empty()) throw ConfigError("loss: no interior samples for " + p.name);
  check_boundary(p, s);
  if (model_dim(model) != p.dim()) throw ConfigError("loss: model dimension does not match " + p.name);

  const auto interior = subsample_indices(s.interior.size(), cfg.fraction, rng);
  std::vector<Job> jobs;
  jobs.reserve(interior.size() + s.boundary.dirichlet.size() + s.boundary.neumann.size());
  for (std::size_t i : interior) jobs.push_back({JobKind::Interior, i});
  for (std::size_t i = 0; i < s.boundary.dirichlet.size(); ++i) jobs.push_back({JobKind::Dirichlet, i});
  for (std::size_t i = 0; i < s.boundary.neumann.size(); ++i) jobs.push_back({JobKind::Neumann, i});

  const double mi = static_cast<double>(interior.size());
  const double md = static_cast<double>(std::max<std::size_t>(1, s.boundary.dirichlet.size()));
  const double mn = static_cast<double>(std::max<std::size_t>(1, s.boundary.neumann.size()));
  const auto theta = pack(model);
  Context c{model, p, s, theta};
  c.grad_scale = {cfg.w_i / mi, cfg.w_d / md, cfg.w_n / mn, 0.0};

  BlockResult r = run_jobs(c, jobs, cfg.threads, !gradient.empty());
  LossParts out;
  out.interior = r.sums[0] / mi;
  out.dirichlet = r.sums[1] / md;
  out.neumann = r.sums[2] / mn;
  out.total = cfg.w_i * out.interior + cfg.w_d * out.dirichlet + cfg.w_n * out.neumann;
  if (!gradient.empty()) std::copy(r.grad.begin(), r.grad.end(), gradient.begin());
  return out;
}

ResidualRows collocation_rows(const Model& model, const ProblemSpec& p, const LossConfig& cfg, const SampleSet& s,
                              std::span<const std::size_t> columns) {
  cfg.validate();
  if (s.interior.empty()) throw ConfigError("loss: no interior samples for " + p.name);
  check_boundary(p, s);
  if (model_dim(model) != p.dim()) throw ConfigError("loss: model dimension does not match " + p.name);
  const auto theta = pack(model);
  for (std::size_t j : columns) {
    if (j >= theta.size()) throw UsageError("loss: column " + std::to_string(j) + " is not a model parameter");
  }
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < s.interior.size(); ++i) jobs.push_back({JobKind::Interior, i});
  for (std::size_t i = 0; i < s.boundary.dirichlet.size(); ++i) jobs.push_back({JobKind::Dirichlet, i});
  for (std::size_t i = 0; i < s.boundary.neumann.size(); ++i) jobs.push_back({JobKind::Neumann, i});
  const double mi = static_cast<double>(s.interior.size());
  const double md = static_cast<double>(std::max<std::size_t>(1, s.boundary.dirichlet.size()));
  const double mn = static_cast<double>(std::max<std::size_t>(1, s.boundary.neumann.size()));
  const std::array<double, 3> weight{std::sqrt(cfg.w_i / mi), std::sqrt(cfg.w_d / md), std::sqrt(cfg.w_n / mn)};

  Context c{model, p, s, theta};
  ResidualRows out;
  out.rows = jobs.size();
  out.cols = columns.size();
  out.r.resize(out.rows);
  out.jacobian.assign(out.rows * out.cols, 0.0);
  Worker<Var> w;
  std::vector<double> g(theta.size());
  for (std::size_t row = 0; row < jobs.size(); ++row) {
    const Job& job = jobs[row];
    const double scale = weight[static_cast<std::size_t>(job.kind)];
    w.begin(theta);
    const Var r = w.residual(c, job);
    if (!std::isfinite(r.value())) {
      throw EvalError("loss", r.value(), "loss: non-finite residual at sample " + std::to_string(job.index));
    }
    out.r[row] = scale * r.value();
    std::fill(g.begin(), g.end(), 0.0);
    w.tape.backward(r);
    w.tape.accumulate_gradient(w.params, scale, g);
    for (std::size_t k = 0; k < columns.size(); ++k) out.jacobian[row * out.cols + k] = g[columns[k]];
  }
  return out;
}

LossParts variational_loss(const Model& model, const ProblemSpec& p, const LossConfig& cfg, const SampleSet& s,
                           std::span<double> gradient) {
  cfg.validate();
  check_gradient_span(model, gradient);
  if (p.dim() != 1 || !p.energy) {
    throw ConfigError("variational mode is unsupported for " + p.name + " (needs a 1-D energy functional)");
  }
  check_boundary(p, s);
  const std::size_t n = cfg.cells > 0 ? cfg.cells : std::max<std::size_t>(s.interior.size(), kMinCells);
  if (n == 0) throw ConfigError("variational loss: empty partition");

  std::vector<Job> jobs;
  jobs.reserve(n + s.boundary.dirichlet.size());
  for (std::size_t j = 0; j < n; ++j) jobs.push_back({JobKind::Cell, j});
  for (std::size_t i = 0; i < s.boundary.dirichlet.size(); ++i) jobs.push_back({JobKind::Dirichlet, i});

  const double lo = p.geometry.lo()[0], hi = p.geometry.hi()[0];
  const double dx = (hi - lo) / static_cast<double>(n);
  const double md = static_cast<double>(std::max<std::size_t>(1, s.boundary.dirichlet.size()));
  const auto theta = pack(model);
  Context c{model, p, s, theta, lo, dx};
  c.grad_scale = {0.0, cfg.w_d / md, 0.0, cfg.w_i * dx};

  BlockResult r = run_jobs(c, jobs, cfg.threads, !gradient.empty());
  LossParts out;
  out.interior = r.sums[3] * dx;
  out.dirichlet = r.sums[1] / md;
  out.total = cfg.w_i * out.interior + cfg.w_d * out.dirichlet;
  if (!gradient.empty()) std::copy(r.grad.begin(), r.grad.end(), gradient.begin());
  return out;
}

LossParts evaluate_loss(const Model& model, const ProblemSpec& p, const LossConfig& cfg, const SampleSet& s, Rng& rng,
                        std::span<double> gradient) {
  if (cfg.mode == LossMode::Variational) return variational_loss(model, p, cfg, s, gradient);
  return collocation_loss(model, p, cfg, s, rng, gradient);
}

}  // namespace spinn
