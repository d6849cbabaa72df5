#include "spinn/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "spinn/errors.hpp"
#include "spinn/oracles.hpp"

namespace spinn {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::size_t samples_for(const SolveOptions& o, std::size_t nodes, int dim) {
  if (o.samples == "auto") return (dim == 1 ? 20 : 4) * nodes;
  std::size_t pos = 0;
  unsigned long v = 0;
  try {
    v = std::stoul(o.samples, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != o.samples.size() || v == 0) throw UsageError("--samples expects a positive count or 'auto'");
  return v;
}

std::size_t fixed_per_segment(const ProblemSpec& p, std::size_t nodes) {
  if (p.defaults.fixed_per_segment > 0) return p.defaults.fixed_per_segment;
  if (p.dim() == 1) return 1;
  return static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(nodes)))) + 1;
}

ProblemSpec build_problem(const SolveOptions& o) {
  if (!o.polygon.empty()) {
    if (o.problem != "irregular") throw UsageError("--polygon applies to the irregular problem only");
    return make_irregular_problem(load_polygon(o.polygon));
  }
  ProblemSpec p = make_problem(o.problem);
  if (o.tmax && !o.march) {
    if (!p.evolution) throw UsageError("--tmax applies to heat, advection and burgers only");
    return spacetime_problem(p.name, *p.evolution, *o.tmax);
  }
  return p;
}

void check_options(const SolveOptions& o, const ProblemSpec& p) {
  if (o.variant != "plain" && o.variant != "pou" && o.variant != "fourier") {
    throw UsageError("--variant must be plain, pou or fourier");
  }
  if (!(o.fraction > 0.0 && o.fraction <= 1.0)) throw UsageError("--fraction must lie in (0, 1]");
  if (o.march && !p.evolution) throw UsageError("--march needs an evolution problem (heat, advection, burgers)");
  if (!o.march && (o.dt || o.inner_iterations)) throw UsageError("--dt and --inner apply with --march only");
  if (o.mode != "collocation" && o.mode != "variational") throw UsageError("--mode must be collocation or variational");
  const int space_dim = o.march ? 1 : p.dim();
  if (o.variant == "fourier" && space_dim != 1) throw UsageError("--variant fourier needs a 1-D problem");
  if (o.mode == "variational") {
    if (o.march) throw UsageError("--mode variational cannot be combined with --march");
    if (p.dim() != 1 || !p.energy) throw UsageError("--mode variational needs a 1-D problem with an energy functional");
  }
  if (o.march && o.variant == "pou") throw UsageError("--march supports the plain and fourier variants");
  if (o.march && (o.width_scale || o.weight_solve)) throw UsageError("--width-scale and --weight-solve apply to steady solves");
  if (o.width_scale && !(*o.width_scale > 0.0)) throw UsageError("--width-scale must be positive");
}

Model build_model(const SolveOptions& o, const Geometry& g, const std::vector<std::size_t>& segments,
                  std::size_t nodes, std::size_t per_segment, KernelType kernel, Rng& rng) {
  if (o.variant == "fourier") return FourierParams::zeros(g.lo()[0], g.hi()[0], nodes);
  return init_nodes(g, nodes, per_segment, segments, kernel, o.variant == "pou" ? Variant::Pou : Variant::Plain, rng);
}

std::vector<double> grid_reference(const std::string& problem, const PointSet& grid) {
  std::vector<std::vector<double>> pts(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) pts[i].assign(grid[i].begin(), grid[i].end());
  return reference_values(reference_dir(), problem, default_reference_resolution(problem), pts, true);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

std::string coord_header(int dim, bool time) {
  std::string h = "x";
  if (dim == 2 && !time) h += ",y";
  if (dim == 2 && time) h += ",t";
  return h;
}

std::string grid_csv(const std::string& header, const PointSet& grid, const std::vector<double>& u) {
  std::string s = header + ",u\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (double c : grid[i]) s += fmt(c) + ",";
    s += fmt(u[i]) + "\n";
  }
  return s;
}

std::string nodes_header(const Model& model, bool march) {
  std::string h = march ? "step,t," : "";
  if (std::holds_alternative<FourierParams>(model)) return h + "k,a,b\n";
  const auto& m = std::get<ModelParams>(model);
  h += "node,fixed,x";
  if (m.dim == 2) h += ",y";
  return h + ",h,U\n";
}

std::string nodes_rows(const Model& model, const std::string& prefix) {
  std::string s;
  if (const auto* f = std::get_if<FourierParams>(&model)) {
    s += prefix + "0," + fmt(f->a0) + ",0\n";
    for (std::size_t k = 0; k < f->modes(); ++k) {
      s += prefix + std::to_string(k + 1) + "," + fmt(f->a[k]) + "," + fmt(f->b[k]) + "\n";
    }
    return s;
  }
  const auto& m = std::get<ModelParams>(model);
  for (std::size_t i = 0; i < m.n_nodes(); ++i) {
    s += prefix + std::to_string(i) + "," + (i < m.n_fixed() ? "1" : "0");
    for (double c : m.position(i)) s += "," + fmt(c);
    s += "," + fmt(m.h[i]) + "," + fmt(m.U[i]) + "\n";
  }
  return s;
}

nlohmann::json run_block(const SolveOptions& o, const ProblemSpec& p, std::size_t nodes, std::size_t samples,
                         const LossConfig& lc, const AdamConfig& adam, std::size_t iterations) {
  nlohmann::json run;
  run["problem"] = p.name;
  run["seed"] = o.seed;
  run["variant"] = o.variant;
  run["nodes"] = nodes;
  run["samples"] = samples;
  run["fraction"] = o.fraction;
  run["mode"] = o.mode;
  run["lr"] = adam.lr;
  run["w_i"] = lc.w_i;
  run["w_d"] = lc.w_d;
  run["w_n"] = lc.w_n;
  run["iterations"] = iterations;
  run["march"] = o.march;
  if (!o.polygon.empty()) run["polygon"] = o.polygon;
  return run;
}

}  // namespace

std::optional<std::string> reference_problem(const std::string& problem, bool march) {
  if (problem == "1d-C" || problem == "2d-B") return problem;
  if (problem == "burgers" && march) return problem;
  return std::nullopt;
}

SolveResult run_solve(const SolveOptions& o) {
  SolveResult res;
  res.problem = build_problem(o);
  const ProblemSpec& p = res.problem;
  check_options(o, p);
  const ProblemDefaults& d = p.defaults;
  const KernelType kernel = o.kernel ? parse_kernel(*o.kernel) : d.kernel;
  const Rng root(o.seed);
  Rng init_rng = root.split("init");
  Rng sample_rng = root.split("samples");
  Rng train_rng = root.split("train");

  LossConfig lc;
  lc.w_i = d.w_interior;
  lc.w_d = o.wd.value_or(d.w_dirichlet);
  lc.w_n = o.wn.value_or(d.w_neumann);
  lc.fraction = o.fraction;
  lc.mode = parse_mode(o.mode);
  lc.cells = o.cells;
  lc.threads = o.threads;
  lc.validate();

  fs::path out;
  if (!o.out.empty()) {
    out = o.out;
    fs::create_directories(out);
  }
  std::string jsonl;

  if (o.march) {
    const Evolution& evo = *p.evolution;
    const MarchDefaults& md = d.march;
    const std::size_t nodes = o.nodes.value_or(md.nodes);
    const std::size_t samples = samples_for(o, nodes, 1);
    ProblemSpec space;
    space.name = p.name;
    space.geometry = evo.space;
    space.residual = make_residual([](const PointContext&, const auto& f) { return f.u; });
    space.boundary = {{0, BcKind::Dirichlet, [](std::span<const double>) { return 0.0; }},
                      {1, BcKind::Dirichlet, [](std::span<const double>) { return 0.0; }}};
    const std::vector<std::size_t> segments{0, 1};
    res.model = build_model(o, evo.space, segments, nodes, 1, kernel, init_rng);
    const SampleSet s = make_samples(space, samples, 1, !o.random_samples, sample_rng);

    MarchConfig mc;
    mc.dt = o.dt.value_or(md.dt);
    mc.t_end = o.tmax.value_or(evo.t_end);
    mc.inner_iterations = o.inner_iterations.value_or(o.iterations.value_or(md.inner_iterations));
    mc.adam.lr = o.lr.value_or(md.lr);
    mc.loss = lc;
    mc.fit_tolerance = md.fit_tolerance;
    mc.snapshot_times = o.snapshot_times;
    if (mc.snapshot_times.empty()) {
      for (int k = 1; k <= 4; ++k) mc.snapshot_times.push_back(mc.t_end * k / 4.0);
    }
    mc.validate();

    std::size_t offset = 0;
    const auto on_step = [&](const StepReport& r, const Model&) {
      for (const RunRecord& rec : r.records) {
        RunRecord g = rec;
        g.iteration = offset + rec.iteration;
        auto j = to_json(g, o.timing);
        j["step"] = r.step;
        j["t"] = r.t;
        jsonl += j.dump() + "\n";
        res.records.push_back(g);
      }
      offset += mc.inner_iterations;
    };
    res.march = march(evo, mc, res.model, s, train_rng, on_step);
    const MarchResult& mr = *res.march;
    res.model = mr.snapshots.back().model;
    res.final_loss = res.records.empty() ? std::nan("") : res.records.back().loss_total;
    res.grid = evaluation_grid(evo.space, o.grid.value_or(201));
    res.solution = eval_points(res.model, res.grid);
    if (mr.snapshots.back().metrics) {
      res.metrics = mr.snapshots.back().metrics;
    } else if (o.reference_metrics) {
      if (auto ref = reference_problem(p.name, true); ref && std::abs(mc.t_end - evo.t_end) < 1e-12) {
        res.metrics = error_metrics(res.solution, grid_reference(*ref, res.grid));
      }
    }

    if (!out.empty()) {
      write_text(out / "run.jsonl", jsonl);
      std::string solution = "x,t,u\n", nodes_csv = nodes_header(res.model, true), index;
      for (const MarchSnapshot& sn : mr.snapshots) {
        const auto u = eval_points(sn.model, res.grid);
        for (std::size_t i = 0; i < res.grid.size(); ++i) {
          solution += fmt(res.grid[i][0]) + "," + fmt(sn.t) + "," + fmt(u[i]) + "\n";
        }
        nodes_csv += nodes_rows(sn.model, std::to_string(sn.step) + "," + fmt(sn.t) + ",");
        const std::string file = "snapshot_" + std::to_string(sn.step) + ".csv";
        write_text(out / file, grid_csv("x", res.grid, u));
        nlohmann::json entry{{"step", sn.step}, {"t", sn.t}, {"file", file}};
        if (sn.metrics) entry["metrics"] = {{"L1", sn.metrics->l1}, {"L2", sn.metrics->l2}, {"Linf", sn.metrics->linf}};
        index += entry.dump() + "\n";
      }
      write_text(out / "solution.csv", solution);
      write_text(out / "nodes.csv", nodes_csv);
      write_text(out / "snapshots.jsonl", index);
      nlohmann::json doc;
      doc["model"] = to_json(res.model);
      doc["run"] = run_block(o, p, nodes, samples, lc, mc.adam, mc.inner_iterations);
      doc["run"]["dt"] = mc.dt;
      doc["run"]["t_end"] = mc.t_end;
      doc["run"]["fit_linf"] = mr.fit_linf;
      doc["run"]["grid"] = res.grid.size();
      write_text(out / "model.json", doc.dump(2) + "\n");
    }
    return res;
  }

  const std::size_t nodes = o.nodes.value_or(d.nodes);
  const std::size_t samples = samples_for(o, nodes, p.dim());
  const std::size_t per_segment = fixed_per_segment(p, nodes);
  const auto segments = p.dirichlet_segments();
  res.model = build_model(o, p.geometry, segments, nodes, per_segment, kernel, init_rng);
  if (auto* mp = std::get_if<ModelParams>(&res.model)) {
    for (double& h : mp->h) h *= o.width_scale.value_or(d.width_scale);
  }
  const std::size_t boundary_per_segment = p.dim() == 1 ? 1 : 4 * per_segment;
  const SampleSet s = make_samples(p, samples, boundary_per_segment, !o.random_samples, sample_rng);

  TrainConfig tc;
  tc.iterations = o.iterations.value_or(d.iterations);
  tc.metric_every = o.metric_every > 0 ? o.metric_every : std::max<std::size_t>(1, tc.iterations / 100);
  tc.adam.lr = o.lr.value_or(d.lr);

  res.grid = evaluation_grid(p.geometry, o.grid.value_or(p.dim() == 1 ? 201 : 41));
  MetricTarget target;
  target.grid = res.grid;
  if (p.exact) {
    for (std::size_t i = 0; i < res.grid.size(); ++i) target.values.push_back(p.exact(res.grid[i]));
  } else if (auto ref = reference_problem(p.name, false); ref && o.reference_metrics && o.polygon.empty()) {
    target.values = grid_reference(*ref, res.grid);
  }
  const bool with_target = !target.values.empty();

  const bool weight_solve = o.weight_solve.value_or(d.weight_solve) && lc.mode == LossMode::Collocation;
  res.records = train(res.model, p, lc, s, tc, train_rng, with_target ? &target : nullptr);
  if (weight_solve) {
    solve_weights(res.model, p, lc, s);
    LossConfig full = lc;
    full.fraction = 1.0;
    const LossParts parts = collocation_loss(res.model, p, full, s, train_rng);
    RunRecord& last = res.records.back();
    last.loss_total = parts.total;
    last.loss_interior = parts.interior;
    last.loss_dirichlet = parts.dirichlet;
    last.loss_neumann = parts.neumann;
    if (with_target) {
      const ErrorMetrics m = error_metrics(eval_points(res.model, target.grid), target.values);
      last.l1 = m.l1;
      last.l2 = m.l2;
      last.linf = m.linf;
    }
  }
  for (const RunRecord& r : res.records) jsonl += to_json(r, o.timing).dump() + "\n";
  res.final_loss = res.records.empty() ? std::nan("") : res.records.back().loss_total;
  res.solution = eval_points(res.model, res.grid);
  if (with_target) res.metrics = error_metrics(res.solution, target.values);

  if (!out.empty()) {
    write_text(out / "run.jsonl", jsonl);
    write_text(out / "solution.csv", grid_csv(coord_header(p.dim(), p.evolution.has_value()), res.grid, res.solution));
    write_text(out / "nodes.csv", nodes_header(res.model, false) + nodes_rows(res.model, ""));
    nlohmann::json doc;
    doc["model"] = to_json(res.model);
    doc["run"] = run_block(o, p, nodes, samples, lc, tc.adam, tc.iterations);
    if (p.evolution) doc["run"]["t_end"] = p.geometry.hi()[1];
    doc["run"]["width_scale"] = o.width_scale.value_or(d.width_scale);
    doc["run"]["weight_solve"] = weight_solve;
    doc["run"]["grid"] = res.grid.size();
    write_text(out / "model.json", doc.dump(2) + "\n");
  }
  return res;
}

namespace {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path.string() + " is empty");
  std::stringstream hs(line);
  for (std::string cell; std::getline(hs, cell, ',');) t.header.push_back(cell);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) row.push_back(std::stod(cell));
    if (row.size() != t.header.size()) throw ConfigError(path.string() + ": row width differs from the header");
    t.rows.push_back(std::move(row));
  }
  return t;
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace

std::vector<ReportRow> run_report(const std::string& run_dir, const std::string& against_dir,
                                  std::optional<std::size_t> reference_n) {
  const fs::path dir(run_dir);
  const CsvTable sol = read_csv(dir / "solution.csv");
  const std::size_t ncoord = sol.header.size() - 1;
  std::vector<double> u(sol.rows.size());
  for (std::size_t i = 0; i < sol.rows.size(); ++i) u[i] = sol.rows[i].back();

  if (!against_dir.empty()) {
    const CsvTable other = read_csv(fs::path(against_dir) / "solution.csv");
    bool same = other.header == sol.header && other.rows.size() == sol.rows.size();
    for (std::size_t i = 0; same && i < sol.rows.size(); ++i) {
      for (std::size_t k = 0; k < ncoord; ++k) same = same && std::abs(sol.rows[i][k] - other.rows[i][k]) <= 1e-12;
    }
    if (!same) {
      throw ConfigError("grid mismatch between " + run_dir + " (" + std::to_string(sol.rows.size()) + " points) and " +
                        against_dir + " (" + std::to_string(other.rows.size()) +
                        " points); re-run both solves with the same problem and the same --grid value");
    }
    std::vector<double> v(other.rows.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = other.rows[i].back();
    return {{"against " + against_dir, error_metrics(u, v)}};
  }

  const nlohmann::json doc = read_json(dir / "model.json");
  const nlohmann::json& run = doc.at("run");
  const std::string name = run.at("problem").get<std::string>();
  const bool is_march = run.value("march", false);
  ProblemSpec p = run.contains("polygon") ? make_irregular_problem(load_polygon(run.at("polygon").get<std::string>()))
                                          : make_problem(name);
  std::vector<ReportRow> rows;
  const bool timed = p.evolution.has_value();
  if (timed && p.evolution->exact && ncoord == 2) {
    std::vector<double> ref(sol.rows.size());
    for (std::size_t i = 0; i < ref.size(); ++i) ref[i] = p.evolution->exact(sol.rows[i][0], sol.rows[i][1]);
    rows.push_back({"exact", error_metrics(u, ref)});
  } else if (!timed && p.exact) {
    std::vector<double> ref(sol.rows.size());
    for (std::size_t i = 0; i < ref.size(); ++i) ref[i] = p.exact(std::span<const double>(sol.rows[i].data(), ncoord));
    rows.push_back({"exact", error_metrics(u, ref)});
  }
  if (rows.empty()) {
    const auto ref = reference_problem(name, is_march);
    if (!ref) throw ConfigError("no exact solution or reference oracle for " + name + "; compare runs with --against");
    const std::size_t n = reference_n.value_or(default_reference_resolution(*ref));
    std::vector<std::vector<double>> pts;
    std::vector<double> uu;
    const double t_end = run.value("t_end", 0.0);
    for (std::size_t i = 0; i < sol.rows.size(); ++i) {
      if (is_march) {
        if (std::abs(sol.rows[i][1] - t_end) > 1e-12) continue;
        pts.push_back({sol.rows[i][0], sol.rows[i][1]});
      } else {
        pts.emplace_back(sol.rows[i].begin(), sol.rows[i].begin() + static_cast<std::ptrdiff_t>(ncoord));
      }
      uu.push_back(u[i]);
    }
    const auto values = reference_values(reference_dir(), *ref, n, pts, false);
    rows.push_back({"reference " + reference_path(reference_dir(), *ref, n), error_metrics(uu, values)});
  }
  return rows;
}

namespace {

std::string format_report(const std::vector<ReportRow>& rows, std::optional<double> max_linf) {
  std::size_t w = 10;
  for (const auto& r : rows) w = std::max(w, r.label.size());
  std::ostringstream s;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-*s  %12s  %12s  %12s%s\n", static_cast<int>(w), "comparison", "L1", "L2", "Linf",
                max_linf ? "  check" : "");
  s << buf;
  for (const auto& r : rows) {
    std::string mark;
    if (max_linf) mark = r.metrics.linf <= *max_linf ? "  PASS" : "  FAIL";
    std::snprintf(buf, sizeof buf, "%-*s  %12.4e  %12.4e  %12.4e%s\n", static_cast<int>(w), r.label.c_str(),
                  r.metrics.l1, r.metrics.l2, r.metrics.linf, mark.c_str());
    s << buf;
  }
  return s.str();
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"spinn: sparse physics-based interpretable neural networks"};
  app.require_subcommand(1);

  SolveOptions so;
  auto* solve = app.add_subcommand("solve", "train a SPINN model on a benchmark problem");
  solve->add_option("--problem", so.problem, "problem name")->required();
  solve->add_option("--kernel", so.kernel, "gaussian | softplus-hat | relu-hat | mlp");
  solve->add_option("--variant", so.variant, "plain | pou | fourier");
  solve->add_option("--nodes", so.nodes, "interior nodes (Fourier modes for --variant fourier)");
  solve->add_option("--samples", so.samples, "interior samples, or auto");
  solve->add_option("--fraction", so.fraction, "interior sampling fraction per iteration");
  solve->add_flag("--random-samples", so.random_samples, "draw interior samples at random");
  solve->add_option("--iterations", so.iterations, "Adam iterations (per time step with --march)");
  solve->add_option("--seed", so.seed, "random seed");
  solve->add_option("--lr", so.lr, "learning rate");
  solve->add_option("--wd", so.wd, "Dirichlet penalty weight");
  solve->add_option("--wn", so.wn, "Neumann penalty weight");
  solve->add_option("--out", so.out, "output directory");
  solve->add_option("--mode", so.mode, "collocation | variational");
  solve->add_option("--cells", so.cells, "Riemann-sum cells in variational mode");
  solve->add_flag("--march", so.march, "FD-SPINN implicit time marching");
  solve->add_option("--dt", so.dt, "time step");
  solve->add_option("--tmax", so.tmax, "final time");
  solve->add_option("--inner", so.inner_iterations, "Adam iterations per time step");
  solve->add_option("--snapshots", so.snapshot_times, "snapshot times with --march")->delimiter(',');
  solve->add_option("--threads", so.threads, "loss worker threads (0 = all cores)");
  solve->add_option("--polygon", so.polygon, "polygon vertex file for the irregular problem");
  solve->add_option("--grid", so.grid, "evaluation points per axis");
  solve->add_option("--metric-every", so.metric_every, "iterations between records");
  solve->add_flag("--timing", so.timing, "record wall_ms in run.jsonl");
  solve->add_option("--width-scale", so.width_scale, "initial widths in lattice spacings");
  solve->add_option("--weight-solve", so.weight_solve, "coefficient solve after Adam (true | false)");

  std::string ref_problem;
  std::optional<std::size_t> ref_n;
  auto* reference = app.add_subcommand("reference", "compute and cache an oracle solution");
  reference->add_option("--problem", ref_problem, "problem name")->required();
  reference->add_option("--n", ref_n, "resolution (cells or grid intervals)");

  std::string rep_run, rep_against;
  std::optional<std::size_t> rep_n;
  std::optional<double> rep_max;
  auto* report = app.add_subcommand("report", "error table of a run directory");
  report->add_option("--run", rep_run, "run directory")->required();
  report->add_option("--against", rep_against, "second run directory to compare with");
  report->add_option("--n", rep_n, "reference resolution");
  report->add_option("--max-linf", rep_max, "mark rows PASS or FAIL against this bound");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*solve) {
      const SolveResult r = run_solve(so);
      std::printf("%s: final loss %.6e", r.problem.name.c_str(), r.final_loss);
      if (r.metrics) std::printf("  L1 %.4e  L2 %.4e  Linf %.4e", r.metrics->l1, r.metrics->l2, r.metrics->linf);
      std::printf("\n");
      return std::isfinite(r.final_loss) ? 0 : 1;
    }
    if (*reference) {
      const auto names = reference_problems();
      if (std::find(names.begin(), names.end(), ref_problem) == names.end()) {
        std::string list;
        for (const auto& n : names) list += " " + n;
        std::fprintf(stderr, "error: no reference oracle for '%s'; valid names:%s\n", ref_problem.c_str(), list.c_str());
        return 2;
      }
      const std::string dir = reference_dir();
      const std::size_t n = ref_n.value_or(default_reference_resolution(ref_problem));
      const bool wrote = ensure_reference(dir, ref_problem, n);
      std::printf("%s %s\n", wrote ? "wrote" : "cached", reference_path(dir, ref_problem, n).c_str());
      return 0;
    }
    if (*report) {
      const auto rows = run_report(rep_run, rep_against, rep_n);
      const std::string text = format_report(rows, rep_max);
      std::fputs(text.c_str(), stdout);
      nlohmann::json doc = nlohmann::json::array();
      bool pass = true;
      for (const auto& r : rows) {
        nlohmann::json j{{"comparison", r.label}, {"L1", r.metrics.l1}, {"L2", r.metrics.l2}, {"Linf", r.metrics.linf}};
        if (rep_max) {
          j["pass"] = r.metrics.linf <= *rep_max;
          pass = pass && r.metrics.linf <= *rep_max;
        }
        doc.push_back(j);
      }
      write_text(fs::path(rep_run) / "report.json", doc.dump(2) + "\n");
      write_text(fs::path(rep_run) / "report.txt", text);
      return pass ? 0 : 1;
    }
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}

}  // namespace spinn
