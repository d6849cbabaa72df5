#include "spinn/model.hpp"

#include <algorithm>
#include <numbers>

namespace spinn {

std::span<const double> ModelParams::position(std::size_t node) const {
  const auto d = static_cast<std::size_t>(dim);
  if (node < n_fixed()) return {fixed_X.data() + node * d, d};
  return {free_X.data() + (node - n_fixed()) * d, d};
}

ModelParams::Layout ModelParams::layout() const {
  Layout L;
  L.x = 0;
  L.h = free_X.size();
  L.u = L.h + h.size();
  L.mlp = L.u + U.size();
  L.total = L.mlp + kernel.mlp_params.size();
  return L;
}

std::vector<double> ModelParams::pack() const {
  std::vector<double> theta;
  theta.reserve(param_count());
  theta.insert(theta.end(), free_X.begin(), free_X.end());
  theta.insert(theta.end(), h.begin(), h.end());
  theta.insert(theta.end(), U.begin(), U.end());
  theta.insert(theta.end(), kernel.mlp_params.begin(), kernel.mlp_params.end());
  return theta;
}

void ModelParams::unpack(std::span<const double> theta) {
  const auto L = layout();
  if (theta.size() != L.total) {
    throw UsageError("ModelParams::unpack: expected " + std::to_string(L.total) + " parameters, got " +
                     std::to_string(theta.size()));
  }
  std::copy(theta.begin() + L.x, theta.begin() + L.h, free_X.begin());
  std::copy(theta.begin() + L.h, theta.begin() + L.u, h.begin());
  std::copy(theta.begin() + L.u, theta.begin() + L.mlp, U.begin());
  std::copy(theta.begin() + L.mlp, theta.end(), kernel.mlp_params.begin());
}

void ModelParams::project() {
  for (double& w : h) w = std::max(w, kMinWidth);
}

void ModelParams::validate() const {
  if (dim < 1 || dim > kMaxDim) throw ConfigError("model: dimension must be 1..3");
  const auto d = static_cast<std::size_t>(dim);
  if (fixed_X.size() % d != 0 || free_X.size() % d != 0) throw ConfigError("model: ragged node coordinates");
  const std::size_t n = n_nodes();
  if (n == 0) throw ConfigError("model: no nodes");
  if (h.size() != n || U.size() != n) {
    throw ConfigError("model: node count " + std::to_string(n) + " disagrees with |h| = " + std::to_string(h.size()) +
                      ", |U| = " + std::to_string(U.size()));
  }
  if (kernel.type == KernelType::Mlp && kernel.mlp_params.size() != kMlpParamCount) {
    throw ConfigError("model: kernel network needs " + std::to_string(kMlpParamCount) + " parameters");
  }
  if (kernel.type != KernelType::Mlp && !kernel.mlp_params.empty()) {
    throw ConfigError("model: only the mlp kernel carries parameters");
  }
  if (kernel.type == KernelType::ReluHat && dim != 1) throw ConfigError("model: relu-hat kernel is 1-D only");
}

FourierParams FourierParams::zeros(double lo, double hi, std::size_t modes) {
  if (!(hi > lo)) throw ConfigError("fourier: need hi > lo");
  if (modes < 1) throw ConfigError("fourier: need at least one mode");
  FourierParams f;
  f.lo = lo;
  f.hi = hi;
  f.a.assign(modes, 0.0);
  f.b.assign(modes, 0.0);
  return f;
}

double FourierParams::omega() const { return 2.0 * std::numbers::pi / (hi - lo); }

std::vector<double> FourierParams::pack() const {
  std::vector<double> theta;
  theta.reserve(param_count());
  theta.push_back(a0);
  theta.insert(theta.end(), a.begin(), a.end());
  theta.insert(theta.end(), b.begin(), b.end());
  return theta;
}

void FourierParams::unpack(std::span<const double> theta) {
  if (theta.size() != param_count()) throw UsageError("FourierParams::unpack: size mismatch");
  a0 = theta[0];
  std::copy(theta.begin() + 1, theta.begin() + 1 + static_cast<std::ptrdiff_t>(a.size()), a.begin());
  std::copy(theta.begin() + 1 + static_cast<std::ptrdiff_t>(a.size()), theta.end(), b.begin());
}

int model_dim(const Model& model) {
  if (const auto* m = std::get_if<ModelParams>(&model)) return m->dim;
  return 1;
}

std::size_t param_count(const Model& model) {
  return std::visit([](const auto& m) { return m.param_count(); }, model);
}

std::vector<double> pack(const Model& model) {
  return std::visit([](const auto& m) { return m.pack(); }, model);
}

void unpack(Model& model, std::span<const double> theta) {
  std::visit([&](auto& m) { m.unpack(theta); }, model);
}

void project(Model& model) {
  if (auto* m = std::get_if<ModelParams>(&model)) m->project();
}

std::vector<std::size_t> linear_coefficients(const Model& model) {
  std::vector<std::size_t> out;
  if (const auto* m = std::get_if<ModelParams>(&model)) {
    const auto L = m->layout();
    for (std::size_t j = L.u; j < L.mlp; ++j) out.push_back(j);
  } else {
    for (std::size_t j = 0; j < param_count(model); ++j) out.push_back(j);
  }
  return out;
}

double eval_plain(const ModelParams& p, std::span<const double> x) {
  ModelParams q = p;
  q.variant = Variant::Plain;
  const auto theta = q.pack();
  return eval_meshless<double>(q, theta, x);
}

double eval_pou(const ModelParams& p, std::span<const double> x) {
  ModelParams q = p;
  q.variant = Variant::Pou;
  const auto theta = q.pack();
  return eval_meshless<double>(q, theta, x);
}

double eval_fourier(const FourierParams& p, double x) {
  const auto theta = p.pack();
  const double xs[1] = {x};
  return eval_fourier<double>(p, theta, xs);
}

double eval(const Model& model, std::span<const double> x) {
  const auto theta = pack(model);
  return evaluate<double>(model, theta, x);
}

std::vector<double> eval_points(const Model& model, const PointSet& points) {
  const auto theta = pack(model);
  std::vector<double> out(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) out[i] = evaluate<double>(model, theta, points[i]);
  return out;
}

SpatialDerivs spatial_derivs(const Model& model, std::span<const double> x, int axis) {
  const int d = model_dim(model);
  if (axis < 0 || axis >= d || static_cast<int>(x.size()) != d) {
    throw UsageError("spatial_derivs: axis " + std::to_string(axis) + " outside [0, " + std::to_string(d) + ")");
  }
  const auto theta = pack(model);
  std::vector<HyperDual> th(theta.begin(), theta.end());
  std::array<HyperDual, kMaxDim> xs;
  for (int k = 0; k < d; ++k) xs[k] = k == axis ? hd_lift(x[k], 1.0, 1.0) : HyperDual(x[k]);
  const HyperDual u = evaluate<HyperDual>(model, th, std::span<const HyperDual>(xs.data(), d));
  return {u.v, u.d1, u.d12};
}

ModelParams init_nodes(const Geometry& domain, std::size_t n_interior, std::size_t n_fixed_per_segment,
                       std::span<const std::size_t> fixed_segments, KernelType kernel, Variant variant,
                       Rng& rng) {
  if (n_interior < 1) throw ConfigError("init_nodes: need at least one interior node");
  if (domain.measure() <= 0.0) throw ConfigError("init_nodes: empty domain");
  ModelParams m;
  m.dim = domain.dim();
  m.variant = variant;
  Rng kernel_rng = rng.split("kernel-init");
  m.kernel = make_kernel(kernel, kernel_rng);

  const auto lattice = domain.interior_lattice(n_interior);
  if (lattice.points.empty()) throw ConfigError("init_nodes: lattice has no interior points for " + domain.describe());
  m.free_X = lattice.points.coords();

  for (std::size_t s : fixed_segments) {
    const PointSet pts = domain.sample_segment(s, std::max<std::size_t>(n_fixed_per_segment, 1));
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const auto p = pts[i];
      // Shared corners of adjacent segments are only added once.
      bool duplicate = false;
      for (std::size_t j = 0; j + p.size() <= m.fixed_X.size() && !duplicate; j += p.size()) {
        duplicate = std::equal(p.begin(), p.end(), m.fixed_X.begin() + static_cast<std::ptrdiff_t>(j));
      }
      if (!duplicate) m.fixed_X.insert(m.fixed_X.end(), p.begin(), p.end());
    }
  }
  const std::size_t n = m.n_nodes();
  m.h.assign(n, lattice.spacing);
  m.U.assign(n, 0.0);
  m.validate();
  return m;
}

std::string_view variant_name(const Model& model) {
  if (const auto* m = std::get_if<ModelParams>(&model)) return m->variant == Variant::Plain ? "plain" : "pou";
  return "fourier";
}

nlohmann::json to_json(const Model& model) {
  nlohmann::json doc;
  doc["variant"] = std::string(variant_name(model));
  if (const auto* m = std::get_if<ModelParams>(&model)) {
    doc["dim"] = m->dim;
    doc["kernel"] = std::string(kernel_name(m->kernel.type));
    doc["fixed_X"] = m->fixed_X;
    doc["free_X"] = m->free_X;
    doc["h"] = m->h;
    doc["U"] = m->U;
    doc["mlp"] = m->kernel.mlp_params;
  } else {
    const auto& f = std::get<FourierParams>(model);
    doc["dim"] = 1;
    doc["lo"] = f.lo;
    doc["hi"] = f.hi;
    doc["a0"] = f.a0;
    doc["a"] = f.a;
    doc["b"] = f.b;
  }
  return doc;
}

Model model_from_json(const nlohmann::json& doc) {
  try {
    const std::string variant = doc.at("variant").get<std::string>();
    if (variant == "fourier") {
      FourierParams f;
      f.lo = doc.at("lo").get<double>();
      f.hi = doc.at("hi").get<double>();
      f.a0 = doc.at("a0").get<double>();
      f.a = doc.at("a").get<std::vector<double>>();
      f.b = doc.at("b").get<std::vector<double>>();
      if (f.a.size() != f.b.size() || f.a.empty() || !(f.hi > f.lo)) throw ConfigError("model.json: bad fourier block");
      return f;
    }
    if (variant != "plain" && variant != "pou") throw ConfigError("model.json: unknown variant '" + variant + "'");
    ModelParams m;
    m.variant = variant == "plain" ? Variant::Plain : Variant::Pou;
    m.dim = doc.at("dim").get<int>();
    m.kernel.type = parse_kernel(doc.at("kernel").get<std::string>());
    m.fixed_X = doc.at("fixed_X").get<std::vector<double>>();
    m.free_X = doc.at("free_X").get<std::vector<double>>();
    m.h = doc.at("h").get<std::vector<double>>();
    m.U = doc.at("U").get<std::vector<double>>();
    m.kernel.mlp_params = doc.value("mlp", std::vector<double>{});
    m.validate();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model.json: ") + e.what());
  }
}

namespace {

HyperDual seeded(double x, bool seed) { return seed ? hd_lift(x, 1.0, 1.0) : HyperDual(x); }

// Real-valued Taylor data of one node at one point; shared by every seeded axis.
struct NodePrep {
  HyperDual inv_h;
  std::array<double, kMaxDim> X{};
  std::array<Taylor3, kMaxDim> coord{};  // SoftplusPair per coordinate (softplus hat)
  Taylor3 outer{};                       // Exp of -q (Gaussian) or Softplus of the hat argument
};

NodePrep prepare_node(KernelType type, std::span<const double> x, const NodePrep& base, std::size_t d) {
  NodePrep p = base;
  std::array<double, kMaxDim> yv{};
  for (std::size_t k = 0; k < d; ++k) yv[k] = (x[k] - p.X[k]) * p.inv_h.v;
  if (type == KernelType::Gaussian) {
    double q = yv[0] * yv[0];
    for (std::size_t k = 1; k < d; ++k) q = q + yv[k] * yv[k];
    p.outer = unary_taylor(Op::Exp, -q);
  } else if (type == KernelType::SoftplusHat) {
    double sum = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      p.coord[k] = unary_taylor(Op::SoftplusPair, yv[k]);
      sum = k == 0 ? p.coord[k].f0 : sum + p.coord[k].f0;
    }
    p.outer = unary_taylor(Op::Softplus, (1.0 + 2.0 * static_cast<double>(d) * std::numbers::ln2) - sum);
  }
  return p;
}

// K(y) and dK/dy_k for the kernels with closed-form derivatives. The value
// is computed exactly as node_kernel computes it.
HyperDual kernel_with_gradient(KernelType type, std::span<const HyperDual> y, const NodePrep& p,
                               std::span<HyperDual> g) {
  switch (type) {
    case KernelType::Gaussian: {
      HyperDual q = y[0] * y[0];
      for (std::size_t k = 1; k < y.size(); ++k) q = q + y[k] * y[k];
      const HyperDual phi = chain(-q, p.outer.f0, p.outer.f1, p.outer.f2);
      for (std::size_t k = 0; k < y.size(); ++k) g[k] = -2.0 * (y[k] * phi);
      return phi;
    }
    case KernelType::SoftplusHat: {
      const double d = static_cast<double>(y.size());
      HyperDual sum;
      for (std::size_t k = 0; k < y.size(); ++k) {
        const Taylor3& t = p.coord[k];
        const HyperDual s = chain(y[k], t.f0, t.f1, t.f2);
        sum = k == 0 ? s : sum + s;
        g[k] = chain(y[k], t.f1, t.f2, t.f3);
      }
      const HyperDual arg = (1.0 + 2.0 * d * std::numbers::ln2) - sum;
      const Taylor3& t = p.outer;
      const double inv_norm = 1.0 / softplus(1.0);
      const HyperDual dk = inv_norm * chain(arg, t.f1, t.f2, t.f3);
      for (std::size_t k = 0; k < y.size(); ++k) g[k] = -(dk * g[k]);
      return inv_norm * chain(arg, t.f0, t.f1, t.f2);
    }
    case KernelType::ReluHat:
      g[0] = unary_partial(Op::Relu, y[0] + 1.0) - 2.0 * unary_partial(Op::Relu, y[0]) +
             unary_partial(Op::Relu, y[0] - 1.0);
      return relu_hat_unit(y[0]);
    case KernelType::Mlp:
      break;
  }
  throw UsageError("kernel_with_gradient: no closed form for this kernel");
}

// Records one node per entry of `axes`, out[j] being u(x) seeded along axes[j].
void record_meshless_fused(const ModelParams& m, Tape& tape, std::span<const Var> params, std::span<const double> x,
                           std::span<const int> axes, std::span<Var> out) {
  const auto L = m.layout();
  const std::size_t d = static_cast<std::size_t>(m.dim);
  const std::size_t nf = m.n_fixed();
  const std::size_t n = m.n_nodes();
  const bool pou = m.variant == Variant::Pou;

  thread_local std::vector<NodePrep> prep;
  thread_local std::vector<HyperDual> phi, dphi;  // dphi: d position entries then one width entry per node
  thread_local std::vector<std::uint32_t> parents;
  thread_local std::vector<HyperDual> partials;
  prep.resize(n);
  phi.resize(n);
  dphi.resize(n * (d + 1));
  for (std::size_t i = 0; i < n; ++i) {
    NodePrep base;
    base.inv_h = 1.0 / HyperDual(params[L.h + i].value());
    for (std::size_t k = 0; k < d; ++k) {
      base.X[k] = i < nf ? m.fixed_X[i * d + k] : params[L.x + (i - nf) * d + k].value();
    }
    prep[i] = prepare_node(m.kernel.type, x, base, d);
  }

  std::array<HyperDual, kMaxDim> xs{}, y{}, g{};
  for (std::size_t j = 0; j < axes.size(); ++j) {
    for (std::size_t k = 0; k < d; ++k) xs[k] = seeded(x[k], static_cast<int>(k) == axes[j]);
    HyperDual num, den;
    for (std::size_t i = 0; i < n; ++i) {
      const NodePrep& p = prep[i];
      for (std::size_t k = 0; k < d; ++k) y[k] = (xs[k] - HyperDual(p.X[k])) * p.inv_h;
      phi[i] = kernel_with_gradient(m.kernel.type, std::span<const HyperDual>(y.data(), d), p,
                                    std::span<HyperDual>(g.data(), d));
      HyperDual gy = g[0] * y[0];
      for (std::size_t k = 0; k < d; ++k) {
        dphi[i * (d + 1) + k] = -(g[k] * p.inv_h);
        if (k > 0) gy = gy + g[k] * y[k];
      }
      dphi[i * (d + 1) + d] = -(gy * p.inv_h);
      const HyperDual term = HyperDual(params[L.u + i].value()) * phi[i];
      if (i == 0) {
        num = term;
        den = phi[0];
      } else {
        num = num + term;
        den = den + phi[i];
      }
    }

    HyperDual u = num;
    HyperDual inv_den(1.0);
    if (pou) {
      if (!(den.v > kPouFloor)) {
        std::string where = "(";
        for (std::size_t k = 0; k < d; ++k) where += (k ? ", " : "") + std::to_string(x[k]);
        where += ")";
        throw EvalError("pou", den.v, "partition of unity: all kernels vanish at x = " + where);
      }
      u = num / den;
      inv_den = reciprocal(den);
    }

    parents.clear();
    partials.clear();
    for (std::size_t i = 0; i < n; ++i) {
      const double U = params[L.u + i].value();
      // d(num)/dp = U dphi/dp; under POU d(u)/dp = (U - u) dphi/dp / den.
      const HyperDual w = pou ? (HyperDual(U) - u) * inv_den : HyperDual(U);
      parents.push_back(params[L.u + i].index);
      partials.push_back(pou ? phi[i] * inv_den : phi[i]);
      parents.push_back(params[L.h + i].index);
      partials.push_back(w * dphi[i * (d + 1) + d]);
      if (i >= nf) {
        for (std::size_t k = 0; k < d; ++k) {
          parents.push_back(params[L.x + (i - nf) * d + k].index);
          partials.push_back(w * dphi[i * (d + 1) + k]);
        }
      }
    }
    out[j] = tape.nary(u, parents, partials);
  }
}

bool fusable(const Model& model) {
  const auto* m = std::get_if<ModelParams>(&model);
  return m && m->kernel.type != KernelType::Mlp;
}

}  // namespace

Var record_eval_generic(const Model& model, Tape& tape, std::span<const Var> params, std::span<const double> x,
                        int axis) {
  std::array<Var, kMaxDim> xs{};
  for (std::size_t k = 0; k < x.size(); ++k) xs[k] = tape.constant(seeded(x[k], static_cast<int>(k) == axis));
  return evaluate<Var>(model, params, std::span<const Var>(xs.data(), x.size()));
}

Var record_eval(const Model& model, Tape& tape, std::span<const Var> params, std::span<const double> x, int axis) {
  if (!fusable(model)) return record_eval_generic(model, tape, params, x, axis);
  Var out;
  record_meshless_fused(std::get<ModelParams>(model), tape, params, x, std::span<const int>(&axis, 1),
                        std::span<Var>(&out, 1));
  return out;
}

void record_eval_axes(const Model& model, Tape& tape, std::span<const Var> params, std::span<const double> x,
                      std::span<Var> out) {
  const int d = model_dim(model);
  if (static_cast<int>(x.size()) != d || static_cast<int>(out.size()) != d) {
    throw UsageError("record_eval_axes: point and output must have " + std::to_string(d) + " entries");
  }
  if (!fusable(model)) {
    for (int k = 0; k < d; ++k) out[k] = record_eval_generic(model, tape, params, x, k);
    return;
  }
  constexpr std::array<int, kMaxDim> axes{0, 1, 2};
  record_meshless_fused(std::get<ModelParams>(model), tape, params, x, std::span<const int>(axes.data(), d), out);
}

}  // namespace spinn
