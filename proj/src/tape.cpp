#include "spinn/tape.hpp"

#include <string>

namespace spinn {

void Tape::reset() {
  values_.clear();
  parents_.clear();
  partials_.clear();
  slot_of_.clear();
  adjoints_.clear();
  nary_ranges_.clear();
  nary_parents_.clear();
  nary_partials_.clear();
  swept_ = false;
}

std::vector<Var> Tape::leaves(std::span<const double> values) {
  std::vector<Var> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(leaf(v));
  return out;
}

Var Tape::div(Var a, Var b) {
  const HyperDual x = values_[a.index], y = values_[b.index];
  const HyperDual r = reciprocal(y);
  return push(x / y, a.index, b.index, r, -(x * r * r));
}

Var Tape::div_const(Var a, double s) {
  if (s == 0.0) throw EvalError("div", s, "div: division by constant zero");
  const HyperDual x = values_[a.index];
  return push(HyperDual(x.v / s, x.d1 / s, x.d2 / s, x.d12 / s), a.index, kNoParent, HyperDual(1.0 / s), {});
}

Var Tape::const_div(double s, Var a) {
  const HyperDual x = values_[a.index];
  const HyperDual r = reciprocal(x);
  return push(HyperDual(s) / x, a.index, kNoParent, -s * (r * r), {});
}

Var Tape::nary(const HyperDual& value, std::span<const std::uint32_t> parents, std::span<const HyperDual> partials) {
  if (parents.size() != partials.size()) throw UsageError("Tape::nary: parents and partials differ in size");
  const auto begin = static_cast<std::uint32_t>(nary_parents_.size());
  nary_parents_.insert(nary_parents_.end(), parents.begin(), parents.end());
  nary_partials_.insert(nary_partials_.end(), partials.begin(), partials.end());
  nary_ranges_.push_back({begin, static_cast<std::uint32_t>(nary_parents_.size())});
  return push(value, kNary, static_cast<std::uint32_t>(nary_ranges_.size() - 1), {}, {});
}

Var Tape::slot(Var a, Slot s) {
  const HyperDual& x = values_[a.index];
  double component = 0.0;
  switch (s) {
    case Slot::Value: component = x.v; break;
    case Slot::D1: component = x.d1; break;
    case Slot::D2: component = x.d2; break;
    case Slot::D12: component = x.d12; break;
  }
  Var out = push(HyperDual(component), a.index, kNoParent, {}, {});
  slot_of_.back() = static_cast<std::uint8_t>(s);
  return out;
}

namespace {

double& component(HyperDual& h, std::uint8_t slot) {
  switch (slot) {
    case 0: return h.v;
    case 1: return h.d1;
    case 2: return h.d2;
    default: return h.d12;
  }
}

// adj(parent) += adj(child) * M(g)^T, where M(g) is multiplication by g.
inline void accumulate(HyperDual& parent, const HyperDual& g, const HyperDual& c) {
  parent.v += c.v * g.v + c.d1 * g.d1 + c.d2 * g.d2 + c.d12 * g.d12;
  parent.d1 += c.d1 * g.v + c.d12 * g.d2;
  parent.d2 += c.d2 * g.v + c.d12 * g.d1;
  parent.d12 += c.d12 * g.v;
}

}  // namespace

void Tape::backward(Var output, Slot seed) {
  if (values_.empty() || output.tape != this || output.index >= values_.size()) {
    throw UsageError("Tape::backward: no recorded forward computation for this output");
  }
  adjoints_.assign(values_.size(), HyperDual{});
  component(adjoints_[output.index], static_cast<std::uint8_t>(seed)) = 1.0;
  for (std::size_t k = output.index + 1; k-- > 0;) {
    const HyperDual c = adjoints_[k];
    if (c == HyperDual{}) continue;
    const auto [p0, p1] = parents_[k];
    if (p0 == kNoParent) continue;
    if (p0 == kNary) {
      const auto [b, e] = nary_ranges_[p1];
      for (std::uint32_t j = b; j < e; ++j) accumulate(adjoints_[nary_parents_[j]], nary_partials_[j], c);
      continue;
    }
    if (slot_of_[k] != kAlgebraic) {
      component(adjoints_[p0], slot_of_[k]) += c.v;
      continue;
    }
    accumulate(adjoints_[p0], partials_[k][0], c);
    if (p1 != kNoParent) accumulate(adjoints_[p1], partials_[k][1], c);
  }
  swept_ = true;
}

const HyperDual& Tape::adjoint(Var v) const {
  if (!swept_) throw UsageError("Tape::adjoint: backward has not been run");
  return adjoints_.at(v.index);
}

std::vector<double> Tape::gradient(std::span<const Var> leaves) const {
  std::vector<double> out(leaves.size(), 0.0);
  accumulate_gradient(leaves, 1.0, out);
  return out;
}

void Tape::accumulate_gradient(std::span<const Var> leaves, double scale, std::span<double> out) const {
  if (!swept_) throw UsageError("Tape::gradient: backward has not been run");
  if (out.size() != leaves.size()) throw UsageError("Tape::gradient: output size mismatch");
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    if (leaves[i].index < adjoints_.size()) out[i] += scale * adjoints_[leaves[i].index].v;
  }
}

}  // namespace spinn
