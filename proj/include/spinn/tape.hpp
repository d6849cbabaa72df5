#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "spinn/hyper_dual.hpp"

namespace spinn {

class Tape;

// Which component of a hyper-dual node a real-valued quantity refers to.
enum class Slot : std::uint8_t { Value = 0, D1 = 1, D2 = 2, D12 = 3 };

// Handle to a node recorded on a Tape. Arithmetic on Vars records new nodes.
struct Var {
  Tape* tape = nullptr;
  std::uint32_t index = 0;

  const HyperDual& hd() const;
  double value() const { return hd().v; }
};

// Append-only record of hyper-dual operations with eagerly stored local
// partials. Each node has at most two parents; the partial with respect to a
// parent is itself a hyper-dual number g, and the node's 4-component value is
// g times the parent in the hyper-dual algebra. The backward pass therefore
// applies the transposed multiplication by g, which differentiates every
// component (value and derivative slots) of the forward computation.
//
// Not thread-safe; every worker owns its own tape.
class Tape {
 public:
  static constexpr std::uint32_t kNoParent = std::numeric_limits<std::uint32_t>::max();

  void reset();
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  // Leaves carry real parameter values with zero derivative slots.
  Var leaf(double value) { return push(HyperDual(value), kNoParent, kNoParent, {}, {}); }
  std::vector<Var> leaves(std::span<const double> values);
  Var constant(const HyperDual& value) { return push(value, kNoParent, kNoParent, {}, {}); }

  Var unary(Op op, Var a, double param = 0.0) {
    const HyperDual x = values_[a.index];
    const Taylor3 t = unary_taylor(op, x.v, param);
    return push(chain(x, t.f0, t.f1, t.f2), a.index, kNoParent, chain(x, t.f1, t.f2, t.f3), {});
  }
  Var add(Var a, Var b) {
    return push(values_[a.index] + values_[b.index], a.index, b.index, HyperDual(1.0), HyperDual(1.0));
  }
  Var sub(Var a, Var b) {
    return push(values_[a.index] - values_[b.index], a.index, b.index, HyperDual(1.0), HyperDual(-1.0));
  }
  Var mul(Var a, Var b) {
    const HyperDual x = values_[a.index], y = values_[b.index];
    return push(x * y, a.index, b.index, y, x);
  }
  Var div(Var a, Var b);
  Var scale(Var a, double s) { return push(s * values_[a.index], a.index, kNoParent, HyperDual(s), {}); }
  Var div_const(Var a, double s);
  Var const_div(double s, Var a);
  Var shift(Var a, double s) { return push(values_[a.index] + HyperDual(s), a.index, kNoParent, HyperDual(1.0), {}); }

  // Node with any number of parents; partials[j] is d(node)/d(parents[j]).
  Var nary(const HyperDual& value, std::span<const std::uint32_t> parents, std::span<const HyperDual> partials);

  // New real-valued node equal to one component of `a`.
  Var slot(Var a, Slot s);

  // Reverse sweep from `output`, seeding the adjoint of its `seed` component
  // with 1. Throws UsageError when nothing has been recorded.
  void backward(Var output, Slot seed = Slot::Value);

  const HyperDual& value(std::uint32_t i) const { return values_[i]; }
  const HyperDual& adjoint(Var v) const;

  // d(output)/d(leaf) for each leaf; leaves not reached by the output give 0.
  std::vector<double> gradient(std::span<const Var> leaves) const;
  // Accumulates scale * d(output)/d(leaf) into `out`.
  void accumulate_gradient(std::span<const Var> leaves, double scale, std::span<double> out) const;

 private:
  Var push(const HyperDual& value, std::uint32_t p0, std::uint32_t p1, const HyperDual& g0,
           const HyperDual& g1) {
    values_.push_back(value);
    parents_.push_back({p0, p1});
    partials_.push_back({g0, g1});
    slot_of_.push_back(kAlgebraic);
    return Var{this, static_cast<std::uint32_t>(values_.size() - 1)};
  }

  static constexpr std::uint8_t kAlgebraic = 0xFF;
  static constexpr std::uint32_t kNary = kNoParent - 1;

  std::vector<HyperDual> values_;
  std::vector<std::array<std::uint32_t, 2>> parents_;
  std::vector<std::array<HyperDual, 2>> partials_;
  std::vector<std::uint8_t> slot_of_;
  std::vector<HyperDual> adjoints_;
  // Parent lists of n-ary nodes; such nodes store {kNary, range index}.
  std::vector<std::array<std::uint32_t, 2>> nary_ranges_;
  std::vector<std::uint32_t> nary_parents_;
  std::vector<HyperDual> nary_partials_;
  bool swept_ = false;
};

inline const HyperDual& Var::hd() const { return tape->value(index); }
inline double real_part(Var v) { return v.value(); }

inline Var operator+(Var a, Var b) { return a.tape->add(a, b); }
inline Var operator-(Var a, Var b) { return a.tape->sub(a, b); }
inline Var operator*(Var a, Var b) { return a.tape->mul(a, b); }
inline Var operator/(Var a, Var b) { return a.tape->div(a, b); }
inline Var operator-(Var a) { return a.tape->scale(a, -1.0); }
inline Var operator+(Var a, double s) { return a.tape->shift(a, s); }
inline Var operator+(double s, Var a) { return a.tape->shift(a, s); }
inline Var operator-(Var a, double s) { return a.tape->shift(a, -s); }
inline Var operator-(double s, Var a) { return a.tape->shift(a.tape->scale(a, -1.0), s); }
inline Var operator*(Var a, double s) { return a.tape->scale(a, s); }
inline Var operator*(double s, Var a) { return a.tape->scale(a, s); }
inline Var operator/(Var a, double s) { return a.tape->div_const(a, s); }
inline Var operator/(double s, Var a) { return a.tape->const_div(s, a); }
inline Var& operator+=(Var& a, Var b) { return a = a + b; }
inline Var& operator-=(Var& a, Var b) { return a = a - b; }
inline Var& operator*=(Var& a, Var b) { return a = a * b; }

inline Var exp(Var a) { return a.tape->unary(Op::Exp, a); }
inline Var log(Var a) { return a.tape->unary(Op::Log, a); }
inline Var sin(Var a) { return a.tape->unary(Op::Sin, a); }
inline Var cos(Var a) { return a.tape->unary(Op::Cos, a); }
inline Var tanh(Var a) { return a.tape->unary(Op::Tanh, a); }
inline Var sqrt(Var a) { return a.tape->unary(Op::Sqrt, a); }
inline Var pow(Var a, double p) { return a.tape->unary(Op::Pow, a, p); }
inline Var softplus(Var a) { return a.tape->unary(Op::Softplus, a); }
inline Var sigmoid(Var a) { return a.tape->unary(Op::Sigmoid, a); }
inline Var relu(Var a) { return a.tape->unary(Op::Relu, a); }
inline Var softplus_pair(Var a) { return a.tape->unary(Op::SoftplusPair, a); }

}  // namespace spinn
