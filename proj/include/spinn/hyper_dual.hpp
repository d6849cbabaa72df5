#pragma once

#include <array>
#include <cmath>
#include <span>
#include <string_view>

#include "spinn/errors.hpp"

namespace spinn {

// Second-order forward-mode scalar: value, two first-derivative slots along
// seed directions 1 and 2, and the cross term. Seeding both slots along the
// same coordinate gives d1 = d2 = f'(x) and d12 = f''(x).
struct HyperDual {
  double v = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
  double d12 = 0.0;

  constexpr HyperDual() = default;
  constexpr HyperDual(double value) : v(value) {}  // NOLINT: implicit constant lift
  constexpr HyperDual(double value, double s1, double s2, double s12 = 0.0)
      : v(value), d1(s1), d2(s2), d12(s12) {}

  friend bool operator==(const HyperDual&, const HyperDual&) = default;
};

inline double real_part(double x) { return x; }
inline double real_part(const HyperDual& x) { return x.v; }

constexpr HyperDual hd_lift(double x, double s1, double s2) { return {x, s1, s2, 0.0}; }

enum class Op {
  Add,
  Sub,
  Mul,
  Div,
  Neg,
  Exp,
  Log,
  Sin,
  Cos,
  Tanh,
  Sqrt,
  Pow,
  Softplus,
  Sigmoid,
  Relu,
  SoftplusPair,  // softplus(x) + softplus(-x)
};

std::string_view op_name(Op op);

// Value and first three derivatives of a unary primitive at a real point.
struct Taylor3 {
  double f0, f1, f2, f3;
};

// Throws EvalError on a domain violation. `param` is the exponent for Op::Pow
// and ignored otherwise.
Taylor3 unary_taylor(Op op, double x, double param = 0.0);

// Propagates a unary function with known value/derivatives through `a`.
constexpr HyperDual chain(const HyperDual& a, double f0, double f1, double f2) {
  return {f0, f1 * a.d1, f1 * a.d2, f1 * a.d12 + f2 * a.d1 * a.d2};
}

inline HyperDual apply_unary(Op op, const HyperDual& a, double param = 0.0) {
  const Taylor3 t = unary_taylor(op, a.v, param);
  return chain(a, t.f0, t.f1, t.f2);
}

// Hyper-dual valued derivative f'(a); used as the local partial on the tape.
inline HyperDual unary_partial(Op op, const HyperDual& a, double param = 0.0) {
  const Taylor3 t = unary_taylor(op, a.v, param);
  return chain(a, t.f1, t.f2, t.f3);
}

constexpr HyperDual operator+(const HyperDual& a, const HyperDual& b) {
  return {a.v + b.v, a.d1 + b.d1, a.d2 + b.d2, a.d12 + b.d12};
}
constexpr HyperDual operator-(const HyperDual& a, const HyperDual& b) {
  return {a.v - b.v, a.d1 - b.d1, a.d2 - b.d2, a.d12 - b.d12};
}
constexpr HyperDual operator-(const HyperDual& a) { return {-a.v, -a.d1, -a.d2, -a.d12}; }
constexpr HyperDual operator*(const HyperDual& a, const HyperDual& b) {
  return {a.v * b.v, a.v * b.d1 + a.d1 * b.v, a.v * b.d2 + a.d2 * b.v,
          a.v * b.d12 + a.d1 * b.d2 + a.d2 * b.d1 + a.d12 * b.v};
}
constexpr HyperDual operator*(double s, const HyperDual& a) { return {s * a.v, s * a.d1, s * a.d2, s * a.d12}; }
constexpr HyperDual operator*(const HyperDual& a, double s) { return s * a; }

HyperDual reciprocal(const HyperDual& b);

// Value slot is a.v / b.v exactly, matching real division.
HyperDual operator/(const HyperDual& a, const HyperDual& b);

inline HyperDual& operator+=(HyperDual& a, const HyperDual& b) { return a = a + b; }
inline HyperDual& operator-=(HyperDual& a, const HyperDual& b) { return a = a - b; }
inline HyperDual& operator*=(HyperDual& a, const HyperDual& b) { return a = a * b; }

inline HyperDual exp(const HyperDual& a) { return apply_unary(Op::Exp, a); }
inline HyperDual log(const HyperDual& a) { return apply_unary(Op::Log, a); }
inline HyperDual sin(const HyperDual& a) { return apply_unary(Op::Sin, a); }
inline HyperDual cos(const HyperDual& a) { return apply_unary(Op::Cos, a); }
inline HyperDual tanh(const HyperDual& a) { return apply_unary(Op::Tanh, a); }
inline HyperDual sqrt(const HyperDual& a) { return apply_unary(Op::Sqrt, a); }
inline HyperDual pow(const HyperDual& a, double p) { return apply_unary(Op::Pow, a, p); }
inline HyperDual softplus(const HyperDual& a) { return apply_unary(Op::Softplus, a); }
inline HyperDual sigmoid(const HyperDual& a) { return apply_unary(Op::Sigmoid, a); }
inline HyperDual relu(const HyperDual& a) { return apply_unary(Op::Relu, a); }
inline HyperDual softplus_pair(const HyperDual& a) { return apply_unary(Op::SoftplusPair, a); }

// Dispatch by operation id. Binary ops take two arguments, Pow takes the base
// and a constant exponent carried in the value slot of the second argument.
HyperDual hd_apply(Op op, std::span<const HyperDual> args);

// Real overloads, so templates instantiated for double, HyperDual and tape
// variables can call the same unqualified names.
double softplus(double z);
double sigmoid(double z);
double softplus_pair(double z);
inline double relu(double z) { return z > 0.0 ? z : 0.0; }
inline double exp(double x) { return std::exp(x); }
inline double log(double x) { return std::log(x); }
inline double sin(double x) { return std::sin(x); }
inline double cos(double x) { return std::cos(x); }
inline double tanh(double x) { return std::tanh(x); }
inline double sqrt(double x) { return std::sqrt(x); }
inline double pow(double x, double p) { return std::pow(x, p); }

}  // namespace spinn
