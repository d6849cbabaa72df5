#include "spinn/hyper_dual.hpp"

#include <algorithm>
#include <sstream>

namespace spinn {

std::string_view op_name(Op op) {
  switch (op) {
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Div: return "div";
    case Op::Neg: return "neg";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Tanh: return "tanh";
    case Op::Sqrt: return "sqrt";
    case Op::Pow: return "pow";
    case Op::Softplus: return "softplus";
    case Op::Sigmoid: return "sigmoid";
    case Op::Relu: return "relu";
    case Op::SoftplusPair: return "softplus_pair";
  }
  return "?";
}

namespace {

[[noreturn]] void domain_error(Op op, double x, const char* requirement) {
  std::ostringstream msg;
  msg << op_name(op) << ": argument " << x << " violates " << requirement;
  throw EvalError(std::string(op_name(op)), x, msg.str());
}

bool is_integer(double p) { return std::floor(p) == p; }

}  // namespace

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double softplus_pair(double z) { return std::abs(z) + 2.0 * std::log1p(std::exp(-std::abs(z))); }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Taylor3 unary_taylor(Op op, double x, double param) {
  switch (op) {
    case Op::Neg:
      return {-x, -1.0, 0.0, 0.0};
    case Op::Exp: {
      const double e = std::exp(x);
      return {e, e, e, e};
    }
    case Op::Log: {
      if (!(x > 0.0)) domain_error(op, x, "x > 0");
      const double r = 1.0 / x;
      return {std::log(x), r, -r * r, 2.0 * r * r * r};
    }
    case Op::Sin: {
      const double s = std::sin(x), c = std::cos(x);
      return {s, c, -s, -c};
    }
    case Op::Cos: {
      const double s = std::sin(x), c = std::cos(x);
      return {c, -s, -c, s};
    }
    case Op::Tanh: {
      const double t = std::tanh(x);
      const double sech2 = 1.0 - t * t;
      return {t, sech2, -2.0 * t * sech2, sech2 * (6.0 * t * t - 2.0)};
    }
    case Op::Sqrt: {
      if (!(x > 0.0)) domain_error(op, x, "x > 0");
      const double r = std::sqrt(x);
      return {r, 0.5 / r, -0.25 / (r * x), 0.375 / (r * x * x)};
    }
    case Op::Pow: {
      if (!(x > 0.0) && !is_integer(param)) domain_error(op, x, "x > 0 for non-integer exponent");
      if (x == 0.0 && param < 3.0) {
        // Integer exponents below 3 have polynomial derivatives that are
        // well defined at zero; avoid 0^negative.
        const double p = param;
        if (p < 0.0) domain_error(op, x, "x != 0 for negative exponent");
        if (p == 0.0) return {1.0, 0.0, 0.0, 0.0};
        if (p == 1.0) return {0.0, 1.0, 0.0, 0.0};
        return {0.0, 0.0, 2.0, 0.0};
      }
      const double p = param;
      return {std::pow(x, p), p * std::pow(x, p - 1.0), p * (p - 1.0) * std::pow(x, p - 2.0),
              p * (p - 1.0) * (p - 2.0) * std::pow(x, p - 3.0)};
    }
    case Op::Softplus: {
      const double e = std::exp(-std::abs(x));
      const double s = x >= 0.0 ? 1.0 / (1.0 + e) : e / (1.0 + e);
      const double s1 = s * (1.0 - s);
      return {std::max(x, 0.0) + std::log1p(e), s, s1, s1 * (1.0 - 2.0 * s)};
    }
    case Op::SoftplusPair: {
      const double e = std::exp(-std::abs(x));
      const double p = e / ((1.0 + e) * (1.0 + e));
      const double t = std::copysign((1.0 - e) / (1.0 + e), x);
      return {std::abs(x) + 2.0 * std::log1p(e), t, 2.0 * p, -2.0 * p * t};
    }
    case Op::Sigmoid: {
      const double s = sigmoid(x);
      const double s1 = s * (1.0 - s);
      const double s2 = s1 * (1.0 - 2.0 * s);
      return {s, s1, s2, s1 * (1.0 - 6.0 * s + 6.0 * s * s)};
    }
    case Op::Relu:
      return x > 0.0 ? Taylor3{x, 1.0, 0.0, 0.0} : Taylor3{0.0, 0.0, 0.0, 0.0};
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div:
      break;
  }
  throw UsageError("unary_taylor: " + std::string(op_name(op)) + " is not a unary operation");
}

HyperDual reciprocal(const HyperDual& b) {
  if (b.v == 0.0) domain_error(Op::Div, b.v, "nonzero denominator");
  const double r = 1.0 / b.v;
  return chain(b, r, -r * r, 2.0 * r * r * r);
}

HyperDual operator/(const HyperDual& a, const HyperDual& b) {
  HyperDual q = a * reciprocal(b);
  q.v = a.v / b.v;
  return q;
}

HyperDual hd_apply(Op op, std::span<const HyperDual> args) {
  const auto need = [&](std::size_t n) {
    if (args.size() != n) {
      throw UsageError("hd_apply: " + std::string(op_name(op)) + " expects " + std::to_string(n) +
                       " arguments, got " + std::to_string(args.size()));
    }
  };
  switch (op) {
    case Op::Add: need(2); return args[0] + args[1];
    case Op::Sub: need(2); return args[0] - args[1];
    case Op::Mul: need(2); return args[0] * args[1];
    case Op::Div: need(2); return args[0] / args[1];
    case Op::Pow: need(2); return pow(args[0], args[1].v);
    default: need(1); return apply_unary(op, args[0]);
  }
}

}  // namespace spinn
