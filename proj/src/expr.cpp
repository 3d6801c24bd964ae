#include "fk/expr.hpp"

#include <cmath>
#include <numbers>

#include "fk/errors.hpp"

namespace fk {

VarTable::VarTable(int d, int m, int k, bool allow_t, bool allow_x, bool allow_y, bool allow_z)
    : d_(d), m_(m), k_(k) {
  if (allow_t) names_["t"] = t();
  if (allow_x) {
    for (int i = 0; i < d; ++i) names_["x" + std::to_string(i)] = x(i);
    names_["x"] = x(0);
  }
  if (allow_y) {
    for (int i = 0; i < m; ++i) names_["y" + std::to_string(i)] = y(i);
    names_["y"] = y(0);
  }
  if (allow_z) {
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < k; ++j) names_["z" + std::to_string(i) + "_" + std::to_string(j)] = z(i, j);
    }
    names_["z"] = z(0, 0);
  }
}

int VarTable::lookup(const std::string& name) const {
  const auto it = names_.find(name);
  return it == names_.end() ? -1 : it->second;
}

struct Expr::Node {
  Op op = Op::Const;
  double value = 0.0;
  int slot = -1;
  std::vector<Expr> args;
  std::vector<double> coeffs;
};

Expr::Expr() : Expr(constant(0.0)) {}

Expr Expr::make(Op op, std::vector<Expr> args, double value, std::vector<double> coeffs) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->value = value;
  n->args = std::move(args);
  n->coeffs = std::move(coeffs);
  return Expr(std::move(n));
}

Expr Expr::constant(double v) {
  auto n = std::make_shared<Node>();
  n->op = Op::Const;
  n->value = v;
  return Expr(std::move(n));
}

Expr Expr::variable(int slot) {
  auto n = std::make_shared<Node>();
  n->op = Op::Var;
  n->slot = slot;
  return Expr(std::move(n));
}

bool Expr::is_zero() const { return node_->op == Op::Const && node_->value == 0.0; }

double Expr::eval(const double* env) const {
  const Node& n = *node_;
  switch (n.op) {
    case Op::Const: return n.value;
    case Op::Var: return env[n.slot];
    case Op::Add: {
      double s = 0.0;
      for (const auto& a : n.args) s += a.eval(env);
      return s;
    }
    case Op::Mul: {
      double s = 1.0;
      for (const auto& a : n.args) s *= a.eval(env);
      return s;
    }
    case Op::Div: return n.args[0].eval(env) / n.args[1].eval(env);
    case Op::Neg: return -n.args[0].eval(env);
    case Op::Pow: {
      const double b = n.args[0].eval(env);
      double r = 1.0;
      for (int i = 0; i < static_cast<int>(n.value); ++i) r *= b;
      return r;
    }
    case Op::Poly: {
      const double v = n.args[0].eval(env);
      double r = 0.0;
      for (auto it = n.coeffs.rbegin(); it != n.coeffs.rend(); ++it) r = r * v + *it;
      return r;
    }
    case Op::Cos: return std::cos(n.args[0].eval(env));
    case Op::Sin: return std::sin(n.args[0].eval(env));
    case Op::Exp: return std::exp(n.args[0].eval(env));
    case Op::Abs: return std::abs(n.args[0].eval(env));
    case Op::Pos: return std::max(n.args[0].eval(env), 0.0);
    case Op::Sign: {
      const double v = n.args[0].eval(env);
      return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
    }
    case Op::Step: return n.args[0].eval(env) > 0.0 ? 1.0 : 0.0;
    case Op::Clip: {
      const double v = n.args[0].eval(env);
      const double lo = n.args[1].eval(env);
      const double hi = n.args[2].eval(env);
      return v < lo ? lo : (v > hi ? hi : v);
    }
  }
  return 0.0;
}

bool Expr::uses(int lo, int hi) const {
  if (node_->op == Op::Var) return node_->slot >= lo && node_->slot < hi;
  for (const auto& a : node_->args) {
    if (a.uses(lo, hi)) return true;
  }
  return false;
}

Expr Expr::derivative(int slot) const {
  const Node& n = *node_;
  const auto d0 = [&] { return n.args[0].derivative(slot); };
  switch (n.op) {
    case Op::Const: return constant(0.0);
    case Op::Var: return constant(n.slot == slot ? 1.0 : 0.0);
    case Op::Add: {
      Expr s = constant(0.0);
      for (const auto& a : n.args) s = add(s, a.derivative(slot));
      return s;
    }
    case Op::Mul: {
      Expr s = constant(0.0);
      for (std::size_t i = 0; i < n.args.size(); ++i) {
        Expr term = n.args[i].derivative(slot);
        for (std::size_t j = 0; j < n.args.size(); ++j) {
          if (j != i) term = mul(term, n.args[j]);
        }
        s = add(s, term);
      }
      return s;
    }
    case Op::Div: {
      // (a/b)' = a'/b - a b' / b^2
      const Expr& a = n.args[0];
      const Expr& b = n.args[1];
      Expr first = make(Op::Div, {a.derivative(slot), b});
      Expr second = make(Op::Div, {mul(a, b.derivative(slot)), make(Op::Pow, {b}, 2.0)});
      return add(first, neg(second));
    }
    case Op::Neg: {
      return neg(d0());
    }
    case Op::Pow: {
      const int p = static_cast<int>(n.value);
      if (p == 0) return constant(0.0);
      Expr base = p == 1 ? constant(1.0) : make(Op::Pow, {n.args[0]}, p - 1.0);
      return mul(mul(constant(p), base), d0());
    }
    case Op::Poly: {
      std::vector<double> c;
      for (std::size_t i = 1; i < n.coeffs.size(); ++i) c.push_back(static_cast<double>(i) * n.coeffs[i]);
      if (c.empty()) return constant(0.0);
      return mul(make(Op::Poly, {n.args[0]}, 0.0, c), d0());
    }
    case Op::Cos: return mul(neg(make(Op::Sin, {n.args[0]})), d0());
    case Op::Sin: return mul(make(Op::Cos, {n.args[0]}), d0());
    case Op::Exp: return mul(*this, d0());
    case Op::Abs: return mul(make(Op::Sign, {n.args[0]}), d0());
    case Op::Pos: return mul(make(Op::Step, {n.args[0]}), d0());
    case Op::Sign:
    case Op::Step: return constant(0.0);
    case Op::Clip: {
      // clip(e, lo, hi) = lo + pos(e - lo) - pos(e - hi)
      const Expr& e = n.args[0];
      const Expr& lo = n.args[1];
      const Expr& hi = n.args[2];
      const Expr de = d0();
      const Expr dlo = lo.derivative(slot);
      const Expr dhi = hi.derivative(slot);
      Expr above_lo = make(Op::Step, {add(e, neg(lo))});
      Expr above_hi = make(Op::Step, {add(e, neg(hi))});
      Expr r = add(dlo, mul(above_lo, add(de, neg(dlo))));
      return add(r, neg(mul(above_hi, add(de, neg(dhi)))));
    }
  }
  return constant(0.0);
}

namespace {

[[noreturn]] void bad(const std::string& where, const std::string& what) {
  fail(ErrorKind::InvalidConfig, "config", where + ": " + what);
}

const std::map<std::string, Expr::Op>& unary_ops() {
  static const std::map<std::string, Expr::Op> ops = {
      {"neg", Expr::Op::Neg}, {"cos", Expr::Op::Cos}, {"sin", Expr::Op::Sin},   {"exp", Expr::Op::Exp},
      {"abs", Expr::Op::Abs}, {"pos", Expr::Op::Pos}, {"sign", Expr::Op::Sign}, {"step", Expr::Op::Step},
  };
  return ops;
}

}  // namespace

Expr Expr::parse(const nlohmann::json& j, const VarTable& vars, const std::string& where) {
  if (j.is_number()) {
    const double v = j.get<double>();
    if (!std::isfinite(v)) bad(where, "non-finite constant");
    return constant(v);
  }
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    if (name == "pi") return constant(std::numbers::pi);
    const int slot = vars.lookup(name);
    if (slot < 0) bad(where, "unknown variable '" + name + "'");
    return variable(slot);
  }
  if (!j.is_object() || j.size() != 1) bad(where, "expected a number, a variable or a one-key operator object");
  const std::string op = j.begin().key();
  const nlohmann::json& a = j.begin().value();
  const std::string sub = where + "." + op;
  auto list = [&](std::size_t min_size) {
    if (!a.is_array() || a.size() < min_size) bad(sub, "expected a list of at least " + std::to_string(min_size));
    std::vector<Expr> out;
    for (std::size_t i = 0; i < a.size(); ++i) out.push_back(parse(a[i], vars, sub + "[" + std::to_string(i) + "]"));
    return out;
  };
  if (op == "add" || op == "mul") return make(op == "add" ? Op::Add : Op::Mul, list(1));
  if (op == "sub" || op == "div") {
    if (!a.is_array() || a.size() != 2) bad(sub, "expected two operands");
    auto args = list(2);
    return op == "sub" ? make(Op::Add, {args[0], neg(args[1])}) : make(Op::Div, args);
  }
  if (op == "clip") {
    if (!a.is_array() || a.size() != 3) bad(sub, "expected [e, lo, hi]");
    return make(Op::Clip, list(3));
  }
  if (op == "pow") {
    if (!a.is_array() || a.size() != 2 || !a[1].is_number_integer() || a[1].get<long long>() < 0 ||
        a[1].get<long long>() > 64) {
      bad(sub, "expected [e, n] with integer 0 <= n <= 64");
    }
    return make(Op::Pow, {parse(a[0], vars, sub + "[0]")}, static_cast<double>(a[1].get<long long>()));
  }
  if (op == "poly") {
    if (!a.is_object() || a.size() != 2 || !a.contains("of") || !a.contains("coeffs") || !a["coeffs"].is_array()) {
      bad(sub, "expected {\"of\": e, \"coeffs\": [...]}");
    }
    std::vector<double> c;
    for (const auto& v : a["coeffs"]) {
      if (!v.is_number() || !std::isfinite(v.get<double>())) bad(sub, "coefficients must be finite numbers");
      c.push_back(v.get<double>());
    }
    return make(Op::Poly, {parse(a["of"], vars, sub + ".of")}, 0.0, c);
  }
  const auto it = unary_ops().find(op);
  if (it == unary_ops().end()) bad(where, "unknown operator '" + op + "'");
  return make(it->second, {parse(a, vars, sub)});
}

Expr Expr::add(const Expr& a, const Expr& b) {
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  if (a.node_->op == Op::Const && b.node_->op == Op::Const) return constant(a.node_->value + b.node_->value);
  return make(Op::Add, {a, b});
}

Expr Expr::mul(const Expr& a, const Expr& b) {
  if (a.is_zero() || b.is_zero()) return constant(0.0);
  if (a.node_->op == Op::Const && a.node_->value == 1.0) return b;
  if (b.node_->op == Op::Const && b.node_->value == 1.0) return a;
  if (a.node_->op == Op::Const && b.node_->op == Op::Const) return constant(a.node_->value * b.node_->value);
  return make(Op::Mul, {a, b});
}

Expr Expr::neg(const Expr& a) {
  if (a.node_->op == Op::Const) return constant(-a.node_->value);
  return make(Op::Neg, {a});
}

}  // namespace fk
