#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

namespace fk {

/// Names of the variables an expression may use and their slots in the
/// evaluation environment.
///
/// Layout: t, x0..x{d-1}, y0..y{m-1}, z{i}_{j} (column-major m x k).
/// "x", "y" and "z" alias x0, y0 and z0_0.
class VarTable {
 public:
  VarTable(int d, int m, int k, bool allow_t = true, bool allow_x = true, bool allow_y = true, bool allow_z = true);

  int size() const noexcept { return 1 + d_ + m_ + m_ * k_; }
  int t() const noexcept { return 0; }
  int x(int i) const noexcept { return 1 + i; }
  int y(int i) const noexcept { return 1 + d_ + i; }
  int z(int i, int j) const noexcept { return 1 + d_ + m_ + i + j * m_; }
  /// Slot of a name, or -1.
  int lookup(const std::string& name) const;

 private:
  int d_, m_, k_;
  std::map<std::string, int> names_;
};

/// Closed-form expression tree over a VarTable.
///
/// JSON syntax: a number, a variable name (or "pi"), or a one-key object
///   {"add": [e, ...]}, {"mul": [e, ...]}, {"sub": [a, b]}, {"div": [a, b]},
///   {"neg": e}, {"pow": [e, n]} (integer n >= 0),
///   {"poly": {"of": e, "coeffs": [c0, c1, ...]}},
///   {"cos": e}, {"sin": e}, {"exp": e}, {"abs": e}, {"pos": e},
///   {"sign": e}, {"step": e}, {"clip": [e, lo, hi]}.
/// "pos" is max(e, 0) and "step" is 1 for e > 0, else 0.
class Expr {
 public:
  enum class Op { Const, Var, Add, Mul, Div, Neg, Pow, Poly, Cos, Sin, Exp, Abs, Pos, Sign, Step, Clip };

  Expr();
  static Expr constant(double v);
  static Expr variable(int slot);
  static Expr parse(const nlohmann::json& j, const VarTable& vars, const std::string& where);

  double eval(const double* env) const;
  Expr derivative(int slot) const;
  /// True when the tree refers to a slot in [lo, hi).
  bool uses(int lo, int hi) const;
  bool is_zero() const;

 private:
  struct Node;
  explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  static Expr make(Op op, std::vector<Expr> args, double value = 0.0, std::vector<double> coeffs = {});
  static Expr add(const Expr& a, const Expr& b);
  static Expr mul(const Expr& a, const Expr& b);
  static Expr neg(const Expr& a);

  std::shared_ptr<const Node> node_;
};

}  // namespace fk
