#include "fk/config.hpp"

#include <openssl/evp.h>

#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "fk/errors.hpp"
#include "fk/expr.hpp"

namespace fk {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& where, const std::string& what) {
  fail(ErrorKind::InvalidConfig, "config", where + ": " + what);
}

// Object reader that records every key it consumes (with defaults filled in
// `out`) so leftovers can be reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path, json& out) : j_(j), path_(std::move(path)), out_(out) {
    if (!j_.is_object()) bad(path_, "expected an object");
    out_ = json::object();
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  /// Records the resolved value of `key`.
  void resolve(const std::string& key, const json& v) { out_[key] = v; }

  const json& raw(const std::string& key) {
    if (!has(key)) bad(where(key), "missing");
    used_.insert(key);
    out_[key] = j_.at(key);
    return j_.at(key);
  }

  double num(const std::string& key, std::optional<double> def = std::nullopt) {
    if (!has(key)) {
      if (!def) bad(where(key), "missing");
      out_[key] = *def;
      return *def;
    }
    const json& v = raw(key);
    if (!v.is_number() || !std::isfinite(v.get<double>())) bad(where(key), "expected a finite number");
    return v.get<double>();
  }

  long long integer(const std::string& key, std::optional<long long> def = std::nullopt, long long lo = 0,
                    long long hi = std::numeric_limits<int>::max()) {
    long long v;
    if (!has(key)) {
      if (!def) bad(where(key), "missing");
      v = *def;
      out_[key] = v;
    } else {
      const json& r = raw(key);
      if (!r.is_number_integer()) bad(where(key), "expected an integer");
      v = r.get<long long>();
    }
    if (v < lo || v > hi) bad(where(key), "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return v;
  }

  std::uint64_t u64(const std::string& key, std::uint64_t def) {
    if (!has(key)) {
      out_[key] = def;
      return def;
    }
    const json& r = raw(key);
    if (!r.is_number_unsigned()) bad(where(key), "expected a non-negative integer");
    return r.get<std::uint64_t>();
  }

  std::string str(const std::string& key, std::optional<std::string> def, const std::set<std::string>& allowed) {
    std::string v;
    if (!has(key)) {
      if (!def) bad(where(key), "missing");
      v = *def;
      out_[key] = v;
    } else {
      const json& r = raw(key);
      if (!r.is_string()) bad(where(key), "expected a string");
      v = r.get<std::string>();
    }
    if (!allowed.empty() && !allowed.count(v)) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      bad(where(key), "'" + v + "' is not one of " + list);
    }
    return v;
  }

  bool boolean(const std::string& key, bool def) {
    if (!has(key)) {
      out_[key] = def;
      return def;
    }
    const json& r = raw(key);
    if (!r.is_boolean()) bad(where(key), "expected true or false");
    return r.get<bool>();
  }

  Vec vec(const std::string& key, std::optional<Vec> def = std::nullopt, int size = -1) {
    Vec v;
    if (!has(key)) {
      if (!def) bad(where(key), "missing");
      v = *def;
      out_[key] = std::vector<double>(v.data(), v.data() + v.size());
    } else {
      const json& r = raw(key);
      if (!r.is_array()) bad(where(key), "expected a list of numbers");
      v.resize(static_cast<Eigen::Index>(r.size()));
      for (std::size_t i = 0; i < r.size(); ++i) {
        if (!r[i].is_number() || !std::isfinite(r[i].get<double>())) bad(where(key), "expected finite numbers");
        v(static_cast<Eigen::Index>(i)) = r[i].get<double>();
      }
    }
    if (size >= 0 && v.size() != size) bad(where(key), "expected " + std::to_string(size) + " entries");
    return v;
  }

  /// Child object; an absent key yields an empty object (all defaults).
  Section child(const std::string& key) {
    used_.insert(key);
    static const json empty = json::object();
    const json& c = has(key) ? j_.at(key) : empty;
    return Section(c, where(key), out_[key]);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) bad(where(it.key()), "unknown key");
    }
  }

  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  const json& j_;
  std::string path_;
  json& out_;
  std::set<std::string> used_;
};

// Parses a list of `n` expressions; a bare expression is accepted for n = 1.
std::vector<Expr> expr_list(const json& j, int n, const VarTable& vars, const std::string& where) {
  std::vector<Expr> out;
  if (n == 1 && !j.is_array()) {
    out.push_back(Expr::parse(j, vars, where));
    return out;
  }
  if (!j.is_array() || static_cast<int>(j.size()) != n) bad(where, "expected a list of " + std::to_string(n));
  for (int i = 0; i < n; ++i) out.push_back(Expr::parse(j[i], vars, where + "[" + std::to_string(i) + "]"));
  return out;
}

// Evaluation buffer of the expression environment.
class Env {
 public:
  explicit Env(int size) : size_(size) {
    if (size_ > static_cast<int>(small_.size())) big_.resize(size_);
  }
  double* data() { return size_ > static_cast<int>(small_.size()) ? big_.data() : small_.data(); }

 private:
  int size_;
  std::array<double, 32> small_{};
  std::vector<double> big_;
};

bool uses_t(const std::vector<Expr>& es) {
  for (const auto& e : es) {
    if (e.uses(0, 1)) return true;
  }
  return false;
}

LevelSetDomain parse_domain(Section s) {
  const std::string kind = s.str("kind", std::nullopt, {"interval", "ball", "custom"});
  LevelSetDomain dom;
  if (kind == "interval") {
    const double a = s.num("a");
    const double b = s.num("b");
    if (!(a < b)) bad(s.where("b"), "need a < b");
    dom = LevelSetDomain::interval(a, b);
  } else if (kind == "ball") {
    const Vec c = s.vec("center");
    const double r = s.num("radius");
    if (c.size() < 1 || !(r > 0.0)) bad(s.where("radius"), "need a nonempty center and radius > 0");
    dom = LevelSetDomain::ball(c, r);
  } else {
    const int dim = static_cast<int>(s.integer("dim", std::nullopt, 1, 16));
    VarTable vars(dim, 0, 0, false, true, false, false);
    const Expr phi = Expr::parse(s.raw("phi"), vars, s.where("phi"));
    Section box = s.child("box");
    BoundingBox bb{box.vec("lo", std::nullopt, dim), box.vec("hi", std::nullopt, dim)};
    box.finish();
    std::vector<Expr> grad;
    std::vector<std::vector<Expr>> hess(dim);
    for (int i = 0; i < dim; ++i) grad.push_back(phi.derivative(vars.x(i)));
    for (int i = 0; i < dim; ++i) {
      for (int j = 0; j < dim; ++j) hess[i].push_back(grad[i].derivative(vars.x(j)));
    }
    const int n = vars.size();
    auto load = [n](const Vec& x, std::vector<double>& env) {
      env.assign(n, 0.0);
      for (Eigen::Index i = 0; i < x.size(); ++i) env[1 + i] = x(i);
    };
    auto f = [phi, load](const Vec& x) {
      std::vector<double> env;
      load(x, env);
      return phi.eval(env.data());
    };
    auto g = [grad, load](const Vec& x) {
      std::vector<double> env;
      load(x, env);
      Vec out(static_cast<Eigen::Index>(grad.size()));
      for (std::size_t i = 0; i < grad.size(); ++i) out(static_cast<Eigen::Index>(i)) = grad[i].eval(env.data());
      return out;
    };
    auto h = [hess, load, dim](const Vec& x) {
      std::vector<double> env;
      load(x, env);
      Mat out(dim, dim);
      for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) out(i, j) = hess[i][j].eval(env.data());
      }
      return out;
    };
    dom = LevelSetDomain::custom(dim, f, g, h, bb, "custom");
  }
  if (s.has("boundary_tol")) dom.set_boundary_tol(s.num("boundary_tol"));
  s.finish();
  return dom;
}

ConvexPtr parse_convex(Section s, int m) {
  const std::string kind =
      s.str("kind", std::string("zero"), {"zero", "quadratic", "indicator_halfline", "indicator_ball", "abs", "separable", "smooth"});
  ConvexPtr out;
  if (kind == "zero") {
    out = make_zero(m);
  } else if (kind == "quadratic") {
    const double alpha = s.num("alpha", 1.0);
    if (!(alpha >= 0.0)) bad(s.where("alpha"), "must be >= 0");
    out = make_quadratic(alpha, s.vec("center", Vec(Vec::Zero(m)), m));
  } else if (kind == "indicator_halfline") {
    if (m != 1) bad(s.where("kind"), "indicator_halfline needs m = 1");
    const double a = s.num("a", 0.0);
    const std::string side = s.str("side", std::string("lower"), {"lower", "upper"});
    out = make_halfline(a, side == "lower");
  } else if (kind == "indicator_ball") {
    const double r = s.num("radius");
    if (!(r > 0.0)) bad(s.where("radius"), "must be > 0");
    out = make_indicator_ball(s.vec("center", Vec(Vec::Zero(m)), m), r);
  } else if (kind == "abs") {
    const double alpha = s.num("alpha", 1.0);
    if (!(alpha >= 0.0)) bad(s.where("alpha"), "must be >= 0");
    out = make_norm(alpha, s.vec("center", Vec(Vec::Zero(m)), m));
  } else if (kind == "separable") {
    const json& parts = s.raw("parts");
    if (!parts.is_array() || static_cast<int>(parts.size()) != m) {
      bad(s.where("parts"), "expected " + std::to_string(m) + " one-dimensional parts");
    }
    std::vector<ConvexPtr> ps;
    json resolved_parts = json::array();
    for (int i = 0; i < m; ++i) {
      json r;
      ps.push_back(parse_convex(Section(parts[i], s.where("parts") + "[" + std::to_string(i) + "]", r), 1));
      resolved_parts.push_back(r);
    }
    s.resolve("parts", resolved_parts);
    out = make_separable(ps);
  } else {
    VarTable vars(0, m, 0, false, false, true, false);
    const Expr v = Expr::parse(s.raw("value"), vars, s.where("value"));
    std::vector<Expr> grad;
    std::vector<std::vector<Expr>> hess(m);
    for (int i = 0; i < m; ++i) grad.push_back(v.derivative(vars.y(i)));
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) hess[i].push_back(grad[i].derivative(vars.y(j)));
    }
    const int n = vars.size();
    auto load = [n](const Vec& y, std::vector<double>& env) {
      env.assign(n, 0.0);
      for (Eigen::Index i = 0; i < y.size(); ++i) env[1 + i] = y(i);
    };
    SmoothConvexSpec spec;
    spec.m = m;
    spec.value = [v, load](const Vec& y) {
      std::vector<double> env;
      load(y, env);
      return v.eval(env.data());
    };
    spec.grad = [grad, load](const Vec& y) {
      std::vector<double> env;
      load(y, env);
      Vec out(static_cast<Eigen::Index>(grad.size()));
      for (std::size_t i = 0; i < grad.size(); ++i) out(static_cast<Eigen::Index>(i)) = grad[i].eval(env.data());
      return out;
    };
    spec.hess = [hess, load, m](const Vec& y) {
      std::vector<double> env;
      load(y, env);
      Mat out(m, m);
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) out(i, j) = hess[i][j].eval(env.data());
      }
      return out;
    };
    out = make_smooth(spec);
  }
  s.finish();
  return out;
}

std::vector<double> number_list(Section& s, const std::string& key, std::vector<double> def) {
  if (!s.has(key)) {
    s.resolve(key, def);
    return def;
  }
  const json& r = s.raw(key);
  if (!r.is_array()) bad(s.where(key), "expected a list of numbers");
  std::vector<double> out;
  for (const auto& v : r) {
    if (!v.is_number()) bad(s.where(key), "expected a list of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

std::string sha256_hex(const std::string& data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    fail(ErrorKind::NumericFailure, "config", "SHA-256 digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

ExperimentConfig parse_config(const json& j, const Overrides& overrides) {
  ExperimentConfig cfg;
  json resolved;
  Section root(j, "", resolved);

  Problem& pr = cfg.problem;
  pr.domain = parse_domain(root.child("domain"));
  const int dim = pr.domain.dim();

  // forward coefficients
  {
    Section s = root.child("sde");
    const int d = static_cast<int>(s.integer("d", dim, 1, 16));
    if (d != dim) bad(s.where("d"), "must equal the domain dimension " + std::to_string(dim));
    const int k = static_cast<int>(s.integer("k", d, 1, 64));
    VarTable vars(d, 0, 0, true, true, false, false);
    const auto f = s.has("f") ? expr_list(s.raw("f"), d, vars, s.where("f"))
                              : std::vector<Expr>(static_cast<std::size_t>(d), Expr::constant(0.0));
    if (!s.has("f")) s.resolve("f", std::vector<double>(d, 0.0));
    std::vector<Expr> g;
    if (!s.has("g")) bad(s.where("g"), "missing");
    const json& gj = s.raw("g");
    if (d == 1 && k == 1 && !gj.is_array()) {
      g.push_back(Expr::parse(gj, vars, s.where("g")));
    } else {
      if (!gj.is_array() || static_cast<int>(gj.size()) != d) bad(s.where("g"), "expected d rows");
      for (int i = 0; i < d; ++i) {
        const auto row = expr_list(gj[i], k, vars, s.where("g") + "[" + std::to_string(i) + "]");
        g.insert(g.end(), row.begin(), row.end());  // row-major d x k
      }
    }
    pr.coeffs.d = d;
    pr.coeffs.k = k;
    pr.coeffs.mu_f = s.num("mu_f", 0.0);
    pr.coeffs.ell_g = s.num("ell_g", 1.0);
    pr.coeffs.time_homogeneous = !uses_t(f) && !uses_t(g);
    const int n = vars.size();
    pr.coeffs.f = [f, n, d](double t, const double* x, double* out) {
      Env env(n);
      double* e = env.data();
      e[0] = t;
      for (int i = 0; i < d; ++i) e[1 + i] = x[i];
      for (int i = 0; i < d; ++i) out[i] = f[i].eval(e);
    };
    pr.coeffs.g = [g, n, d, k](double t, const double* x, double* out) {
      Env env(n);
      double* e = env.data();
      e[0] = t;
      for (int i = 0; i < d; ++i) e[1 + i] = x[i];
      for (int i = 0; i < d; ++i) {
        for (int jj = 0; jj < k; ++jj) out[i + jj * d] = g[i * k + jj].eval(e);
      }
    };
    s.finish();
  }

  // backward driver
  const int d = pr.coeffs.d, k = pr.coeffs.k;
  int m = 1;
  {
    Section s = root.child("driver");
    m = static_cast<int>(s.integer("m", 1, 1, 16));
    VarTable vF(d, m, k);
    VarTable vG(d, m, k, true, true, true, false);
    const auto F = s.has("F") ? expr_list(s.raw("F"), m, vF, s.where("F"))
                              : std::vector<Expr>(static_cast<std::size_t>(m), Expr::constant(0.0));
    if (!s.has("F")) s.resolve("F", std::vector<double>(m, 0.0));
    const auto G = s.has("G") ? expr_list(s.raw("G"), m, vG, s.where("G"))
                              : std::vector<Expr>(static_cast<std::size_t>(m), Expr::constant(0.0));
    if (!s.has("G")) s.resolve("G", std::vector<double>(m, 0.0));
    Driver& dr = pr.driver;
    dr.m = m;
    dr.d = d;
    dr.k = k;
    dr.mu_F = s.num("mu_F", 0.0);
    dr.ell_F = s.num("ell_F", 1.0);
    dr.b_F = s.num("b_F", 1.0);
    dr.mu_G = s.num("mu_G", 0.0);
    dr.b_G = s.num("b_G", 1.0);
    dr.F_ignores_z = true;
    for (const auto& e : F) {
      if (e.uses(vF.z(0, 0), vF.size())) dr.F_ignores_z = false;
    }
    dr.G_is_zero = true;
    for (const auto& e : G) {
      if (!e.is_zero()) dr.G_is_zero = false;
    }
    dr.time_homogeneous = !uses_t(F) && !uses_t(G);
    const int n = vF.size();
    dr.F = [F, n, d, m, k](double t, const double* x, const double* y, const double* z, double* out) {
      Env env(n);
      double* e = env.data();
      e[0] = t;
      for (int i = 0; i < d; ++i) e[1 + i] = x[i];
      for (int i = 0; i < m; ++i) e[1 + d + i] = y[i];
      for (int i = 0; i < m * k; ++i) e[1 + d + m + i] = z[i];
      for (int i = 0; i < m; ++i) out[i] = F[i].eval(e);
    };
    dr.G = [G, n, d, m](double t, const double* x, const double* y, double* out) {
      Env env(n);
      double* e = env.data();
      e[0] = t;
      for (int i = 0; i < d; ++i) e[1 + i] = x[i];
      for (int i = 0; i < m; ++i) e[1 + d + i] = y[i];
      for (int i = 0; i < m; ++i) out[i] = G[i].eval(e);
    };
    s.finish();
  }

  // terminal condition
  {
    VarTable vars(d, 0, 0, false, true, false, false);
    const auto kap = root.has("kappa") ? expr_list(root.raw("kappa"), m, vars, "kappa")
                                       : std::vector<Expr>(static_cast<std::size_t>(m), Expr::constant(0.0));
    if (!root.has("kappa")) root.resolve("kappa", std::vector<double>(m, 0.0));
    const int n = vars.size();
    pr.kappa.m = m;
    pr.kappa.kappa = [kap, n, d, m](const double* x, double* out) {
      Env env(n);
      double* e = env.data();
      for (int i = 0; i < d; ++i) e[1 + i] = x[i];
      for (int i = 0; i < m; ++i) out[i] = kap[i].eval(e);
    };
  }

  pr.phi = parse_convex(root.child("phi"), m);
  pr.psi = parse_convex(root.child("psi"), m);

  {
    Section s = root.child("grid");
    const double T = s.num("T", 1.0);
    if (!(T > 0.0)) bad(s.where("T"), "must be > 0");
    pr.grid = TimeGrid(T, static_cast<int>(s.integer("N", 200, 1, 10000000)));
    s.finish();
  }
  {
    Section s = root.child("ensemble");
    cfg.M = static_cast<std::size_t>(s.integer("M", 10000, 1, 100000000));
    cfg.seed = s.u64("seed", 1);
    if (overrides.seed) {
      cfg.seed = *overrides.seed;
      resolved["ensemble"]["seed"] = cfg.seed;
    }
    s.finish();
  }
  {
    Section s = root.child("point");
    cfg.t = s.num("t", 0.0);
    cfg.x = s.vec("x", Vec(Vec::Zero(d)), d);
    if (!(cfg.t >= 0.0 && cfg.t <= pr.grid.T())) bad(s.where("t"), "must lie in [0, T]");
    if (!pr.domain.in_closure(cfg.x)) bad(s.where("x"), "lies outside the closure of the domain");
    s.finish();
  }
  {
    Section s = root.child("solver");
    auto& b = pr.solver.basis;
    b.kind = s.str("basis", std::string("polynomial"), {"polynomial", "bins"}) == "bins" ? BasisKind::Bins
                                                                                         : BasisKind::Polynomial;
    b.degree = static_cast<int>(s.integer("degree", 3, 0, 12));
    b.bins = static_cast<int>(s.integer("bins", 20, 1, 100000));
    b.ridge = s.num("ridge", 1e-10);
    if (!(b.ridge >= 0.0)) bad(s.where("ridge"), "must be >= 0");
    pr.solver.picard_iters = static_cast<int>(s.integer("picard_iters", 3, 1, 100));
    pr.solver.order = s.str("order", std::string("phi_first"), {"phi_first", "psi_first"}) == "psi_first"
                          ? SplitOrder::PsiFirst
                          : SplitOrder::PhiFirst;
    s.finish();
  }
  {
    Section s = root.child("simulation");
    pr.sim.scheme = s.str("scheme", std::string("projection"), {"projection", "penalization"}) == "penalization"
                        ? ReflectionScheme::Penalization
                        : ReflectionScheme::Projection;
    pr.sim.penalty_eps = s.num("penalty_eps", 1e-3);
    if (!(pr.sim.penalty_eps > 0.0)) bad(s.where("penalty_eps"), "must be > 0");
    s.finish();
  }
  {
    Section s = root.child("checks");
    cfg.checks.samples = static_cast<int>(s.integer("samples", 256, 1, 1000000));
    cfg.checks.seed = s.u64("seed", 0);
    cfg.checks.y_box = s.num("y_box", 10.0);
    cfg.checks.z_box = s.num("z_box", 10.0);
    s.finish();
  }
  {
    Section s = root.child("forward");
    cfg.forward.csv_paths = static_cast<std::size_t>(s.integer("csv_paths", 64, 0, 100000000));
    cfg.forward.binary = s.boolean("binary", false);
    s.finish();
  }
  {
    Section s = root.child("solve");
    cfg.solve.vi_tests = static_cast<int>(s.integer("vi_tests", 100, 0, 1000000));
    cfg.solve.csv_paths = static_cast<std::size_t>(s.integer("csv_paths", 64, 0, 100000000));
    cfg.solve.markov_probes = number_list(s, "markov_probes", {});
    cfg.solve.markov_subsample = static_cast<int>(s.integer("markov_subsample", 8, 1, 100000));
    for (double p : cfg.solve.markov_probes) {
      if (!(p >= cfg.t && p <= pr.grid.T())) bad(s.where("markov_probes"), "probe times must lie in [t, T]");
    }
    s.finish();
  }
  {
    Section s = root.child("continuity");
    auto& c = cfg.continuity;
    c.t = cfg.t;
    c.x = cfg.x;
    c.kind = s.str("kind", std::string("space"), {"space", "time"}) == "time" ? SequenceKind::Time
                                                                              : SequenceKind::Space;
    Vec def = Vec::Zero(d);
    def(0) = 1.0;
    c.direction = s.vec("direction", def, d);
    c.n_first = static_cast<int>(s.integer("n_first", 1, 0, 60));
    c.n_last = static_cast<int>(s.integer("n_last", 8, 0, 60));
    if (c.n_last < c.n_first) bad(s.where("n_last"), "must be >= n_first");
    c.trend_se = s.num("trend_se", 3.0);
    c.target_ratio = s.num("target_ratio", 0.1);
    c.u_tol = s.num("u_tol", 5e-2);
    s.finish();
  }
  {
    Section s = root.child("elliptic");
    auto& e = cfg.elliptic;
    if (s.has("lambda")) e.lambda = s.num("lambda");
    e.tol = s.num("tol", 1e-3);
    e.n_max = static_cast<int>(s.integer("n_max", 40, 1, 100000));
    e.steps_per_unit = static_cast<int>(s.integer("steps_per_unit", 50, 1, 1000000));
    e.pilot_n = static_cast<int>(s.integer("pilot_n", 2, 1, 100000));
    std::vector<double> hs = number_list(s, "horizons", {2, 4, 6, 8, 10});
    e.horizons.clear();
    for (double h : hs) {
      if (!(h >= 1.0) || h != std::floor(h)) bad(s.where("horizons"), "horizons must be positive integers");
      e.horizons.push_back(static_cast<int>(h));
    }
    s.finish();
  }
  {
    Section s = root.child("fd");
    auto& f = cfg.fd;
    f.nx = static_cast<int>(s.integer("nx", 400, 4, 10000000));
    f.nt = static_cast<int>(s.integer("nt", 400, 1, 10000000));
    f.theta = s.num("theta", 0.5);
    f.rannacher_steps = static_cast<int>(s.integer("rannacher_steps", 2, 0, 1000));
    f.picard_sweeps = static_cast<int>(s.integer("picard_sweeps", 3, 1, 1000));
    f.picard_tol = s.num("picard_tol", 1e-6);
    f.project_phi = s.boolean("project_phi", false);
    s.finish();
  }
  {
    Section s = root.child("residuals");
    auto& r = cfg.residuals;
    r.source = s.str("source", std::string("fd"), {"fd", "mc"});
    r.nx = static_cast<int>(s.integer("nx", 200, 4, 10000000));
    r.nt = static_cast<int>(s.integer("nt", 200, 4, 10000000));
    r.options.skip_rows = static_cast<int>(s.integer("skip_rows", 1, 0, 1000000));
    r.options.membership_delta = s.num("membership_delta", 1e-8);
    s.finish();
  }
  {
    Section s = root.child("compat");
    auto& c = cfg.compat;
    c.u0 = s.vec("u0", Vec(Vec::Zero(m)), m);
    c.c = s.num("c", 1.0);
    c.n_y = static_cast<int>(s.integer("n_y", 64, 1, 1000000));
    c.n_eps = static_cast<int>(s.integer("n_eps", 9, 1, 1000));
    c.n_t = static_cast<int>(s.integer("n_t", 3, 1, 1000));
    c.n_x = static_cast<int>(s.integer("n_x", 8, 1, 100000));
    c.n_z = static_cast<int>(s.integer("n_z", 4, 1, 100000));
    c.y_box = s.num("y_box", 4.0);
    c.z_radius = s.num("z_radius", 1.0);
    s.finish();
  }
  root.finish();

  cfg.structure = check_structure(pr.domain, pr.coeffs, pr.driver, pr.grid.T(), cfg.checks.samples, cfg.checks.seed,
                                  cfg.checks.y_box, cfg.checks.z_box);
  if (!cfg.structure.pass()) bad("structure", cfg.structure.first_failure());

  cfg.resolved = resolved;
  cfg.hash = sha256_hex(resolved.dump());
  return cfg;
}

ExperimentConfig load_config(const std::string& path, const Overrides& overrides) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::InvalidConfig, "config", "cannot open " + path);
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::InvalidConfig, "config", path + ": " + e.what());
  }
  return parse_config(j, overrides);
}

}  // namespace fk
