// Acceptance runner: one PASS/FAIL line per criterion. Pass criterion ids
// (AC1 ... AC9) as arguments to run a subset.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fk/backward.hpp"
#include "fk/compat.hpp"
#include "fk/config.hpp"
#include "fk/convex.hpp"
#include "fk/elliptic.hpp"
#include "fk/forward.hpp"
#include "fk/rng.hpp"
#include "fk/validate.hpp"

using namespace fk;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

Vec v1(double a) { return Vec::Constant(1, a); }

std::string num(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

ExperimentConfig shipped(const std::string& name) {
  return load_config(std::string(FK_SOURCE_DIR) + "/configs/" + name + ".json");
}

class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : rng_(seed) {}
  double uniform(double lo, double hi) { return lo + (hi - lo) * rng_.uniform(n_++, 0, 0); }
  Vec vec(int m, double lo, double hi) {
    Vec v(m);
    for (int i = 0; i < m; ++i) v(i) = uniform(lo, hi);
    return v;
  }

 private:
  CounterRng rng_;
  std::uint64_t n_ = 0;
};

SdeCoefficients brownian(double sigma) {
  SdeCoefficients c;
  c.f = [](double, const double*, double* o) { o[0] = 0.0; };
  c.g = [sigma](double, const double*, double* o) { o[0] = sigma; };
  return c;
}

// Convex toolkit: Moreau-Yosida identities on every built-in.
Outcome ac1() {
  Vec c2(2);
  c2 << 0.3, -0.2;
  SmoothConvexSpec sp;
  sp.value = [](const Vec& y) { return std::log1p(std::exp(y(0))); };
  sp.grad = [](const Vec& y) { return v1(1.0 / (1.0 + std::exp(-y(0)))); };
  sp.hess = [](const Vec& y) {
    const double p = 1.0 / (1.0 + std::exp(-y(0)));
    return Mat::Constant(1, 1, p * (1 - p));
  };
  const std::vector<ConvexPtr> fs = {
      make_zero(2),
      make_quadratic(1.7, c2),
      make_halfline(0.25, true),
      make_halfline(-0.5, false),
      make_indicator_ball(c2, 0.8),
      make_norm(1.0, v1(0.0)),
      make_norm(0.6, c2),
      make_separable({make_halfline(0, true), make_norm(2.0, v1(0.5)), make_quadratic(0.5, v1(1))}),
      make_smooth(sp),
  };
  double worst_a = 0, worst_b = 0, worst_c = 0;
  for (const auto& f : fs) {
    Sampler g(101);
    const int m = f->dim();
    for (int s = 0; s < 1000; ++s) {
      const Vec y = g.vec(m, -3, 3), y2 = g.vec(m, -3, 3);
      const double eps = std::exp(g.uniform(-5, 1));
      const Vec p = f->prox(y, eps);
      const Vec grad = yosida_grad(*f, y, eps);
      // (a) envelope = eps/2 |grad|^2 + phi(prox)
      const double env = moreau_envelope(*f, y, eps);
      worst_a = std::max(worst_a, std::abs(env - (0.5 * eps * grad.squaredNorm() + f->value(p))) / (1 + std::abs(env)));
      // (b) grad phi_eps(y) is a subgradient of phi at prox(y)
      const Vec w = f->project_dom(g.vec(m, -3, 3));
      worst_b = std::max(worst_b, f->value(p) + grad.dot(w - p) - f->value(w));
      // (c) 1/eps-Lipschitz monotone gradient
      const Vec grad2 = yosida_grad(*f, y2, eps);
      worst_c = std::max(worst_c, (grad - grad2).norm() - (y - y2).norm() / eps);
      worst_c = std::max(worst_c, -(grad - grad2).dot(y - y2));
    }
  }
  long formula_mismatch = 0;
  Sampler g(102);
  for (int s = 0; s < 1000; ++s) {
    const double a = g.uniform(-2, 2), y = g.uniform(-5, 5), eps = std::exp(g.uniform(-8, 2));
    if (yosida_grad(*make_halfline(a, true), v1(y), eps)(0) != -std::max(a - y, 0.0) / eps) ++formula_mismatch;
    if (yosida_grad(*make_halfline(a, false), v1(y), eps)(0) != std::max(y - a, 0.0) / eps) ++formula_mismatch;
  }
  const bool pass = worst_a <= 1e-10 && worst_b <= 1e-10 && worst_c <= 1e-10 && formula_mismatch == 0;
  return {pass, "worst (a) " + num(worst_a) + ", (b) " + num(worst_b) + ", (c) " + num(worst_c) +
                    ", indicator formula mismatches " + std::to_string(formula_mismatch)};
}

// Forward identity residual under refinement; zero noise gives 0.
Outcome ac2() {
  const auto dom = LevelSetDomain::interval(-1, 1);
  std::vector<double> rms;
  for (int N : {200, 400, 800}) {
    const auto b = simulate_reflected(dom, brownian(1.0), TimeGrid(1.0, N), 0, v1(0.0), 10000, 5);
    rms.push_back(local_time_identity_residual(dom, brownian(1.0), b).rms);
  }
  const auto still = simulate_reflected(dom, brownian(0.0), TimeGrid(1.0, 200), 0, v1(0.4), 100, 5);
  const auto r0 = local_time_identity_residual(dom, brownian(0.0), still);
  const double q1 = rms[1] / rms[0], q2 = rms[2] / rms[1];
  const bool pass = q1 < 0.8 && q2 < 0.8 && r0.max_abs == 0.0;
  return {pass, "rms " + num(rms[0]) + " / " + num(rms[1]) + " / " + num(rms[2]) + " (ratios " + num(q1) + ", " +
                    num(q2) + "), zero-noise max " + num(r0.max_abs)};
}

// Monte Carlo against the finite-difference reference at (0, 0).
Outcome ac3() {
  std::string detail;
  bool pass = true;
  for (const auto& [name, tol] : std::vector<std::pair<std::string, double>>{{"neumann_heat", 0.02}, {"robin_flux", 0.05}}) {
    const auto cfg = shipped(name);
    const auto u = evaluate_u(cfg.problem, cfg.t, cfg.x, cfg.M, cfg.seed);
    const auto fd = fd_reference_parabolic_1d(cfg.problem, cfg.fd);
    const double err = std::abs(u.u(0) - fd.grid.at(0, cfg.x(0)));
    pass = pass && err <= tol;
    detail += (detail.empty() ? "" : "; ") + name + " |u - fd| " + num(err) + " (se " + num(u.se(0)) + ", tol " +
              num(tol) + ")";
  }
  return {pass, detail};
}

// Backward solver on the hand-enumerated dynamic-programming oracle.
Outcome ac4() {
  ReflectedPathBundle b;
  b.grid = TimeGrid(0.3, 3);
  b.M = 2;
  b.d = b.k = 1;
  b.x_start = v1(0.0);
  b.X = {0.0, 0.5, -0.2, 0.05, 0.0, -0.3, 0.1, 0.25};
  b.A.assign(8, 0.0);
  b.dB = {0.5, -0.7, 0.25, -0.3, 0.4, 0.15};
  b.boundary.assign(8, 0);
  TerminalCondition kappa;
  kappa.kappa = [](const double* x, double* o) { o[0] = std::abs(x[0]); };
  SolverOptions opts;
  opts.basis.degree = 1;
  opts.basis.ridge = 0.0;
  const auto phi = make_halfline(0.0, true);
  const auto psi = make_zero(1);

  double err = 0, vi = -kInf;
  for (double F : {0.0, -1.0}) {
    Driver d;
    d.F = [F](double, const double*, const double*, const double*, double* o) { o[0] = F; };
    d.G = [](double, const double*, const double*, double* o) { o[0] = 0.0; };
    d.F_ignores_z = true;
    d.G_is_zero = true;
    const auto sol = solve_bsvi(b, d, *phi, *psi, kappa, opts);
    // two states per step: degree-1 regression interpolates, then clip at 0
    double Y[4][2];
    for (int p = 0; p < 2; ++p) Y[3][p] = std::abs(b.x(p, 3)[0]);
    for (int n = 2; n >= 0; --n) {
      const double x0 = b.x(0, n)[0], x1 = b.x(1, n)[0];
      for (int p = 0; p < 2; ++p) {
        const double E = x0 == x1 ? 0.5 * (Y[n + 1][0] + Y[n + 1][1])
                                  : Y[n + 1][0] + (Y[n + 1][1] - Y[n + 1][0]) / (x1 - x0) * (b.x(p, n)[0] - x0);
        Y[n][p] = std::max(0.0, E + b.grid.dt() * F);
      }
    }
    for (int n = 0; n <= 3; ++n)
      for (int p = 0; p < 2; ++p) err = std::max(err, std::abs(sol.y(p, n)[0] - Y[n][p]));
    vi = std::max(vi, vi_residual(sol, *phi, *psi, 100, 5).worst);
  }
  // a Monte Carlo obstacle solve
  const auto cfg = shipped("obstacle");
  const auto s = solve_problem(cfg.problem, cfg.t, cfg.x, 2000, cfg.seed);
  const double vi_mc = vi_residual(s.solution, *cfg.problem.phi, *cfg.problem.psi, 100, 9).worst;
  const bool pass = err <= 1e-10 && vi <= 1e-8 && vi_mc <= 1e-8;
  return {pass, "oracle error " + num(err) + ", vi worst " + num(vi) + " (oracle), " + num(vi_mc) + " (obstacle MC)"};
}

// Continuity scans with coupled noise.
Outcome ac5() {
  std::string detail;
  bool pass = true;
  for (const std::string name : {"smooth_continuity", "obstacle"}) {
    const auto cfg = shipped(name);
    const auto r = continuity_scan(cfg.problem, cfg.continuity, cfg.M, cfg.seed);
    const auto& first = r.rows.front();
    const auto& last = r.rows.back();
    pass = pass && r.pass();
    detail += (detail.empty() ? "" : "; ") + name + " e_" + std::to_string(first.n) + " " + num(first.e) + " -> e_" +
              std::to_string(last.n) + " " + num(last.e) + ", |du| " + num(last.du) +
              (r.trend_ok ? "" : " [trend]") + (r.target_ok ? "" : " [ratio]") + (r.u_ok ? "" : " [du]");
  }
  return {pass, detail};
}

EllipticConfig elliptic_from(const ExperimentConfig& cfg) {
  EllipticConfig ec;
  ec.domain = cfg.problem.domain;
  ec.coeffs = cfg.problem.coeffs;
  ec.driver = cfg.problem.driver;
  ec.lambda = cfg.elliptic.lambda ? *cfg.elliptic.lambda : default_lambda(cfg.problem.driver);
  ec.tol = cfg.elliptic.tol;
  ec.n_max = cfg.elliptic.n_max;
  ec.steps_per_unit = cfg.elliptic.steps_per_unit;
  ec.pilot_n = cfg.elliptic.pilot_n;
  ec.solver = cfg.problem.solver;
  ec.sim = cfg.problem.sim;
  ec.validate();
  return ec;
}

// Geometric decay of horizon gaps and the no-boundary limit.
Outcome ac6() {
  const auto cfg = shipped("elliptic_dissipative");
  const auto ec = elliptic_from(cfg);
  const auto rows = decay_table(ec, cfg.x, cfg.elliptic.horizons, cfg.M, cfg.seed);
  const double slope = fit_log_slope(rows);
  const double target = 2 * ec.lambda;
  const bool slope_ok = std::abs(slope - target) <= 0.3 * std::abs(target);

  // without noise the paths from an interior point never reach the boundary
  // and u solves 1 - u = 0
  auto flat = ec;
  flat.coeffs.g = [](double, const double*, double* o) { o[0] = 0.0; };
  flat.steps_per_unit = 200;
  flat.tol = 1e-4;
  flat.validate();
  const auto r = solve_elliptic(flat, cfg.x, 2000, cfg.seed, {2, 4});
  const double err = std::abs(r.u.u(0) - 1.0);
  return {slope_ok && err <= 1e-3, "slope " + num(slope) + " vs 2 lambda " + num(target) + ", no-boundary |u - 1| " +
                                       num(err) + " at horizon " + std::to_string(r.calibration.horizon.n)};
}

// Compatibility checker verdicts.
Outcome ac7() {
  auto verdict = [](const ExperimentConfig& cfg) {
    const auto& p = cfg.problem;
    return check_compatibility(p.domain, p.driver, *p.phi, *p.psi, p.kappa, cfg.compat, p.grid.T(), cfg.seed);
  };
  const auto good = verdict(shipped("compat_pass"));
  const auto bad = verdict(shipped("compat_violating"));
  double worst = 0;
  std::string witness;
  for (const auto& c : bad.conditions) {
    if (c.worst_margin < worst) {
      worst = c.worst_margin;
      witness = c.name + " at " + c.witness;
    }
  }
  const bool pass = good.pass() && !bad.pass() && worst < 0 && !witness.empty();
  return {pass, std::string("obstacle-pair config ") + (good.pass() ? "PASS" : "FAIL") + ", violating config " +
                    (bad.pass() ? "PASS" : "FAIL") + " (margin " + num(worst) + ", " + witness + ")"};
}

// PDE residuals of the closed-form heat solution and of the obstacle case.
Outcome ac8() {
  const auto heat = shipped("neumann_heat");
  const double T = heat.problem.grid.T();
  SpaceTimeGrid g;
  for (int i = 0; i <= 200; ++i) g.t.push_back(i == 200 ? T : T * i / 200);
  for (int j = 0; j <= 200; ++j) g.x.push_back(j == 200 ? 1.0 : -1.0 + 2.0 * j / 200);
  g.U.resize(201, 201);
  for (int i = 0; i <= 200; ++i)
    for (int j = 0; j <= 200; ++j)
      g.U(i, j) = std::exp(-0.5 * M_PI * M_PI * (T - g.t[i])) * std::cos(M_PI * g.x[j]);
  const auto rh = pde_residuals(g, heat.problem);

  const auto obs = shipped("obstacle");
  FdOptions fo = obs.fd;
  fo.nx = obs.residuals.nx;
  fo.nt = obs.residuals.nt;
  const auto fd = fd_reference_parabolic_1d(obs.problem, fo);
  const auto ro = pde_residuals(fd.grid, obs.problem, obs.residuals.options);
  const bool pass = rh.interior_max <= 1e-3 && rh.boundary_max <= 1e-3 && ro.membership_max <= 5e-2;
  return {pass, "heat interior " + num(rh.interior_max) + ", boundary " + num(rh.boundary_max) +
                    "; obstacle membership " + num(ro.membership_max) + " (contact nodes " +
                    std::to_string(ro.contact_nodes) + ", raw max there " + num(ro.contact_raw_max) + ")"};
}

std::map<std::string, std::string> read_dir(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::ifstream in(e.path(), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    files[e.path().filename().string()] = ss.str();
  }
  return files;
}

// Every subcommand rerun and run with more threads gives identical bytes.
Outcome ac9() {
  const fs::path work = fs::temp_directory_path() / ("fk_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(work);
  fs::create_directories(work);
  struct Case {
    std::string command, config;
    std::function<void(json&)> shrink;
  };
  const auto small = [](json& j) { j["ensemble"]["M"] = 2000; };
  const std::vector<Case> cases = {
      {"forward-sim", "ball_drift", small},
      {"solve", "robin_flux", small},
      {"elliptic", "elliptic_dissipative",
       [](json& j) {
         j["ensemble"]["M"] = 1000;
         j["elliptic"]["horizons"] = {2, 4};
         j["elliptic"]["tol"] = 1e-2;
       }},
      {"continuity", "obstacle",
       [](json& j) {
         j["ensemble"]["M"] = 1000;
         j["continuity"]["n_last"] = 3;
       }},
      {"validate-fd", "neumann_heat",
       [](json& j) {
         j["ensemble"]["M"] = 2000;
         j["fd"] = {{"nx", 100}, {"nt", 100}};
       }},
      {"residuals", "obstacle", [](json& j) { j["residuals"] = {{"nx", 80}, {"nt", 80}}; }},
      {"compat-check", "compat_violating", [](json&) {}},
  };
  std::string bad;
  for (const auto& c : cases) {
    std::ifstream in(std::string(FK_SOURCE_DIR) + "/configs/" + c.config + ".json");
    json j = json::parse(in, nullptr, true, true);
    c.shrink(j);
    const fs::path cfg = work / (c.command + ".json");
    std::ofstream(cfg) << j.dump(2);
    std::vector<std::map<std::string, std::string>> runs;
    for (const char* tag : {"a", "b", "c"}) {
      const fs::path out = work / (c.command + "_" + tag);
      const std::string threads = std::string(tag) == "c" ? "3" : "1";
      const std::string cmd = std::string("\"") + FKRUN_PATH + "\" " + c.command + " --config \"" + cfg.string() +
                              "\" --out \"" + out.string() + "\" --threads " + threads + " --quiet";
      if (std::system(cmd.c_str()) != 0) {
        bad += " " + c.command + "(exit)";
        break;
      }
      runs.push_back(read_dir(out));
    }
    if (runs.size() == 3 && (runs[0] != runs[1] || runs[0] != runs[2] || runs[0].size() < 2)) bad += " " + c.command;
  }
  std::error_code ec;
  fs::remove_all(work, ec);
  return {bad.empty(), bad.empty() ? std::to_string(cases.size()) + " subcommands byte-identical across reruns and 1/3 threads"
                                   : "differences in:" + bad};
}

struct Criterion {
  const char* id;
  const char* title;
  double limit_s;
  Outcome (*run)();
};

}  // namespace

int main(int argc, char** argv) {
  const Criterion all[] = {
      {"AC1", "convex toolkit exactness", 5, ac1},
      {"AC2", "forward identity", 60, ac2},
      {"AC3", "Feynman-Kac agreement", 300, ac3},
      {"AC4", "BSVI oracle", 10, ac4},
      {"AC5", "continuity", 600, ac5},
      {"AC6", "elliptic decay", 300, ac6},
      {"AC7", "compatibility checker", 10, ac7},
      {"AC8", "PDE residuals", 30, ac8},
      {"AC9", "determinism", 600, ac9},
  };
  std::set<std::string> only(argv + 1, argv + argc);
  int failed = 0;
  for (const auto& c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.limit_s;
    const bool pass = o.pass && in_time;
    if (!pass) ++failed;
    std::cout << c.id << (pass ? " PASS " : " FAIL ") << c.title << ": " << o.detail << " [" << num(secs) << " s, limit "
              << c.limit_s << " s" << (in_time ? "" : ", too slow") << "]" << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
