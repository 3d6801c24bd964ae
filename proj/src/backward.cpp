#include "fk/backward.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "fk/errors.hpp"
#include "fk/parallel.hpp"
#include "fk/rng.hpp"
#include "fk/text.hpp"

namespace fk {

namespace {

// One split step from y~: both resolvents in the configured order. A zero
// psi weight (no boundary contact) skips the psi resolvent.
void resolve(const ConvexFunction& phi, const ConvexFunction& psi, SplitOrder order, int m, const double* ytilde,
             double w_phi, double w_psi, double* mid, double* y, double* du, double* dv) {
  for (int i = 0; i < m; ++i) mid[i] = ytilde[i];
  if (order == SplitOrder::PhiFirst) {
    if (!phi.is_zero()) phi.prox_raw(mid, w_phi);
    for (int i = 0; i < m; ++i) {
      du[i] = ytilde[i] - mid[i];
      y[i] = mid[i];
    }
    if (w_psi > 0.0 && !psi.is_zero()) psi.prox_raw(y, w_psi);
    for (int i = 0; i < m; ++i) dv[i] = mid[i] - y[i];
  } else {
    if (w_psi > 0.0 && !psi.is_zero()) psi.prox_raw(mid, w_psi);
    for (int i = 0; i < m; ++i) {
      dv[i] = ytilde[i] - mid[i];
      y[i] = mid[i];
    }
    if (!phi.is_zero()) phi.prox_raw(y, w_phi);
    for (int i = 0; i < m; ++i) du[i] = mid[i] - y[i];
  }
}

void check_finite_out(const double* v, int m, const char* what, std::size_t p, int n) {
  for (int i = 0; i < m; ++i) {
    if (!std::isfinite(v[i])) {
      fail(ErrorKind::InvalidModel, "backward",
           std::string(what) + " is not finite at path " + std::to_string(p) + " step " + std::to_string(n));
    }
  }
}

double dot(const double* a, const double* b, int m) {
  double s = 0.0;
  for (int i = 0; i < m; ++i) s += a[i] * b[i];
  return s;
}

// Contribution of step n to both discrete inequalities,
//   <dU, S - state> + phi(state) dt - phi(S) dt  and the psi analogue,
// with test values s_phi, s_psi.
std::pair<double, double> step_terms(const BsdeSolution& sol, const ConvexFunction& phi, const ConvexFunction& psi,
                                     std::size_t p, int n, const double* s_phi, const double* s_psi) {
  const int m = sol.m;
  const double* us = sol.u_state(p, n);
  const double* vs = sol.v_state(p, n);
  const double* du = sol.du(p, n);
  const double* dv = sol.dv(p, n);
  const double dt = sol.grid.dt();
  const double w = sol.psi_weight(p, n);
  double a = 0.0, b = 0.0;
  for (int i = 0; i < m; ++i) {
    a += du[i] * (s_phi[i] - us[i]);
    b += dv[i] * (s_psi[i] - vs[i]);
  }
  a += weighted(phi.value_raw(us), dt) - weighted(phi.value_raw(s_phi), dt);
  b += weighted(psi.value_raw(vs), w) - weighted(psi.value_raw(s_psi), w);
  return {a, b};
}

}  // namespace

const char* to_string(SplitOrder o) { return o == SplitOrder::PhiFirst ? "phi-first" : "psi-first"; }

Vec BsdeSolution::K(std::size_t p, int n) const {
  Vec out = Vec::Zero(m);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < m; ++i) out[i] += du(p, j)[i] + dv(p, j)[i];
  }
  return out;
}

BsdeSolution solve_bsvi(const ReflectedPathBundle& bundle, const Driver& driver, const ConvexFunction& phi,
                        const ConvexFunction& psi, const TerminalCondition& kappa, const SolverOptions& opts) {
  const int m = driver.m, k = bundle.k, d = bundle.d, N = bundle.N();
  if (driver.d != d || driver.k != k) fail(ErrorKind::InvalidInput, "backward", "driver and bundle dimensions differ");
  if (phi.dim() != m || psi.dim() != m || kappa.m != m) {
    fail(ErrorKind::InvalidInput, "backward", "convex functions and terminal condition must have dimension m");
  }
  const std::size_t M = bundle.M;
  const double dt = bundle.grid.dt();
  const int s0 = bundle.start_index;
  const int iters = std::max(1, opts.picard_iters);
  const bool need_z = !driver.F_ignores_z;

  BsdeSolution sol;
  sol.grid = bundle.grid;
  sol.M = M;
  sol.m = m;
  sol.k = k;
  sol.start_index = s0;
  sol.seed = bundle.seed;
  sol.order = opts.order;
  sol.Y.assign(M * (N + 1) * m, 0.0);
  sol.Ymid.assign(M * N * m, 0.0);
  sol.Z.assign(M * N * m * k, 0.0);
  sol.dU.assign(M * N * m, 0.0);
  sol.dV.assign(M * N * m, 0.0);
  sol.weight_psi.assign(M * N, dt);
  sol.martingale.assign(M * m, 0.0);

  auto Yp = [&](std::size_t p, int n) { return &sol.Y[(p * (N + 1) + n) * m]; };
  auto At = [&](std::vector<double>& v, std::size_t p, int n, int w) { return &v[(p * N + n) * w]; };

  parallel_for(M, opts.threads, [&](std::size_t p) {
    kappa.kappa(bundle.x(p, N), Yp(p, N));
    check_finite_out(Yp(p, N), m, "terminal value", p, N);
    const bool in_phi = phi.value_raw(Yp(p, N)) < kInf;
    if (!in_phi || psi.value_raw(Yp(p, N)) == kInf) {
      Vec xv = Eigen::Map<const Vec>(bundle.x(p, N), d);
      Vec yv = Eigen::Map<const Vec>(Yp(p, N), m);
      fail(ErrorKind::InvalidModel, "backward",
           "kappa" + to_text(xv) + " = " + to_text(yv) + " lies outside Dom(" + (in_phi ? "psi" : "phi") +
               ") at path " + std::to_string(p));
    }
  });

  const int q = m + (need_z ? m * k : 0);
  Mat features(static_cast<Eigen::Index>(M), d);
  Mat targets(static_cast<Eigen::Index>(M), q);
  std::vector<double> ybar(m, 0.0);
  for (int n = N - 1; n >= s0; --n) {
    const double r = bundle.grid.node(n);
    if (need_z) {
      // centring Y_{n+1} leaves E[Y dB | X] unchanged and removes the
      // variance of the mean level
      std::fill(ybar.begin(), ybar.end(), 0.0);
      std::vector<bool> constant(m, true);
      for (std::size_t p = 0; p < M; ++p) {
        for (int i = 0; i < m; ++i) {
          ybar[i] += Yp(p, n + 1)[i];
          if (Yp(p, n + 1)[i] != Yp(0, n + 1)[i]) constant[i] = false;
        }
      }
      // a constant column centres to exactly zero
      for (int i = 0; i < m; ++i) ybar[i] = constant[i] ? Yp(0, n + 1)[i] : ybar[i] / static_cast<double>(M);
    }
    for (std::size_t p = 0; p < M; ++p) {
      const auto row = static_cast<Eigen::Index>(p);
      const double* xn = bundle.x(p, n);
      for (int i = 0; i < d; ++i) features(row, i) = xn[i];
      const double* yn1 = Yp(p, n + 1);
      for (int i = 0; i < m; ++i) targets(row, i) = yn1[i];
      if (need_z) {
        const double* db = bundle.db(p, n);
        for (int j = 0; j < k; ++j) {
          for (int i = 0; i < m; ++i) targets(row, m + i + j * m) = (yn1[i] - ybar[i]) * db[j];
        }
      }
    }
    const RegressionFit fit = regress(opts.basis, features, targets, n);
    sol.max_condition = std::max(sol.max_condition, fit.condition);

    parallel_for(M, opts.threads, [&](std::size_t p) {
      const auto row = static_cast<Eigen::Index>(p);
      std::vector<double> E(m), ybreve(m), fv(m), gv(m), ytilde(m);
      double* z = At(sol.Z, p, n, m * k);
      for (int i = 0; i < m; ++i) {
        E[i] = fit.fitted(row, i);
        sol.martingale[p * m + i] += Yp(p, n + 1)[i] - E[i];
      }
      if (need_z) {
        for (int c = 0; c < m * k; ++c) z[c] = fit.fitted(row, m + c) / dt;
      }
      const double dA = bundle.dA(p, n);
      sol.weight_psi[p * N + n] = dA;
      const double* xn = bundle.x(p, n);
      ybreve = E;
      double* y = Yp(p, n);
      for (int it = 0; it < iters; ++it) {
        driver.F(r, xn, ybreve.data(), z, fv.data());
        check_finite_out(fv.data(), m, "F", p, n);
        for (int i = 0; i < m; ++i) ytilde[i] = E[i] + dt * fv[i];
        if (dA > 0.0 && !driver.G_is_zero) {
          driver.G(r, xn, ybreve.data(), gv.data());
          check_finite_out(gv.data(), m, "G", p, n);
          for (int i = 0; i < m; ++i) ytilde[i] += dA * gv[i];
        }
        resolve(phi, psi, opts.order, m, ytilde.data(), dt, dA, At(sol.Ymid, p, n, m), y, At(sol.dU, p, n, m),
                At(sol.dV, p, n, m));
        for (int i = 0; i < m; ++i) ybreve[i] = y[i];
      }
      check_finite_out(y, m, "Y", p, n);
    });
  }

  if (s0 > 0) {
    parallel_for(M, opts.threads, [&](std::size_t p) {
      for (int n = s0 - 1; n >= 0; --n) {
        resolve(phi, psi, opts.order, m, Yp(p, n + 1), dt, dt, At(sol.Ymid, p, n, m), Yp(p, n), At(sol.dU, p, n, m),
                At(sol.dV, p, n, m));
      }
    });
  }
  return sol;
}

Extension extend_before_t(const Vec& y_t, const TimeGrid& grid, const ConvexFunction& phi, const ConvexFunction& psi,
                          double t, SplitOrder order) {
  const int m = static_cast<int>(y_t.size());
  if (phi.dim() != m || psi.dim() != m) fail(ErrorKind::InvalidInput, "backward", "extension dimension mismatch");
  const int nt = grid.start_index_of(t);
  const double dt = grid.dt();
  Extension ext;
  ext.Y.resize(nt + 1, m);
  ext.dU.resize(nt, m);
  ext.dV.resize(nt, m);
  ext.Y.row(nt) = y_t.transpose();
  std::vector<double> next(m), mid(m), y(m), du(m), dv(m);
  for (int n = nt - 1; n >= 0; --n) {
    for (int i = 0; i < m; ++i) next[i] = ext.Y(n + 1, i);
    resolve(phi, psi, order, m, next.data(), dt, dt, mid.data(), y.data(), du.data(), dv.data());
    for (int i = 0; i < m; ++i) {
      ext.Y(n, i) = y[i];
      ext.dU(n, i) = du[i];
      ext.dV(n, i) = dv[i];
    }
  }
  return ext;
}

UEstimate start_value(const BsdeSolution& sol) {
  const int m = sol.m;
  const double Mn = static_cast<double>(sol.M);
  const int s0 = sol.start_index;
  // mean and sample standard deviation over paths of v(p); two-pass, and an
  // exactly constant column gives exactly its value and zero spread
  auto stats = [&](auto&& v, double& mean, double& sd) {
    const double first = v(0);
    bool constant = true;
    double s = 0.0;
    for (std::size_t p = 0; p < sol.M; ++p) {
      const double x = v(p);
      constant = constant && x == first;
      s += x;
    }
    mean = constant ? first : s / Mn;
    sd = 0.0;
    if (constant || sol.M < 2) return;
    double q = 0.0;
    for (std::size_t p = 0; p < sol.M; ++p) q += (v(p) - mean) * (v(p) - mean);
    sd = std::sqrt(q / (Mn - 1.0));
  };
  UEstimate e;
  e.u.resize(m);
  e.spread.resize(m);
  e.se.resize(m);
  for (int i = 0; i < m; ++i) {
    stats([&](std::size_t p) { return sol.y(p, s0)[i]; }, e.u[i], e.spread[i]);
    double mean = 0.0, sd = 0.0;
    stats([&](std::size_t p) { return sol.y(p, s0)[i] + sol.martingale[p * m + i]; }, mean, sd);
    e.se[i] = sd / std::sqrt(Mn);
  }
  e.max_condition = sol.max_condition;
  return e;
}

Solved solve_problem(const Problem& pr, double t, const Vec& x, std::size_t M, std::uint64_t seed) {
  if (!pr.phi || !pr.psi) fail(ErrorKind::InvalidInput, "backward", "problem needs phi and psi");
  SimOptions sim = pr.sim;
  sim.threads = pr.solver.threads;
  Solved s{simulate_reflected(pr.domain, pr.coeffs, pr.grid, t, x, M, seed, sim), {}};
  s.solution = solve_bsvi(s.bundle, pr.driver, *pr.phi, *pr.psi, pr.kappa, pr.solver);
  return s;
}

UEstimate evaluate_u(const Problem& pr, double t, const Vec& x, std::size_t M, std::uint64_t seed) {
  const Solved s = solve_problem(pr, t, x, M, seed);
  UEstimate e = start_value(s.solution);
  e.snap_distance = s.bundle.snap_distance;
  return e;
}

std::vector<MarkovRow> markov_consistency(const Problem& pr, double t, const Vec& x,
                                          const std::vector<double>& probe_times, std::size_t M, std::uint64_t seed,
                                          int subsample) {
  const Solved base = solve_problem(pr, t, x, M, seed);
  const int s0 = base.bundle.start_index;
  const int m = base.solution.m;
  const std::size_t P = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(subsample, 1)), 1, M);
  std::vector<MarkovRow> rows;
  for (std::size_t j = 0; j < probe_times.size(); ++j) {
    MarkovRow row;
    row.index = pr.grid.start_index_of(probe_times[j]);
    if (row.index < s0) fail(ErrorKind::InvalidInput, "backward", "probe time before the start time");
    row.s = pr.grid.node(row.index);
    double total = 0.0;
    for (std::size_t i = 0; i < P; ++i) {
      const std::size_t p = i * M / P;
      const Vec xs = Eigen::Map<const Vec>(base.bundle.x(p, row.index), base.bundle.d);
      const Vec fresh = evaluate_u(pr, row.s, xs, M, derive_seed(seed, 1000 + j * P + i)).u;
      const Vec ys = Eigen::Map<const Vec>(base.solution.y(p, row.index), m);
      total += (fresh - ys).norm();
    }
    row.probes = static_cast<int>(P);
    row.mean_abs = total / static_cast<double>(P);
    rows.push_back(row);
  }
  return rows;
}

ViReport vi_residual(const BsdeSolution& sol, const ConvexFunction& phi, const ConvexFunction& psi, int n_tests,
                     std::uint64_t seed, std::size_t max_paths) {
  const int m = sol.m, N = sol.N();
  const double T = sol.grid.T();
  const std::size_t P = std::clamp<std::size_t>(max_paths, 1, sol.M);
  const CounterRng rng(seed);

  // value box for the knots: range of the solution plus a margin
  Vec lo = Vec::Constant(m, kInf), hi = Vec::Constant(m, -kInf);
  for (std::size_t p = 0; p < sol.M; ++p) {
    for (int n = 0; n <= N; ++n) {
      for (int i = 0; i < m; ++i) {
        lo[i] = std::min(lo[i], sol.y(p, n)[i]);
        hi[i] = std::max(hi[i], sol.y(p, n)[i]);
      }
    }
  }
  lo.array() -= 1.0;
  hi.array() += 1.0;

  ViReport rep;
  rep.worst_phi = -kInf;
  rep.worst_psi = -kInf;
  constexpr int kKnots = 5;
  std::vector<double> knot_t(kKnots);
  std::vector<Vec> knot_v(kKnots, Vec(m));
  Vec s(m);
  for (int j = 0; j < n_tests; ++j) {
    for (std::size_t ip = 0; ip < P; ++ip) {
      const std::size_t p = ip * sol.M / P;
      std::uint32_t slot = 0;
      const std::uint64_t stream = static_cast<std::uint64_t>(j);
      auto uni = [&]() { return rng.uniform(stream, ip, slot++); };
      for (int c = 0; c < kKnots; ++c) {
        knot_t[c] = c == 0 ? 0.0 : (c == kKnots - 1 ? T : T * uni());
        for (int i = 0; i < m; ++i) knot_v[c][i] = lo[i] + (hi[i] - lo[i]) * uni();
        // alternating projections onto Dom(phi) and Dom(psi)
        for (int a = 0; a < 50; ++a) {
          psi.project_dom_raw(knot_v[c].data());
          phi.project_dom_raw(knot_v[c].data());
        }
      }
      std::sort(knot_t.begin() + 1, knot_t.end() - 1);
      int nu = static_cast<int>(uni() * N);
      int nv = static_cast<int>(uni() * N);
      if (nu > nv) std::swap(nu, nv);
      nv = std::min(nv + 1, N);

      double lhs_phi = 0.0, lhs_psi = 0.0;
      for (int n = nu; n < nv; ++n) {
        const double r = sol.grid.node(n);
        int c = 0;
        while (c + 2 < kKnots && knot_t[c + 1] < r) ++c;
        const double span = knot_t[c + 1] - knot_t[c];
        const double w = span > 0.0 ? std::clamp((r - knot_t[c]) / span, 0.0, 1.0) : 0.0;
        s = (1.0 - w) * knot_v[c] + w * knot_v[c + 1];
        const auto [a, b] = step_terms(sol, phi, psi, p, n, s.data(), s.data());
        lhs_phi += a;
        lhs_psi += b;
      }
      if (std::isnan(lhs_phi)) lhs_phi = kInf;
      if (std::isnan(lhs_psi)) lhs_psi = kInf;
      rep.worst_phi = std::max(rep.worst_phi, lhs_phi);
      rep.worst_psi = std::max(rep.worst_psi, lhs_psi);
      ++rep.tests;
    }
  }
  rep.worst = std::max(rep.worst_phi, rep.worst_psi);
  return rep;
}

ViReport vi_residual_self(const BsdeSolution& sol, const ConvexFunction& phi, const ConvexFunction& psi) {
  ViReport rep;
  rep.worst_phi = -kInf;
  rep.worst_psi = -kInf;
  for (std::size_t p = 0; p < sol.M; ++p) {
    double lp = 0.0, ls = 0.0;
    for (int n = 0; n < sol.N(); ++n) {
      const auto [a, b] = step_terms(sol, phi, psi, p, n, sol.u_state(p, n), sol.v_state(p, n));
      lp += a;
      ls += b;
    }
    rep.worst_phi = std::max(rep.worst_phi, std::isnan(lp) ? kInf : lp);
    rep.worst_psi = std::max(rep.worst_psi, std::isnan(ls) ? kInf : ls);
    ++rep.tests;
  }
  rep.worst = std::max(rep.worst_phi, rep.worst_psi);
  return rep;
}

MonotonicityReport monotonicity_measure(const BsdeSolution& a, const BsdeSolution& b) {
  if (!(a.grid == b.grid) || a.M != b.M || a.m != b.m) {
    fail(ErrorKind::InvalidInput, "backward", "solutions live on different grids or ensembles");
  }
  const int m = a.m, N = a.N();
  MonotonicityReport rep;
  rep.min_path = kInf;
  double total = 0.0;
  std::vector<double> ds(m), dk(m);
  for (std::size_t p = 0; p < a.M; ++p) {
    double sum = 0.0;
    for (int n = 0; n < N; ++n) {
      for (int i = 0; i < m; ++i) {
        ds[i] = a.u_state(p, n)[i] - b.u_state(p, n)[i];
        dk[i] = a.du(p, n)[i] - b.du(p, n)[i];
      }
      sum += dot(ds.data(), dk.data(), m);
      for (int i = 0; i < m; ++i) {
        ds[i] = a.v_state(p, n)[i] - b.v_state(p, n)[i];
        dk[i] = a.dv(p, n)[i] - b.dv(p, n)[i];
      }
      sum += dot(ds.data(), dk.data(), m);
    }
    rep.min_path = std::min(rep.min_path, sum);
    total += sum;
  }
  rep.mean = total / static_cast<double>(a.M);
  return rep;
}

double sup_square_mean(const BsdeSolution& sol) {
  double total = 0.0;
  for (std::size_t p = 0; p < sol.M; ++p) {
    double mx = 0.0;
    for (int n = sol.start_index; n <= sol.N(); ++n) mx = std::max(mx, dot(sol.y(p, n), sol.y(p, n), sol.m));
    total += mx;
  }
  return total / static_cast<double>(sol.M);
}

WeightedNorms weighted_norms(const BsdeSolution& sol, const ReflectedPathBundle& bundle, double lambda) {
  WeightedNorms w;
  w.lambda = lambda;
  const int N = sol.N();
  const double dt = sol.grid.dt();
  double sy = 0.0, sz = 0.0;
  for (std::size_t p = 0; p < sol.M; ++p) {
    double mx = 0.0, iz = 0.0;
    for (int n = sol.start_index; n <= N; ++n) {
      const double e = std::exp(2.0 * lambda * (sol.grid.node(n) + bundle.a(p, n)));
      mx = std::max(mx, e * dot(sol.y(p, n), sol.y(p, n), sol.m));
      if (n < N) iz += e * dot(sol.z(p, n), sol.z(p, n), sol.m * sol.k) * dt;
    }
    sy += mx;
    sz += iz;
  }
  w.sup_y = sy / static_cast<double>(sol.M);
  w.int_z = sz / static_cast<double>(sol.M);
  return w;
}

double default_lambda(const Driver& driver) {
  return std::max(driver.mu_F + driver.ell_F * driver.ell_F, driver.mu_G);
}

void write_solution_csv(const BsdeSolution& sol, const std::string& path, std::size_t max_paths) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::InvalidInput, "backward", "cannot open " + path);
  os << "path,step,time";
  for (int i = 0; i < sol.m; ++i) os << ",y" << i;
  os << ",znorm\n";
  const std::size_t P = std::min(max_paths, sol.M);
  for (std::size_t p = 0; p < P; ++p) {
    for (int n = 0; n <= sol.N(); ++n) {
      os << p << ',' << n << ',' << to_text(sol.grid.node(n));
      for (int i = 0; i < sol.m; ++i) os << ',' << to_text(sol.y(p, n)[i]);
      const double zn = n < sol.N() ? std::sqrt(dot(sol.z(p, n), sol.z(p, n), sol.m * sol.k)) : 0.0;
      os << ',' << to_text(zn) << '\n';
    }
  }
}

}  // namespace fk
