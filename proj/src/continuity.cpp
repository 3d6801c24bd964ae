#include <algorithm>
#include <cmath>

#include "fk/errors.hpp"
#include "fk/validate.hpp"

namespace fk {

const char* to_string(SequenceKind k) { return k == SequenceKind::Space ? "space" : "time"; }

MeanEstimate sup_square_distance(const BsdeSolution& a, const BsdeSolution& b) {
  if (!(a.grid == b.grid) || a.M != b.M || a.m != b.m) {
    fail(ErrorKind::InvalidInput, "validate", "solutions are not on the same grid and ensemble");
  }
  const int N = a.N();
  const int m = a.m;
  const double Mn = static_cast<double>(a.M);
  std::vector<double> per(a.M);
  double mean = 0.0;
  for (std::size_t p = 0; p < a.M; ++p) {
    double sup = 0.0;
    for (int n = 0; n <= N; ++n) {
      const double* ya = a.y(p, n);
      const double* yb = b.y(p, n);
      double s = 0.0;
      for (int i = 0; i < m; ++i) s += (ya[i] - yb[i]) * (ya[i] - yb[i]);
      sup = std::max(sup, s);
    }
    per[p] = sup;
    mean += sup;
  }
  mean /= Mn;
  double var = 0.0;
  for (double v : per) var += (v - mean) * (v - mean);
  MeanEstimate e;
  e.mean = mean;
  e.se = a.M > 1 ? std::sqrt(var / (Mn - 1.0) / Mn) : 0.0;
  return e;
}

ContinuityReport continuity_scan(const Problem& problem, const ContinuitySpec& spec, std::size_t M,
                                 std::uint64_t seed) {
  if (spec.n_first > spec.n_last) fail(ErrorKind::InvalidInput, "validate", "empty continuity sequence");
  const double T = problem.grid.T();
  std::vector<std::pair<double, Vec>> points;
  for (int n = spec.n_first; n <= spec.n_last; ++n) {
    const double step = std::ldexp(1.0, -n);
    double tn = spec.t;
    Vec xn = spec.x;
    if (spec.kind == SequenceKind::Space) {
      if (spec.direction.size() != spec.x.size()) {
        fail(ErrorKind::InvalidInput, "validate", "sequence direction has the wrong dimension");
      }
      xn += step * spec.direction;
    } else {
      tn += step;
    }
    if (!(tn >= 0.0 && tn <= T) || !problem.domain.in_closure(xn)) {
      fail(ErrorKind::InvalidInput, "validate", "sequence point " + std::to_string(n) + " leaves [0, T] x closure(D)");
    }
    points.emplace_back(tn, xn);
  }

  ContinuityReport rep;
  rep.t = spec.t;
  rep.x = spec.x;
  rep.seed = seed;
  const Solved base = solve_problem(problem, spec.t, spec.x, M, seed);
  rep.u = start_value(base.solution).u;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Solved s = solve_problem(problem, points[i].first, points[i].second, M, seed);
    const MeanEstimate e = sup_square_distance(base.solution, s.solution);
    ContinuityRow row;
    row.n = spec.n_first + static_cast<int>(i);
    row.t = points[i].first;
    row.x = points[i].second;
    row.e = e.mean;
    row.se = e.se;
    row.u = start_value(s.solution).u;
    row.du = (row.u - rep.u).norm();
    rep.rows.push_back(row);
  }

  rep.trend_ok = true;
  for (std::size_t i = 0; i + 1 < rep.rows.size(); ++i) {
    const auto& a = rep.rows[i];
    const auto& b = rep.rows[i + 1];
    if (b.e > a.e + spec.trend_se * std::sqrt(a.se * a.se + b.se * b.se)) rep.trend_ok = false;
  }
  const auto& first = rep.rows.front();
  const auto& last = rep.rows.back();
  rep.target_ok = last.e <= spec.target_ratio * first.e;
  rep.u_ok = last.du < spec.u_tol;
  return rep;
}

}  // namespace fk
