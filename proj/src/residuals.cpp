#include <algorithm>
#include <cmath>

#include "fk/errors.hpp"
#include "fk/validate.hpp"

namespace fk {

namespace {

// Subdifferential interval of a one-dimensional convex function over
// [u - delta, u + delta], both ends projected to the closure of Dom.
std::pair<double, double> subdiff(const ConvexFunction& f, double u, double delta) {
  if (f.is_zero()) return {0.0, 0.0};
  Vec lo(1), hi(1), one(1);
  lo(0) = u - delta;
  hi(0) = u + delta;
  one(0) = 1.0;
  lo = f.project_dom(lo);
  hi = f.project_dom(hi);
  return {f.dir_derivatives(lo, one).first, f.dir_derivatives(hi, one).second};
}

// Signed excess of r over the interval [lo, hi].
double excess(double r, const std::pair<double, double>& iv) { return r - std::clamp(r, iv.first, iv.second); }

}  // namespace

PdeResidualReport pde_residuals(const SpaceTimeGrid& u, const Problem& problem, const ResidualOptions& opts) {
  const int nt = static_cast<int>(u.t.size()) - 1;
  const int J = static_cast<int>(u.x.size()) - 1;
  if (nt + 1 < 5 || J + 1 < 5) fail(ErrorKind::InvalidInput, "validate", "residuals need at least 5 nodes per axis");
  if (u.U.rows() != nt + 1 || u.U.cols() != J + 1) {
    fail(ErrorKind::InvalidInput, "validate", "grid values do not match the axes");
  }
  if (problem.driver.m != 1 || problem.coeffs.d != 1 || problem.coeffs.k != 1 || problem.domain.dim() != 1) {
    fail(ErrorKind::InvalidInput, "validate", "residuals need d = k = m = 1");
  }
  const double h = (u.x.back() - u.x.front()) / J;
  const double n_a = problem.domain.grad_phi(Vec::Constant(1, u.x.front()))(0);
  const double n_b = problem.domain.grad_phi(Vec::Constant(1, u.x.back()))(0);
  const int i0 = std::max(1, opts.skip_rows);
  const int i1 = std::min(nt - 1, nt - opts.skip_rows);
  if (i0 > i1) fail(ErrorKind::InvalidInput, "validate", "no time rows left after skipping");
  const auto& U = u.U;

  PdeResidualReport rep;
  rep.raw_min = kInf;
  rep.contact_raw_max = -kInf;
  double s_int = 0.0, s_mem = 0.0, s_bd = 0.0;

  auto operator_at = [&](int i, int j, double q, double X) {
    const double t = u.t[i];
    double x = u.x[j], f = 0.0, g = 0.0, F = 0.0;
    const double p = (U(i + 1, j) - U(i - 1, j)) / (u.t[i + 1] - u.t[i - 1]);
    problem.coeffs.f(t, &x, &f);
    problem.coeffs.g(t, &x, &g);
    const double y = U(i, j);
    const double z = g * q;
    problem.driver.F(t, &x, &y, &z, &F);
    return p + 0.5 * g * g * X + f * q + F;
  };

  for (int i = i0; i <= i1; ++i) {
    for (int j = 1; j < J; ++j) {
      const double q = (U(i, j + 1) - U(i, j - 1)) / (2.0 * h);
      const double X = (U(i, j + 1) - 2.0 * U(i, j) + U(i, j - 1)) / (h * h);
      const double r = operator_at(i, j, q, X);
      const auto iv = subdiff(*problem.phi, U(i, j), opts.membership_delta);
      const double mem = std::abs(excess(r, iv));
      if (iv.first < iv.second) {
        ++rep.contact_nodes;
        rep.contact_raw_max = std::max(rep.contact_raw_max, r);
      }
      rep.interior_max = std::max(rep.interior_max, std::abs(r));
      rep.membership_max = std::max(rep.membership_max, mem);
      rep.raw_min = std::min(rep.raw_min, r);
      s_int += r * r;
      s_mem += mem * mem;
      ++rep.interior_nodes;
    }
    for (int side = 0; side < 2; ++side) {
      const int j = side == 0 ? 0 : J;
      const int s = side == 0 ? 1 : -1;
      // one-sided differences pointing into the interval
      const double q = s * (-3.0 * U(i, j) + 4.0 * U(i, j + s) - U(i, j + 2 * s)) / (2.0 * h);
      const double X = (2.0 * U(i, j) - 5.0 * U(i, j + s) + 4.0 * U(i, j + 2 * s) - U(i, j + 3 * s)) / (h * h);
      const double t = u.t[i];
      double x = u.x[j], G = 0.0;
      const double y = U(i, j);
      problem.driver.G(t, &x, &y, &G);
      const double normal = side == 0 ? n_a : n_b;
      const double gamma = excess(-normal * q + G, subdiff(*problem.psi, y, opts.membership_delta));
      const double r = excess(operator_at(i, j, q, X), subdiff(*problem.phi, y, opts.membership_delta));
      const double viol = std::max({0.0, -std::max(r, gamma), std::min(r, gamma)});
      rep.boundary_max = std::max(rep.boundary_max, std::abs(gamma));
      rep.boundary_alternative = std::max(rep.boundary_alternative, viol);
      s_bd += gamma * gamma;
      ++rep.boundary_nodes;
    }
  }
  rep.interior_rms = std::sqrt(s_int / rep.interior_nodes);
  rep.membership_rms = std::sqrt(s_mem / rep.interior_nodes);
  rep.boundary_rms = std::sqrt(s_bd / rep.boundary_nodes);
  return rep;
}

SpaceTimeGrid sample_u_grid(const Problem& problem, const std::vector<double>& times, const std::vector<double>& xs,
                            std::size_t M, std::uint64_t seed) {
  if (problem.driver.m != 1 || problem.domain.dim() != 1) {
    fail(ErrorKind::InvalidInput, "validate", "u grids need d = m = 1");
  }
  SpaceTimeGrid g;
  g.t = times;
  g.x = xs;
  g.U.resize(static_cast<Eigen::Index>(times.size()), static_cast<Eigen::Index>(xs.size()));
  for (std::size_t i = 0; i < times.size(); ++i) {
    for (std::size_t j = 0; j < xs.size(); ++j) {
      g.U(i, j) = evaluate_u(problem, times[i], Vec::Constant(1, xs[j]), M, seed).u(0);
    }
  }
  return g;
}

}  // namespace fk
