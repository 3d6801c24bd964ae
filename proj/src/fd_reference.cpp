#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "fk/errors.hpp"
#include "fk/validate.hpp"

namespace fk {

double SpaceTimeGrid::at(int i, double xv) const {
  const int J = static_cast<int>(x.size()) - 1;
  if (J < 1) return U(i, 0);
  const double h = (x.back() - x.front()) / J;
  double s = (xv - x.front()) / h;
  s = std::clamp(s, 0.0, static_cast<double>(J));
  const int j = std::min(static_cast<int>(s), J - 1);
  const double w = s - j;
  return (1.0 - w) * U(i, j) + w * U(i, j + 1);
}

namespace {

struct Stencil {
  std::vector<double> alpha;  // g^2 / (2 h^2)
  std::vector<double> beta;   // f / (2 h)
  std::vector<double> g;
};

class FdSolver {
 public:
  FdSolver(const Problem& pr, const FdOptions& o) : pr_(pr), opts_(o) {
    const auto& box = pr.domain.bounding_box();
    a_ = box.lo(0);
    b_ = box.hi(0);
    J_ = o.nx;
    h_ = (b_ - a_) / J_;
    x_.resize(J_ + 1);
    for (int j = 0; j <= J_; ++j) x_[j] = j == J_ ? b_ : a_ + h_ * j;
    n_a_ = pr.domain.grad_phi(Vec::Constant(1, a_))(0);
    n_b_ = pr.domain.grad_phi(Vec::Constant(1, b_))(0);
    if (std::abs(n_a_) < 1e-12 || std::abs(n_b_) < 1e-12) {
      fail(ErrorKind::InvalidInput, "validate", "degenerate boundary normal");
    }
  }

  FdGridSolution run() {
    const int nt = opts_.nt;
    const double T = pr_.grid.T();
    FdGridSolution out;
    out.theta = opts_.theta;
    out.rannacher_steps = std::min(opts_.rannacher_steps, nt);
    out.picard_sweeps = opts_.picard_sweeps;
    out.grid.x = x_;
    out.grid.t.resize(nt + 1);
    for (int i = 0; i <= nt; ++i) out.grid.t[i] = i == nt ? T : T * i / nt;
    out.grid.U.resize(nt + 1, J_ + 1);
    out.robin_residual.assign(nt + 1, 0.0);

    std::vector<double> u(J_ + 1);
    for (int j = 0; j <= J_; ++j) {
      double xv = x_[j];
      pr_.kappa.kappa(&xv, &u[j]);
    }
    store(out, nt, u);
    int done = 0;
    for (int i = nt - 1; i >= 0; --i, ++done) {
      const double t0 = out.grid.t[i];
      const double t1 = out.grid.t[i + 1];
      if (done < out.rannacher_steps) {
        const double tm = 0.5 * (t0 + t1);
        u = step(u, tm, t1, 1.0, i);
        u = step(u, t0, tm, 1.0, i);
      } else {
        u = step(u, t0, t1, opts_.theta, i);
      }
      store(out, i, u);
    }
    return out;
  }

 private:
  Stencil stencil(double t) const {
    Stencil s;
    s.alpha.resize(J_ + 1);
    s.beta.resize(J_ + 1);
    s.g.resize(J_ + 1);
    for (int j = 0; j <= J_; ++j) {
      double xv = x_[j], f = 0.0, g = 0.0;
      pr_.coeffs.f(t, &xv, &f);
      pr_.coeffs.g(t, &xv, &g);
      s.alpha[j] = 0.5 * g * g / (h_ * h_);
      s.beta[j] = f / (2.0 * h_);
      s.g[j] = g;
    }
    return s;
  }

  // u_x at the two ends implied by du/dn = G.
  std::pair<double, double> end_slopes(double t, const std::vector<double>& u) const {
    double xa = a_, xb = b_, ga = 0.0, gb = 0.0;
    pr_.driver.G(t, &xa, &u[0], &ga);
    pr_.driver.G(t, &xb, &u[J_], &gb);
    return {ga / n_a_, gb / n_b_};
  }

  double ux(const std::vector<double>& u, int j, double sa, double sb) const {
    if (j == 0) return sa;
    if (j == J_) return sb;
    return (u[j + 1] - u[j - 1]) / (2.0 * h_);
  }

  // L u including the ghost-node boundary data.
  std::vector<double> apply_L(const Stencil& s, const std::vector<double>& u, double sa, double sb) const {
    std::vector<double> r(J_ + 1);
    r[0] = 2.0 * s.alpha[0] * (u[1] - u[0]) + 2.0 * h_ * sa * (s.beta[0] - s.alpha[0]);
    for (int j = 1; j < J_; ++j) {
      r[j] = s.alpha[j] * (u[j + 1] - 2.0 * u[j] + u[j - 1]) + s.beta[j] * (u[j + 1] - u[j - 1]);
    }
    r[J_] = 2.0 * s.alpha[J_] * (u[J_ - 1] - u[J_]) + 2.0 * h_ * sb * (s.alpha[J_] + s.beta[J_]);
    return r;
  }

  std::vector<double> driver_term(double t, const Stencil& s, const std::vector<double>& u, double sa,
                                  double sb) const {
    std::vector<double> r(J_ + 1);
    for (int j = 0; j <= J_; ++j) {
      double xv = x_[j];
      const double z = s.g[j] * ux(u, j, sa, sb);
      pr_.driver.F(t, &xv, &u[j], &z, &r[j]);
    }
    return r;
  }

  // One backward step from level t1 (values u1) to t0.
  std::vector<double> step(const std::vector<double>& u1, double t0, double t1, double theta, int level) const {
    const double tau = t1 - t0;
    const Stencil s0 = stencil(t0);
    const Stencil s1 = stencil(t1);
    const auto [sa1, sb1] = end_slopes(t1, u1);
    std::vector<double> expl(J_ + 1, 0.0);
    {
      const auto L1 = apply_L(s1, u1, sa1, sb1);
      const auto F1 = driver_term(t1, s1, u1, sa1, sb1);
      for (int j = 0; j <= J_; ++j) expl[j] = u1[j] + tau * (1.0 - theta) * (L1[j] + F1[j]);
    }
    // Tridiagonal I - tau theta L (without the boundary data part).
    std::vector<double> lo(J_ + 1, 0.0), di(J_ + 1), up(J_ + 1, 0.0);
    for (int j = 0; j <= J_; ++j) di[j] = 1.0 + 2.0 * tau * theta * s0.alpha[j];
    up[0] = -tau * theta * 2.0 * s0.alpha[0];
    for (int j = 1; j < J_; ++j) {
      lo[j] = -tau * theta * (s0.alpha[j] - s0.beta[j]);
      up[j] = -tau * theta * (s0.alpha[j] + s0.beta[j]);
    }
    lo[J_] = -tau * theta * 2.0 * s0.alpha[J_];

    std::vector<double> lag = u1, next(J_ + 1), rhs(J_ + 1);
    double change = 0.0;
    const int sweeps = std::max(1, opts_.picard_sweeps);
    for (int sw = 0; sw < sweeps; ++sw) {
      const auto [sa, sb] = end_slopes(t0, lag);
      const auto F0 = driver_term(t0, s0, lag, sa, sb);
      for (int j = 0; j <= J_; ++j) rhs[j] = expl[j] + tau * theta * F0[j];
      rhs[0] += tau * theta * 2.0 * h_ * sa * (s0.beta[0] - s0.alpha[0]);
      rhs[J_] += tau * theta * 2.0 * h_ * sb * (s0.alpha[J_] + s0.beta[J_]);
      thomas(lo, di, up, rhs, next);
      if (opts_.project_phi) {
        for (int j = 0; j <= J_; ++j) pr_.phi->prox_raw(&next[j], tau);
        psor(lo, di, up, rhs, tau * theta, next, level);
      }
      change = 0.0;
      double scale = 0.0;
      for (int j = 0; j <= J_; ++j) {
        change = std::max(change, std::abs(next[j] - lag[j]));
        scale = std::max(scale, std::abs(next[j]));
      }
      if (!std::isfinite(change)) {
        fail(ErrorKind::NumericFailure, "validate", "fd: non-finite values at level " + std::to_string(level));
      }
      lag.swap(next);
      if (sweeps > 1 && sw == sweeps - 1 && change > opts_.picard_tol * (1.0 + scale)) {
        fail(ErrorKind::NumericFailure, "validate", "fd: Picard iteration did not converge at level " +
                                                        std::to_string(level));
      }
    }
    return lag;
  }

  // Projected SOR for A u - rhs + w dphi(u) containing 0, A tridiagonal. The
  // relaxed Gauss-Seidel value goes through prox with weight omega w / A_jj,
  // whose fixed point is the exact discrete inequality.
  void psor(const std::vector<double>& lo, const std::vector<double>& di, const std::vector<double>& up,
            const std::vector<double>& rhs, double w, std::vector<double>& u, int level) const {
    constexpr double omega = 1.6;
    constexpr int max_sweeps = 20000;
    for (int it = 0; it < max_sweeps; ++it) {
      double change = 0.0, scale = 0.0;
      for (int j = 0; j <= J_; ++j) {
        double s = rhs[j];
        if (j > 0) s -= lo[j] * u[j - 1];
        if (j < J_) s -= up[j] * u[j + 1];
        double v = u[j] + omega * (s / di[j] - u[j]);
        pr_.phi->prox_raw(&v, omega * w / di[j]);
        change = std::max(change, std::abs(v - u[j]));
        scale = std::max(scale, std::abs(v));
        u[j] = v;
      }
      if (change <= 1e-13 * (1.0 + scale)) return;
    }
    fail(ErrorKind::NumericFailure, "validate", "fd: projected SOR did not converge at level " + std::to_string(level));
  }

  static void thomas(const std::vector<double>& lo, const std::vector<double>& di, const std::vector<double>& up,
                     const std::vector<double>& rhs, std::vector<double>& out) {
    const std::size_t n = di.size();
    std::vector<double> c(n), d(n);
    c[0] = up[0] / di[0];
    d[0] = rhs[0] / di[0];
    for (std::size_t j = 1; j < n; ++j) {
      const double den = di[j] - lo[j] * c[j - 1];
      c[j] = up[j] / den;
      d[j] = (rhs[j] - lo[j] * d[j - 1]) / den;
    }
    out[n - 1] = d[n - 1];
    for (std::size_t j = n - 1; j-- > 0;) out[j] = d[j] - c[j] * out[j + 1];
  }

  void store(FdGridSolution& out, int i, const std::vector<double>& u) const {
    for (int j = 0; j <= J_; ++j) out.grid.U(i, j) = u[j];
    const double t = out.grid.t[i];
    double ga = 0.0, gb = 0.0, xa = a_, xb = b_;
    pr_.driver.G(t, &xa, &u[0], &ga);
    pr_.driver.G(t, &xb, &u[J_], &gb);
    const double ux_a = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h_);
    const double ux_b = (3.0 * u[J_] - 4.0 * u[J_ - 1] + u[J_ - 2]) / (2.0 * h_);
    out.robin_residual[i] = std::max(std::abs(n_a_ * ux_a - ga), std::abs(n_b_ * ux_b - gb));
  }

  const Problem& pr_;
  FdOptions opts_;
  double a_ = 0.0, b_ = 1.0, h_ = 1.0, n_a_ = -1.0, n_b_ = 1.0;
  int J_ = 1;
  std::vector<double> x_;
};

}  // namespace

FdGridSolution fd_reference_parabolic_1d(const Problem& problem, const FdOptions& opts) {
  if (problem.domain.dim() != 1 || !problem.domain.is_builtin() || problem.coeffs.d != 1 || problem.coeffs.k != 1 ||
      problem.driver.m != 1) {
    fail(ErrorKind::InvalidInput, "validate", "fd reference needs a one-dimensional interval with d = k = m = 1");
  }
  if (!problem.psi || !problem.psi->is_zero()) {
    fail(ErrorKind::InvalidInput, "validate", "fd reference needs psi = 0");
  }
  if (!problem.phi || (!problem.phi->is_zero() && !opts.project_phi)) {
    fail(ErrorKind::InvalidInput, "validate", "fd reference needs phi = 0 unless project_phi is set");
  }
  if (opts.nx < 4 || opts.nt < 1) fail(ErrorKind::InvalidInput, "validate", "fd grid too coarse");
  if (!(opts.theta >= 0.5 && opts.theta <= 1.0)) {
    fail(ErrorKind::InvalidInput, "validate", "theta must lie in [0.5, 1]");
  }
  return FdSolver(problem, opts).run();
}

}  // namespace fk
