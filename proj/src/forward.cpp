#include "fk/forward.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fk/errors.hpp"
#include "fk/parallel.hpp"
#include "fk/rng.hpp"
#include "fk/text.hpp"

namespace fk {

TimeGrid::TimeGrid(double T, int N) : T_(T), N_(N) {
  if (!(T > 0.0) || !std::isfinite(T)) fail(ErrorKind::InvalidInput, "forward", "horizon T must be finite and > 0");
  if (N < 1) fail(ErrorKind::InvalidInput, "forward", "grid needs N >= 1 steps");
}

int TimeGrid::start_index_of(double t) const {
  if (!(t >= 0.0) || !(t <= T_ * (1.0 + 1e-12))) {
    fail(ErrorKind::InvalidInput, "forward", "start time " + to_text(t) + " outside [0, T]");
  }
  const double pos = t / T_ * N_;
  int k = static_cast<int>(std::floor(pos + 1e-9 * (1.0 + pos)));
  return std::clamp(k, 0, N_);
}

const char* to_string(ReflectionScheme s) {
  return s == ReflectionScheme::Projection ? "projection" : "penalization";
}

void brownian_increment(std::uint64_t seed, std::uint64_t path, int n, double dt, int k, int refinement, double* out) {
  const CounterRng rng(seed);
  double xi[16];
  double* buf = k <= 16 ? xi : nullptr;
  std::vector<double> heap;
  if (!buf) {
    heap.resize(k);
    buf = heap.data();
  }
  for (int j = 0; j < k; ++j) out[j] = 0.0;
  for (int r = 0; r < refinement; ++r) {
    rng.normals(path, static_cast<std::uint64_t>(n) * refinement + r, buf, static_cast<std::uint32_t>(k));
    for (int j = 0; j < k; ++j) out[j] += buf[j];
  }
  const double scale = std::sqrt(dt / refinement);
  for (int j = 0; j < k; ++j) out[j] *= scale;
}

ReflectedPathBundle simulate_reflected(const LevelSetDomain& domain, const SdeCoefficients& coeffs,
                                       const TimeGrid& grid, double t, const Vec& x, std::size_t M,
                                       std::uint64_t seed, const SimOptions& opts) {
  const int d = coeffs.d, k = coeffs.k, N = grid.N();
  if (domain.dim() != d) fail(ErrorKind::InvalidInput, "forward", "domain and coefficient dimensions differ");
  if (x.size() != d || !x.allFinite()) fail(ErrorKind::InvalidInput, "forward", "start point must be finite with dim d");
  if (!domain.in_closure(x)) {
    fail(ErrorKind::InvalidInput, "forward", "start point " + to_text(x) + " is outside the closure of the domain");
  }
  if (M < 1) fail(ErrorKind::InvalidInput, "forward", "need M >= 1 paths");
  if (opts.refinement < 1) fail(ErrorKind::InvalidInput, "forward", "refinement must be >= 1");
  if (opts.scheme == ReflectionScheme::Penalization && !(opts.penalty_eps > 0.0)) {
    fail(ErrorKind::InvalidInput, "forward", "penalty_eps must be > 0");
  }

  ReflectedPathBundle b;
  b.grid = grid;
  b.M = M;
  b.d = d;
  b.k = k;
  b.t_start = t;
  b.x_start = x;
  b.start_index = grid.start_index_of(t);
  b.snap_distance = t - grid.node(b.start_index);
  b.seed = seed;
  b.scheme = opts.scheme;
  b.X.assign(M * (N + 1) * d, 0.0);
  b.A.assign(M * (N + 1), 0.0);
  b.dB.assign(M * N * k, 0.0);
  b.boundary.assign(M * (N + 1), 0);

  const double dt = grid.dt();
  const int s0 = b.start_index;
  const bool start_on_boundary = domain.classify(x) == PointClass::Boundary;
  const double tol = domain.boundary_tol();

  parallel_for(M, opts.threads, [&](std::size_t p) {
    std::vector<double> fx(d), gx(d * k), xt(d), grad(d);
    double* X = &b.X[p * (N + 1) * d];
    double* A = &b.A[p * (N + 1)];
    double* dB = &b.dB[p * N * k];
    std::uint8_t* flag = &b.boundary[p * (N + 1)];
    for (int n = 0; n < N; ++n) brownian_increment(seed, p, n, dt, k, opts.refinement, dB + n * k);
    for (int n = 0; n <= s0; ++n) {
      for (int i = 0; i < d; ++i) X[n * d + i] = x[i];
      flag[n] = start_on_boundary;
    }
    for (int n = s0; n < N; ++n) {
      const double r = grid.node(n);
      const double* xn = X + n * d;
      coeffs.f(r, xn, fx.data());
      coeffs.g(r, xn, gx.data());
      for (int i = 0; i < d; ++i) {
        double v = xn[i] + fx[i] * dt;
        for (int j = 0; j < k; ++j) v += gx[i + j * d] * dB[n * k + j];
        xt[i] = v;
      }
      double delta = 0.0;
      if (opts.scheme == ReflectionScheme::Projection) {
        try {
          delta = domain.project_raw(xt.data());
        } catch (const Error& e) {
          fail(e.kind(), "forward", "path " + std::to_string(p) + " step " + std::to_string(n) + ": " + e.what());
        }
      } else {
        const double ph = domain.phi_raw(xn);
        if (ph > 0.0) {
          domain.grad_raw(xn, grad.data());
          const double push = ph * dt / opts.penalty_eps;
          for (int i = 0; i < d; ++i) xt[i] -= push * grad[i];
          delta = push;
        }
      }
      double* xn1 = X + (n + 1) * d;
      for (int i = 0; i < d; ++i) xn1[i] = xt[i];
      if (!std::isfinite(delta)) {
        fail(ErrorKind::NumericFailure, "forward",
             "path " + std::to_string(p) + " step " + std::to_string(n) + ": non-finite state");
      }
      A[n + 1] = A[n] + delta;
      flag[n + 1] = delta > 0.0 || std::abs(domain.phi_raw(xn1)) <= tol;
    }
  });
  if (opts.scheme == ReflectionScheme::Projection) validate_bundle(domain, b);
  return b;
}

void validate_bundle(const LevelSetDomain& domain, const ReflectedPathBundle& b) {
  const int N = b.N();
  const double tol = domain.boundary_tol();
  auto bad = [](std::size_t p, int n, const std::string& what) {
    fail(ErrorKind::NumericFailure, "forward",
         "bundle invariant violated at path " + std::to_string(p) + " step " + std::to_string(n) + ": " + what);
  };
  for (std::size_t p = 0; p < b.M; ++p) {
    for (int n = 0; n <= N; ++n) {
      const double* xn = b.x(p, n);
      for (int i = 0; i < b.d; ++i) {
        if (!std::isfinite(xn[i])) bad(p, n, "non-finite X");
      }
      if (domain.phi_raw(xn) > tol) bad(p, n, "X outside the closure");
      if (n <= b.start_index) {
        for (int i = 0; i < b.d; ++i) {
          if (xn[i] != b.x_start[i]) bad(p, n, "X differs from the start point before the start time");
        }
        if (b.a(p, n) != 0.0) bad(p, n, "A nonzero before the start time");
      }
      if (n > 0) {
        const double da = b.dA(p, n - 1);
        if (da < 0.0) bad(p, n, "A decreasing");
        if (da > 0.0 && !b.on_boundary(p, n)) bad(p, n, "A increases away from the boundary");
      }
    }
  }
}

ResidualStats local_time_identity_residual(const LevelSetDomain& domain, const SdeCoefficients& coeffs,
                                           const ReflectedPathBundle& b) {
  const int d = b.d, k = b.k, N = b.N();
  const double dt = b.grid.dt();
  std::vector<double> res(b.M);
  std::vector<double> fx(d), gx(d * k), grad(d);
  for (std::size_t p = 0; p < b.M; ++p) {
    double integral = 0.0, mart = 0.0;
    for (int n = b.start_index; n < N; ++n) {
      const double r = b.grid.node(n);
      const double* xn = b.x(p, n);
      coeffs.f(r, xn, fx.data());
      coeffs.g(r, xn, gx.data());
      domain.grad_raw(xn, grad.data());
      const Mat H = domain.hess_phi(Eigen::Map<const Vec>(xn, d));
      const Eigen::Map<const Mat> g(gx.data(), d, k);
      const double trace = (g * g.transpose()).cwiseProduct(H).sum();
      double drift = 0.0;
      for (int i = 0; i < d; ++i) drift += grad[i] * fx[i];
      integral += (0.5 * trace + drift) * dt;
      const double* db = b.db(p, n);
      for (int i = 0; i < d; ++i) {
        double gdb = 0.0;
        for (int j = 0; j < k; ++j) gdb += gx[i + j * d] * db[j];
        mart += grad[i] * gdb;
      }
    }
    const double phi_T = domain.phi_raw(b.x(p, N));
    const double phi_0 = domain.phi_raw(b.x(p, b.start_index));
    res[p] = b.a(p, N) - (integral + mart - (phi_T - phi_0));
  }
  ResidualStats s;
  double sq = 0.0;
  for (double r : res) {
    sq += r * r;
    s.max_abs = std::max(s.max_abs, std::abs(r));
  }
  s.rms = std::sqrt(sq / static_cast<double>(b.M));
  return s;
}

FlowDistance bundle_distance(const ReflectedPathBundle& a, const ReflectedPathBundle& b) {
  if (!(a.grid == b.grid) || a.M != b.M || a.d != b.d) {
    fail(ErrorKind::InvalidInput, "forward", "bundles live on different grids or ensembles");
  }
  const int N = a.N();
  double sx = 0.0, sx2 = 0.0, sa = 0.0, sa2 = 0.0;
  for (std::size_t p = 0; p < a.M; ++p) {
    double mx = 0.0, ma = 0.0;
    for (int n = 0; n <= N; ++n) {
      double dx = 0.0;
      for (int i = 0; i < a.d; ++i) {
        const double v = a.x(p, n)[i] - b.x(p, n)[i];
        dx += v * v;
      }
      const double da = a.a(p, n) - b.a(p, n);
      mx = std::max(mx, dx);
      ma = std::max(ma, da * da);
    }
    sx += mx;
    sx2 += mx * mx;
    sa += ma;
    sa2 += ma * ma;
  }
  const double Mn = static_cast<double>(a.M);
  FlowDistance r;
  r.e_X = sx / Mn;
  r.e_A = sa / Mn;
  if (a.M > 1) {
    r.se_X = std::sqrt(std::max(0.0, (sx2 / Mn - r.e_X * r.e_X) / (Mn - 1.0)));
    r.se_A = std::sqrt(std::max(0.0, (sa2 / Mn - r.e_A * r.e_A) / (Mn - 1.0)));
  }
  return r;
}

FlowDistance coupled_flow_distance(const LevelSetDomain& domain, const SdeCoefficients& coeffs, const TimeGrid& grid,
                                   double t, const Vec& x, double t2, const Vec& x2, std::size_t M,
                                   std::uint64_t seed, const SimOptions& opts) {
  const auto a = simulate_reflected(domain, coeffs, grid, t, x, M, seed, opts);
  const auto b = simulate_reflected(domain, coeffs, grid, t2, x2, M, seed, opts);
  return bundle_distance(a, b);
}

MomentEstimate exp_moment_estimate(const ReflectedPathBundle& b, double lambda) {
  if (!std::isfinite(lambda)) fail(ErrorKind::InvalidInput, "forward", "lambda must be finite");
  MomentEstimate e;
  if (lambda == 0.0) {
    e.mean = 1.0;
    return e;
  }
  double s = 0.0, s2 = 0.0;
  for (std::size_t p = 0; p < b.M; ++p) {
    const double v = std::exp(lambda * b.a(p, b.N()));
    s += v;
    s2 += v * v;
  }
  const double Mn = static_cast<double>(b.M);
  e.mean = s / Mn;
  if (!std::isfinite(e.mean) || !std::isfinite(s2)) {
    e.overflow = !std::isfinite(e.mean);
    e.se = std::numeric_limits<double>::infinity();
    if (e.overflow) e.mean = std::numeric_limits<double>::infinity();
    return e;
  }
  if (b.M > 1) e.se = std::sqrt(std::max(0.0, (s2 / Mn - e.mean * e.mean) / (Mn - 1.0)));
  return e;
}

MeanEstimate local_time_mean(const ReflectedPathBundle& b) {
  double s = 0.0, s2 = 0.0;
  for (std::size_t p = 0; p < b.M; ++p) {
    const double v = b.a(p, b.N());
    s += v;
    s2 += v * v;
  }
  const double Mn = static_cast<double>(b.M);
  MeanEstimate e;
  e.mean = s / Mn;
  if (b.M > 1) e.se = std::sqrt(std::max(0.0, (s2 / Mn - e.mean * e.mean) / (Mn - 1.0)));
  return e;
}

MeanEstimate strong_self_distance(const LevelSetDomain& domain, const SdeCoefficients& coeffs, double T, int N,
                                  const Vec& x, std::size_t M, std::uint64_t seed, int threads) {
  SimOptions coarse_opts;
  coarse_opts.refinement = 2;
  coarse_opts.threads = threads;
  SimOptions fine_opts;
  fine_opts.threads = threads;
  const auto coarse = simulate_reflected(domain, coeffs, TimeGrid(T, N), 0.0, x, M, seed, coarse_opts);
  const auto fine = simulate_reflected(domain, coeffs, TimeGrid(T, 2 * N), 0.0, x, M, seed, fine_opts);
  double s = 0.0, s2 = 0.0;
  for (std::size_t p = 0; p < M; ++p) {
    double mx = 0.0;
    for (int n = 0; n <= N; ++n) {
      double dx = 0.0;
      for (int i = 0; i < coarse.d; ++i) {
        const double v = coarse.x(p, n)[i] - fine.x(p, 2 * n)[i];
        dx += v * v;
      }
      mx = std::max(mx, dx);
    }
    s += mx;
    s2 += mx * mx;
  }
  const double Mn = static_cast<double>(M);
  MeanEstimate e;
  e.mean = s / Mn;
  if (M > 1) e.se = std::sqrt(std::max(0.0, (s2 / Mn - e.mean * e.mean) / (Mn - 1.0)));
  return e;
}

}  // namespace fk
