#include "fk/compat.hpp"

#include <cmath>
#include <sstream>

#include "fk/errors.hpp"
#include "fk/parallel.hpp"
#include "fk/rng.hpp"
#include "fk/text.hpp"

namespace fk {

namespace {

double finite_or_fail(double v) { return std::isfinite(v) ? v : -kInf; }

struct Worst {
  double margin = kInf;
  int eps = -1, t = -1, x = -1, z = -1;

  void offer(double m, int ie, int it, int ix, int iz) {
    if (m < margin || eps < 0) {
      margin = m;
      eps = ie;
      t = it;
      x = ix;
      z = iz;
    }
  }
};

NormalizationReport normalization(const char* which, const ConvexFunction& f, const Vec& u0, std::uint64_t seed) {
  NormalizationReport r;
  r.which = which;
  r.value_at_u0 = f.value(u0);
  const int m = f.dim();
  const double h = 1e-6 * (1.0 + u0.norm());
  r.u0_interior = r.value_at_u0 < kInf;
  for (int i = 0; i < m && r.u0_interior; ++i) {
    Vec e = Vec::Zero(m);
    e[i] = h;
    r.u0_interior = f.in_dom(u0 + e) && f.in_dom(u0 - e);
  }
  r.u0_minimizes = r.value_at_u0 < kInf;
  if (r.u0_minimizes) {
    const CounterRng rng(seed);
    std::vector<Vec> dirs;
    for (int i = 0; i < m; ++i) {
      dirs.push_back(Vec::Unit(m, i));
      dirs.push_back(-Vec::Unit(m, i));
    }
    for (int j = 0; j < 16; ++j) {
      Vec z(m);
      for (int i = 0; i < m; ++i) z[i] = rng.normal(static_cast<std::uint64_t>(j), 0, static_cast<std::uint32_t>(i));
      dirs.push_back(z / z.norm());
    }
    for (const auto& z : dirs) {
      if (f.dir_derivatives(u0, z).second < -kCompatTol) {
        r.u0_minimizes = false;
        break;
      }
    }
  }
  if (r.u0_minimizes) {
    r.shift = Vec::Zero(m);
  } else {
    // proximal point iteration towards a minimizer
    Vec p = f.project_dom(u0);
    for (int it = 0; it < 200; ++it) p = f.prox(p, 1e3);
    r.shift = u0 - p;
  }
  return r;
}

}  // namespace

CompatMargins compat_margins(const Driver& driver, const ConvexFunction& phi, const ConvexFunction& psi, double c,
                             const Vec& u0, double t, const Vec& x, const Vec& y, const Mat& z, double eps) {
  const Vec gphi = yosida_grad(phi, y, eps);
  const Vec gpsi = yosida_grad(psi, y, eps);
  const Vec G = driver.eval_G(t, x, y);
  const Vec F = driver.eval_F(t, x, y, z);
  const Vec G0 = driver.eval_G(t, x, u0);
  const Vec F0 = driver.eval_F(t, x, u0, Mat::Zero(driver.m, driver.k));
  CompatMargins r;
  r.b = finite_or_fail(gphi.dot(gpsi));
  r.d = finite_or_fail(c * gpsi.norm() * (1.0 + G.norm()) - gphi.dot(G));
  r.e = finite_or_fail(c * gphi.norm() * (1.0 + F.norm()) - gpsi.dot(F));
  r.f = finite_or_fail(c * gpsi.norm() * (1.0 + G0.norm()) + gphi.dot(G0));
  r.g = finite_or_fail(c * gphi.norm() * (1.0 + F0.norm()) + gpsi.dot(F0));
  return r;
}

bool CompatReport::pass() const {
  for (const auto& c : conditions) {
    if (!c.pass) return false;
  }
  return true;
}

CompatReport check_compatibility(const LevelSetDomain& domain, const Driver& driver, const ConvexFunction& phi,
                                 const ConvexFunction& psi, const TerminalCondition& kappa, const CompatConfig& cfg,
                                 double T, std::uint64_t seed, int threads) {
  const int m = driver.m, k = driver.k;
  if (phi.dim() != m || psi.dim() != m || kappa.m != m || cfg.u0.size() != m) {
    fail(ErrorKind::InvalidInput, "convex", "compatibility check: dimension mismatch");
  }
  if (cfg.n_y < 1 || cfg.n_eps < 1 || cfg.n_t < 1 || cfg.n_x < 1 || cfg.n_z < 1) {
    fail(ErrorKind::InvalidInput, "convex", "compatibility check: sample counts must be positive");
  }
  if (!(cfg.c > 0.0)) fail(ErrorKind::InvalidInput, "convex", "compatibility check: c must be > 0");

  const CounterRng rng(derive_seed(seed, 11));
  std::vector<double> eps(cfg.n_eps);
  for (int i = 0; i < cfg.n_eps; ++i) {
    eps[i] = cfg.n_eps == 1 ? 1.0 : std::pow(10.0, -4.0 + 4.0 * i / (cfg.n_eps - 1));
  }
  std::vector<double> ts(cfg.n_t);
  for (int i = 0; i < cfg.n_t; ++i) ts[i] = cfg.n_t == 1 ? 0.0 : T * i / (cfg.n_t - 1);
  std::vector<Vec> xs;
  const auto& box = domain.bounding_box();
  for (int i = 0; i < cfg.n_x; ++i) {
    if (i % 2 == 0) {
      xs.push_back(sample_closure(domain, derive_seed(seed, 12), static_cast<std::uint64_t>(i)));
    } else {
      // boundary point from a projected exterior draw
      Vec p(domain.dim());
      for (int j = 0; j < domain.dim(); ++j) {
        const double w = box.hi[j] - box.lo[j];
        p[j] = box.lo[j] - 0.5 * w + 2.0 * w * rng.uniform(static_cast<std::uint64_t>(i), 1, static_cast<std::uint32_t>(j));
      }
      xs.push_back(domain.project_to_closure(p).point);
    }
  }
  std::vector<Mat> zs;
  for (int i = 0; i < cfg.n_z; ++i) {
    Vec v(m * k);
    for (int j = 0; j < m * k; ++j) v[j] = rng.normal(static_cast<std::uint64_t>(i), 2, static_cast<std::uint32_t>(j));
    v *= cfg.z_radius / v.norm();
    zs.push_back(v.reshaped(m, k));
  }
  std::vector<Vec> ys(cfg.n_y);
  for (int i = 0; i < cfg.n_y; ++i) {
    Vec y(m);
    for (int j = 0; j < m; ++j) {
      y[j] = -cfg.y_box + 2.0 * cfg.y_box * rng.uniform(static_cast<std::uint64_t>(i), 3, static_cast<std::uint32_t>(j));
    }
    ys[i] = y;
  }

  CompatReport report;
  report.samples = static_cast<std::size_t>(cfg.n_y) * cfg.n_eps * cfg.n_t * cfg.n_x * cfg.n_z;

  // (a)
  double sup_phi = 0.0, sup_psi = 0.0;
  Vec worst_x = xs[0];
  for (const auto& x : xs) {
    const Vec kv = kappa.eval(x);
    const double a = std::abs(phi.value(kv));
    const double b = std::abs(psi.value(kv));
    if (!(a <= sup_phi) || !(b <= sup_psi)) worst_x = x;
    sup_phi = std::max(sup_phi, std::isnan(a) ? kInf : a);
    sup_psi = std::max(sup_psi, std::isnan(b) ? kInf : b);
  }
  report.M = sup_phi + sup_psi;
  StructuralCheck ca{"(a) sup|phi(kappa)| + sup|psi(kappa)| finite"};
  ca.worst_margin = std::isfinite(report.M) ? 0.0 : -kInf;
  ca.witness = "x=" + to_text(worst_x);
  ca.pass = std::isfinite(report.M);
  report.conditions.push_back(ca);

  std::vector<std::array<Worst, 5>> worst(ys.size());
  parallel_for(ys.size(), threads, [&](std::size_t iy) {
    auto& w = worst[iy];
    for (int ie = 0; ie < cfg.n_eps; ++ie) {
      for (int it = 0; it < cfg.n_t; ++it) {
        for (int ix = 0; ix < cfg.n_x; ++ix) {
          for (int iz = 0; iz < cfg.n_z; ++iz) {
            const auto mg = compat_margins(driver, phi, psi, cfg.c, cfg.u0, ts[it], xs[ix], ys[iy], zs[iz], eps[ie]);
            const double vals[5] = {mg.b, mg.d, mg.e, mg.f, mg.g};
            for (int q = 0; q < 5; ++q) w[q].offer(vals[q], ie, it, ix, iz);
          }
        }
      }
    }
  });

  const char* names[5] = {"(b) <grad phi_eps, grad psi_eps> >= 0", "(d) boundary term G against grad phi_eps",
                          "(e) driver F against grad psi_eps", "(f) G(t,x,u0) against grad phi_eps",
                          "(g) F(t,x,u0,0) against grad psi_eps"};
  for (int q = 0; q < 5; ++q) {
    StructuralCheck c{names[q]};
    std::size_t best = 0;
    for (std::size_t iy = 1; iy < worst.size(); ++iy) {
      if (worst[iy][q].margin < worst[best][q].margin) best = iy;
    }
    const Worst& w = worst[best][q];
    c.worst_margin = w.margin;
    std::ostringstream os;
    os.precision(17);
    os << "y=" << to_text(ys[best]) << " eps=" << eps[w.eps] << " t=" << ts[w.t] << " x=" << to_text(xs[w.x])
       << " z=" << to_text(zs[w.z].reshaped());
    c.witness = os.str();
    c.pass = w.margin >= -kCompatTol;
    report.conditions.push_back(c);
  }

  report.normalization[0] = normalization("phi", phi, cfg.u0, derive_seed(seed, 13));
  report.normalization[1] = normalization("psi", psi, cfg.u0, derive_seed(seed, 14));
  return report;
}

}  // namespace fk
