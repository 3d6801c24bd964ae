#include "fk/model.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "fk/errors.hpp"
#include "fk/rng.hpp"
#include "fk/text.hpp"

namespace fk {

namespace {

constexpr double kSlack = 1e-9;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct Sampler {
  CounterRng rng;
  std::uint64_t index;
  std::uint32_t slot = 0;

  double uniform(double lo, double hi) { return lo + (hi - lo) * rng.uniform(index, 1, slot++); }
  Vec box(int n, double r) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = uniform(-r, r);
    return v;
  }
};

void update(StructuralCheck& c, double margin, const std::string& witness) {
  if (!std::isfinite(margin)) margin = -kInf;
  if (margin < c.worst_margin || c.witness.empty()) {
    c.worst_margin = margin;
    c.witness = witness;
  }
}

}  // namespace

Vec SdeCoefficients::drift(double t, const Vec& x) const {
  Vec out(d);
  f(t, x.data(), out.data());
  return out;
}

Mat SdeCoefficients::diffusion(double t, const Vec& x) const {
  Mat out(d, k);
  g(t, x.data(), out.data());
  return out;
}

Vec Driver::eval_F(double t, const Vec& x, const Vec& y, const Mat& z) const {
  Vec out(m);
  F(t, x.data(), y.data(), z.data(), out.data());
  return out;
}

Vec Driver::eval_G(double t, const Vec& x, const Vec& y) const {
  Vec out(m);
  G(t, x.data(), y.data(), out.data());
  return out;
}

Vec TerminalCondition::eval(const Vec& x) const {
  Vec out(m);
  kappa(x.data(), out.data());
  return out;
}

bool StructuralReport::pass() const {
  for (const auto& c : checks) {
    if (!c.pass) return false;
  }
  return true;
}

std::string StructuralReport::first_failure() const {
  for (const auto& c : checks) {
    if (!c.pass) {
      std::ostringstream os;
      os.precision(6);
      os << c.name << " violated (margin " << c.worst_margin << ") at " << c.witness;
      return os.str();
    }
  }
  return {};
}

Vec sample_closure(const LevelSetDomain& domain, std::uint64_t seed, std::uint64_t index) {
  const CounterRng rng(seed);
  const auto& box = domain.bounding_box();
  const int d = domain.dim();
  Vec x(d);
  for (std::uint64_t attempt = 0; attempt < 10000; ++attempt) {
    for (int i = 0; i < d; ++i) {
      x[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * rng.uniform(index, attempt, static_cast<std::uint32_t>(i));
    }
    if (domain.phi_raw(x.data()) <= 0.0) return x;
  }
  fail(ErrorKind::NumericFailure, "model", "could not sample the domain closure: " + domain.description());
}

StructuralReport check_structure(const LevelSetDomain& domain, const SdeCoefficients& coeffs, const Driver& driver,
                                 double T, int samples, std::uint64_t seed, double y_box, double z_box) {
  if (coeffs.d != domain.dim() || driver.d != domain.dim() || driver.k != coeffs.k) {
    fail(ErrorKind::InvalidModel, "model", "dimension mismatch between domain, coefficients and driver");
  }
  const int k = coeffs.k, m = driver.m;
  StructuralCheck mono_f{"drift one-sided monotonicity (mu_f)"};
  StructuralCheck lip_g{"diffusion Lipschitz (ell_g)"};
  StructuralCheck mono_F{"F monotone in y (mu_F)"};
  StructuralCheck lip_F{"F Lipschitz in z (ell_F)"};
  StructuralCheck growth_F{"F linear growth (b_F)"};
  StructuralCheck mono_G{"G monotone in y (mu_G)"};
  StructuralCheck growth_G{"G linear growth (b_G)"};

  const std::uint64_t point_seed = derive_seed(seed, 1);
  for (int s = 0; s < samples; ++s) {
    Sampler smp{CounterRng(derive_seed(seed, 2)), static_cast<std::uint64_t>(s)};
    const double t = smp.uniform(0.0, T);
    const Vec u = sample_closure(domain, point_seed, 2 * static_cast<std::uint64_t>(s));
    const Vec v = sample_closure(domain, point_seed, 2 * static_cast<std::uint64_t>(s) + 1);
    const Vec y = smp.box(m, y_box);
    const Vec y2 = smp.box(m, y_box);
    const Mat z = smp.box(m * k, z_box).reshaped(m, k);
    const Mat z2 = smp.box(m * k, z_box).reshaped(m, k);

    std::ostringstream at;
    at.precision(17);
    at << "t=" << t << " x=" << to_text(u) << " x'=" << to_text(v);
    const std::string xw = at.str();

    const double du2 = (u - v).squaredNorm();
    update(mono_f, coeffs.mu_f * du2 - (u - v).dot(coeffs.drift(t, u) - coeffs.drift(t, v)), xw);
    update(lip_g, coeffs.ell_g * std::sqrt(du2) - (coeffs.diffusion(t, u) - coeffs.diffusion(t, v)).norm(), xw);

    const std::string yw = "t=" + std::to_string(t) + " x=" + to_text(u) + " y=" + to_text(y) + " y'=" + to_text(y2);
    const Vec Fy = driver.eval_F(t, u, y, z);
    const Vec Fy2 = driver.eval_F(t, u, y2, z);
    update(mono_F, driver.mu_F * (y - y2).squaredNorm() - (y - y2).dot(Fy - Fy2), yw);
    update(lip_F, driver.ell_F * (z - z2).norm() - (Fy - driver.eval_F(t, u, y, z2)).norm(),
           yw + " z=" + to_text(z.reshaped()) + " z'=" + to_text(z2.reshaped()));
    const Mat z0 = Mat::Zero(m, k);
    update(growth_F, driver.b_F * (1.0 + y.norm()) - driver.eval_F(t, u, y, z0).norm(), yw);
    const Vec Gy = driver.eval_G(t, u, y);
    update(mono_G, driver.mu_G * (y - y2).squaredNorm() - (y - y2).dot(Gy - driver.eval_G(t, u, y2)), yw);
    update(growth_G, driver.b_G * (1.0 + y.norm()) - Gy.norm(), yw);
  }
  StructuralReport report;
  for (auto* c : {&mono_f, &lip_g, &mono_F, &lip_F, &growth_F, &mono_G, &growth_G}) {
    c->pass = c->worst_margin >= -kSlack;
    report.checks.push_back(*c);
  }
  return report;
}

}  // namespace fk
