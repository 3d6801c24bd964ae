#pragma once

#include <cmath>
#include <cstdint>
#include <functional>

#include "fk/backward.hpp"
#include "fk/rng.hpp"

namespace fk::test {

/// Reflected Brownian motion on [-1, 1] with F = G = 0, phi = psi = 0 and
/// kappa = cos(pi x); tests overwrite what they need.
inline Problem heat_problem(double T, int N) {
  Problem p;
  p.domain = LevelSetDomain::interval(-1.0, 1.0);
  p.coeffs.f = [](double, const double*, double* o) { o[0] = 0.0; };
  p.coeffs.g = [](double, const double*, double* o) { o[0] = 1.0; };
  p.driver.F = [](double, const double*, const double*, const double*, double* o) { o[0] = 0.0; };
  p.driver.G = [](double, const double*, const double*, double* o) { o[0] = 0.0; };
  p.driver.F_ignores_z = true;
  p.driver.G_is_zero = true;
  p.phi = make_zero(1);
  p.psi = make_zero(1);
  p.kappa.kappa = [](const double* x, double* o) { o[0] = std::cos(M_PI * x[0]); };
  p.grid = TimeGrid(T, N);
  return p;
}

inline void set_F(Problem& p, std::function<double(double, double, double)> F) {
  p.driver.F = [F](double t, const double* x, const double* y, const double*, double* o) { o[0] = F(t, x[0], y[0]); };
}

inline void set_G(Problem& p, std::function<double(double, double)> G) {
  p.driver.G = [G](double t, const double* x, const double* y, double* o) { o[0] = G(x[0], y[0]); (void)t; };
  p.driver.G_is_zero = false;
}

inline void set_kappa(Problem& p, std::function<double(double)> k) {
  p.kappa.kappa = [k](const double* x, double* o) { o[0] = k(x[0]); };
}

/// Deterministic sampler for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}
  double uniform(double lo, double hi) { return lo + (hi - lo) * rng_.uniform(n_++, 0, 0); }
  double normal() { return rng_.normal(n_++, 0, 0); }
  Vec vec(int m, double lo, double hi) {
    Vec v(m);
    for (int i = 0; i < m; ++i) v(i) = uniform(lo, hi);
    return v;
  }

 private:
  CounterRng rng_;
  std::uint64_t n_ = 0;
};

}  // namespace fk::test
