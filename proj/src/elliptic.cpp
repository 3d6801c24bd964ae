#include "fk/elliptic.hpp"

#include <cmath>

#include "fk/errors.hpp"
#include "fk/text.hpp"

namespace fk {

void EllipticConfig::validate() const {
  if (!(lambda < 0.0)) fail(ErrorKind::InvalidConfig, "elliptic", "lambda must be negative, got " + to_text(lambda));
  const double need = default_lambda(driver);
  if (lambda < need - 1e-12) {
    fail(ErrorKind::InvalidConfig, "elliptic",
         "lambda " + to_text(lambda) + " is below max(mu_F + ell_F^2, mu_G) = " + to_text(need));
  }
  if (!driver.time_homogeneous || !coeffs.time_homogeneous) {
    fail(ErrorKind::InvalidConfig, "elliptic", "coefficients must not depend on t");
  }
  if (!(tol > 0.0)) fail(ErrorKind::InvalidConfig, "elliptic", "tol must be > 0");
  if (n_max < 1 || steps_per_unit < 1 || pilot_n < 1) {
    fail(ErrorKind::InvalidConfig, "elliptic", "n_max, steps_per_unit and pilot_n must be >= 1");
  }
}

Horizon horizon_from_calibration(double c_hat, double lambda, double tol, int n_max) {
  if (!(lambda < 0.0)) fail(ErrorKind::InvalidConfig, "elliptic", "lambda must be negative");
  if (!(tol > 0.0) || n_max < 1) fail(ErrorKind::InvalidConfig, "elliptic", "tol must be > 0 and n_max >= 1");
  Horizon h;
  if (!(c_hat > 0.0)) return h;
  const double v = std::log(tol / c_hat) / lambda;
  const double n = std::max(1.0, std::ceil(v - 1e-9));
  if (n > n_max) {
    h.n = n_max;
    h.capped = true;
  } else {
    h.n = static_cast<int>(n);
  }
  return h;
}

UEstimate solve_horizon(const EllipticConfig& cfg, const Vec& x, int n, std::size_t M, std::uint64_t seed) {
  cfg.validate();
  if (n < 1) fail(ErrorKind::InvalidInput, "elliptic", "horizon must be >= 1");
  Problem pr;
  pr.domain = cfg.domain;
  pr.coeffs = cfg.coeffs;
  pr.driver = cfg.driver;
  pr.phi = make_zero(cfg.driver.m);
  pr.psi = pr.phi;
  const int m = cfg.driver.m;
  pr.kappa.m = m;
  pr.kappa.kappa = [m](const double*, double* out) {
    for (int i = 0; i < m; ++i) out[i] = 0.0;
  };
  pr.grid = TimeGrid(static_cast<double>(n), n * cfg.steps_per_unit);
  pr.solver = cfg.solver;
  pr.sim = cfg.sim;
  return evaluate_u(pr, 0.0, x, M, seed);
}

Calibration horizon_for_tolerance(const EllipticConfig& cfg, const Vec& x, std::size_t M, std::uint64_t seed) {
  cfg.validate();
  Calibration c;
  c.y_pilot = solve_horizon(cfg, x, cfg.pilot_n, M, seed).u;
  c.y_pilot2 = solve_horizon(cfg, x, cfg.pilot_n + 2, M, seed).u;
  c.c_hat = (c.y_pilot2 - c.y_pilot).norm() / std::exp(cfg.lambda * cfg.pilot_n);
  c.horizon = horizon_from_calibration(c.c_hat, cfg.lambda, cfg.tol, cfg.n_max);
  return c;
}

std::vector<DecayRow> decay_table(const EllipticConfig& cfg, const Vec& x, const std::vector<int>& horizons,
                                  std::size_t M, std::uint64_t seed) {
  std::vector<DecayRow> rows;
  for (int n : horizons) {
    DecayRow r;
    r.n = n;
    r.y = solve_horizon(cfg, x, n, M, seed).u;
    rows.push_back(r);
  }
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) rows[i].gap = (rows[i + 1].y - rows[i].y).norm();
  return rows;
}

double fit_log_slope(const std::vector<DecayRow>& rows) {
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int cnt = 0;
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    if (!(rows[i].gap > 0.0)) continue;
    const double xv = rows[i].n;
    const double yv = std::log(rows[i].gap);
    sx += xv;
    sy += yv;
    sxx += xv * xv;
    sxy += xv * yv;
    ++cnt;
  }
  if (cnt < 2) fail(ErrorKind::NumericFailure, "elliptic", "need two positive gaps to fit a slope");
  return (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
}

EllipticResult solve_elliptic(const EllipticConfig& cfg, const Vec& x, std::size_t M, std::uint64_t seed,
                              const std::vector<int>& table_horizons) {
  cfg.validate();
  EllipticResult r;
  r.calibration = horizon_for_tolerance(cfg, x, M, seed);
  r.u = solve_horizon(cfg, x, r.calibration.horizon.n, M, seed);
  if (!table_horizons.empty()) r.decay = decay_table(cfg, x, table_horizons, M, seed);
  return r;
}

}  // namespace fk
