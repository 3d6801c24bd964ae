#pragma once

#include <cstdint>
#include <vector>

#include "fk/backward.hpp"

namespace fk {

/// Infinite-horizon problem with zero terminal data and phi = psi = 0,
/// approximated on [0, n] with Y = 0 after n.
struct EllipticConfig {
  LevelSetDomain domain;
  SdeCoefficients coeffs;
  Driver driver;
  /// Decay rate, max(mu_F + ell_F^2, mu_G) <= lambda < 0.
  double lambda = -1.0;
  double tol = 1e-3;
  int n_max = 40;
  /// Grid steps per unit time, fixed so longer horizons keep the resolution.
  int steps_per_unit = 50;
  /// First pilot horizon; the second pilot is pilot_n + 2.
  int pilot_n = 2;
  SolverOptions solver;
  SimOptions sim;

  /// Throws InvalidConfig unless lambda < 0, lambda >= max(mu_F + ell_F^2,
  /// mu_G) and the coefficients are time-homogeneous.
  void validate() const;
};

struct Horizon {
  int n = 1;
  bool capped = false;
};

/// Smallest n >= 1 with c_hat e^{lambda n} <= tol, capped at n_max
/// (c_hat = 0 gives n = 1).
Horizon horizon_from_calibration(double c_hat, double lambda, double tol, int n_max);

/// Y_0^{x;n}: cross-path mean at time 0 for horizon n.
UEstimate solve_horizon(const EllipticConfig& cfg, const Vec& x, int n, std::size_t M, std::uint64_t seed);

struct Calibration {
  double c_hat = 0.0;
  Horizon horizon;
  Vec y_pilot;
  Vec y_pilot2;
};

/// Pilot runs at pilot_n and pilot_n + 2 with shared noise.
Calibration horizon_for_tolerance(const EllipticConfig& cfg, const Vec& x, std::size_t M, std::uint64_t seed);

struct DecayRow {
  int n = 0;
  Vec y;
  /// |Y_0^{x;n+2} - Y_0^{x;n}|, not set for the last row.
  double gap = 0.0;
};

/// Y_0^{x;n} for the given horizons (shared noise) and successive gaps.
std::vector<DecayRow> decay_table(const EllipticConfig& cfg, const Vec& x, const std::vector<int>& horizons,
                                  std::size_t M, std::uint64_t seed);

/// Least-squares slope of log(gap) against n over rows with a gap > 0.
double fit_log_slope(const std::vector<DecayRow>& rows);

struct EllipticResult {
  UEstimate u;
  Calibration calibration;
  std::vector<DecayRow> decay;
};

EllipticResult solve_elliptic(const EllipticConfig& cfg, const Vec& x, std::size_t M, std::uint64_t seed,
                              const std::vector<int>& table_horizons = {2, 4, 6, 8, 10});

}  // namespace fk
