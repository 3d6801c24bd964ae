#pragma once

#include <cstdint>
#include <vector>

#include "fk/backward.hpp"

namespace fk {

/// Values u(t_i, x_j) on a regular space-time grid; U has one row per time.
struct SpaceTimeGrid {
  std::vector<double> t;
  std::vector<double> x;
  Mat U;

  /// Linear interpolation in x at time row i.
  double at(int i, double x) const;
};

struct FdOptions {
  int nx = 400;
  int nt = 400;
  /// 0.5 is Crank-Nicolson; 1 is fully implicit.
  double theta = 0.5;
  /// Leading steps replaced by two implicit half steps each.
  int rannacher_steps = 2;
  int picard_sweeps = 3;
  /// Last Picard update must be below picard_tol (1 + max|u|).
  double picard_tol = 1e-6;
  /// Apply prox_phi(., dt) nodewise after each level (obstacle problems).
  bool project_phi = false;
};

struct FdGridSolution {
  SpaceTimeGrid grid;
  double theta = 0.5;
  int rannacher_steps = 0;
  int picard_sweeps = 0;
  /// Per time level, max over both ends of |du/dn - G| with one-sided
  /// second-order differences.
  std::vector<double> robin_residual;
};

/// Backward theta-scheme for u_t + (1/2) g^2 u_xx + f u_x + F(t, x, u, g u_x) = 0
/// on an interval with du/dn = G(t, x, u) (ghost nodes) and u(T) = kappa.
/// Requires d = k = m = 1 and psi = 0; phi must be zero unless project_phi.
FdGridSolution fd_reference_parabolic_1d(const Problem& problem, const FdOptions& opts = {});

struct PdeResidualReport {
  double interior_max = 0.0;
  double interior_rms = 0.0;
  double boundary_max = 0.0;
  double boundary_rms = 0.0;
  /// dist(p + Phi, [phi'_-(u), phi'_+(u)]) at interior nodes, m = 1 only.
  double membership_max = 0.0;
  double membership_rms = 0.0;
  /// Smallest raw p + Phi over interior nodes.
  double raw_min = 0.0;
  /// Interior nodes where the subdifferential interval has more than one
  /// point (the contact set of an indicator) and the largest raw p + Phi
  /// there (-inf when there are none).
  int contact_nodes = 0;
  double contact_raw_max = 0.0;
  /// Boundary alternative: at each boundary node max(r, Gamma) >= -tol and
  /// min(r, Gamma) <= tol; reports the largest violation (0 when satisfied).
  double boundary_alternative = 0.0;
  int interior_nodes = 0;
  int boundary_nodes = 0;
};

struct ResidualOptions {
  /// Subdifferential interval taken over [u - delta, u + delta] projected to Dom.
  double membership_delta = 1e-8;
  /// Time rows to skip at each end (the terminal layer can be rough).
  int skip_rows = 1;
};

/// Finite-difference jet surrogates (p, q, X) and the residuals
/// p + (1/2) g^2 X + f q + F(t, x, u, g q) inside and
/// -<grad phi_D(x), q> + G(t, x, u) at the two ends.
PdeResidualReport pde_residuals(const SpaceTimeGrid& u, const Problem& problem, const ResidualOptions& opts = {});

/// Grid of evaluate_u values at the given times and points (shared seed).
SpaceTimeGrid sample_u_grid(const Problem& problem, const std::vector<double>& times, const std::vector<double>& xs,
                            std::size_t M, std::uint64_t seed);

enum class SequenceKind { Space, Time };

const char* to_string(SequenceKind k);

struct ContinuitySpec {
  double t = 0.0;
  Vec x;
  SequenceKind kind = SequenceKind::Space;
  /// Space: x_n = x + 2^{-n} direction. Time: t_n = t + 2^{-n}.
  Vec direction;
  int n_first = 1;
  int n_last = 8;
  /// Trend tolerance in standard errors.
  double trend_se = 3.0;
  /// e_last must be below target_ratio * e_first.
  double target_ratio = 0.1;
  double u_tol = 5e-2;
};

struct ContinuityRow {
  int n = 0;
  double t = 0.0;
  Vec x;
  /// E sup_r |Y^n_r - Y_r|^2 and its standard error.
  double e = 0.0;
  double se = 0.0;
  Vec u;
  double du = 0.0;
};

struct ContinuityReport {
  double t = 0.0;
  Vec x;
  Vec u;
  std::uint64_t seed = 0;
  std::vector<ContinuityRow> rows;
  bool trend_ok = false;
  bool target_ok = false;
  bool u_ok = false;
  bool pass() const { return trend_ok && target_ok && u_ok; }
};

/// Coupled bundles (same seed, so shared Brownian increments at every
/// absolute step) for the base point and each sequence point.
ContinuityReport continuity_scan(const Problem& problem, const ContinuitySpec& spec, std::size_t M,
                                 std::uint64_t seed);

/// Per-path sup over nodes of |Y^a - Y^b|^2, averaged, with standard error.
MeanEstimate sup_square_distance(const BsdeSolution& a, const BsdeSolution& b);

}  // namespace fk
