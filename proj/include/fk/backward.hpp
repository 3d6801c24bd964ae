#pragma once

#include <cstdint>
#include <vector>

#include "fk/convex.hpp"
#include "fk/forward.hpp"
#include "fk/geometry.hpp"
#include "fk/model.hpp"
#include "fk/regression.hpp"

namespace fk {

/// Which resolvent acts first inside a time step.
enum class SplitOrder { PhiFirst, PsiFirst };

const char* to_string(SplitOrder o);

struct SolverOptions {
  RegressionBasis basis;
  int picard_iters = 3;
  SplitOrder order = SplitOrder::PhiFirst;
  int threads = 1;
};

/// Ensemble solution of the backward inequality. Path-major arrays:
/// Y[(p (N+1) + n) m + i], Z[(p N + n) m k + i + j m], dU/dV/Ymid[(p N + n) m + i].
///
/// Within step n the two resolvents are applied in sequence. Ymid holds the
/// state after the first one; dU pairs with the state its own resolvent
/// produced (Ymid for PhiFirst, Y_n for PsiFirst) and dV with the other, so
/// dU_n is in dt * dphi(.) and dV_n in dA_n * dpsi(.) at those states.
struct BsdeSolution {
  TimeGrid grid;
  std::size_t M = 0;
  int m = 1;
  int k = 1;
  int start_index = 0;
  std::uint64_t seed = 0;
  SplitOrder order = SplitOrder::PhiFirst;
  std::vector<double> Y;
  std::vector<double> Ymid;
  std::vector<double> Z;
  std::vector<double> dU;
  std::vector<double> dV;
  /// Weight of the psi resolvent per step: dA_n of the bundle from the start
  /// index on, dt before it (the extension uses dr for both terms).
  std::vector<double> weight_psi;
  /// Per path (M x m): sum over steps from the start index of
  /// Y_{n+1} - E[Y_{n+1} | X_n], the discrete martingale part.
  std::vector<double> martingale;
  double max_condition = 1.0;

  int N() const noexcept { return grid.N(); }
  const double* y(std::size_t p, int n) const { return &Y[(p * (grid.N() + 1) + n) * m]; }
  const double* z(std::size_t p, int n) const { return &Z[(p * grid.N() + n) * m * k]; }
  const double* du(std::size_t p, int n) const { return &dU[(p * grid.N() + n) * m]; }
  const double* dv(std::size_t p, int n) const { return &dV[(p * grid.N() + n) * m]; }
  const double* ymid(std::size_t p, int n) const { return &Ymid[(p * grid.N() + n) * m]; }
  double psi_weight(std::size_t p, int n) const { return weight_psi[p * grid.N() + n]; }
  /// State paired with dU_n (respectively dV_n).
  const double* u_state(std::size_t p, int n) const { return order == SplitOrder::PhiFirst ? ymid(p, n) : y(p, n); }
  const double* v_state(std::size_t p, int n) const { return order == SplitOrder::PhiFirst ? y(p, n) : ymid(p, n); }
  /// K_n = sum_{j < n} (dU_j + dV_j).
  Vec K(std::size_t p, int n) const;
};

/// Backward regression sweep with proximal steps; before the bundle's start
/// index the deterministic extension with F = G = 0 and A = 0 is used.
BsdeSolution solve_bsvi(const ReflectedPathBundle& bundle, const Driver& driver, const ConvexFunction& phi,
                        const ConvexFunction& psi, const TerminalCondition& kappa, const SolverOptions& opts = {});

/// Deterministic extension on [0, t]: Y_n = prox_psi(prox_phi(Y_{n+1}, dt), dt)
/// (order as configured) from Y_{n_t} = y_t. Returns Y at nodes 0..n_t with
/// dU, dV for steps 0..n_t-1 (rows are nodes/steps, columns components).
struct Extension {
  Mat Y;
  Mat dU;
  Mat dV;
};
Extension extend_before_t(const Vec& y_t, const TimeGrid& grid, const ConvexFunction& phi, const ConvexFunction& psi,
                          double t, SplitOrder order = SplitOrder::PhiFirst);

/// Everything needed to evaluate u(t, x).
struct Problem {
  LevelSetDomain domain;
  SdeCoefficients coeffs;
  Driver driver;
  ConvexPtr phi;
  ConvexPtr psi;
  TerminalCondition kappa;
  TimeGrid grid;
  SolverOptions solver;
  SimOptions sim;
};

struct UEstimate {
  Vec u;
  /// Cross-path spread of Y at the start node (scheme error; 0 when every
  /// path shares the start value).
  Vec spread;
  /// Standard error of u from the pathwise values Y_start + martingale sum,
  /// whose ensemble mean is u.
  Vec se;
  double snap_distance = 0.0;
  double max_condition = 1.0;
};

UEstimate start_value(const BsdeSolution& sol);

struct Solved {
  ReflectedPathBundle bundle;
  BsdeSolution solution;
};

Solved solve_problem(const Problem& problem, double t, const Vec& x, std::size_t M, std::uint64_t seed);

/// u(t, x) = average over paths of Y at the start node.
UEstimate evaluate_u(const Problem& problem, double t, const Vec& x, std::size_t M, std::uint64_t seed);

struct MarkovRow {
  double s = 0.0;
  int index = 0;
  double mean_abs = 0.0;
  int probes = 0;
};

/// Compares Y_s on the ensemble with fresh evaluations u(s, X_s) at
/// `subsample` paths for each probe time.
std::vector<MarkovRow> markov_consistency(const Problem& problem, double t, const Vec& x,
                                          const std::vector<double>& probe_times, std::size_t M, std::uint64_t seed,
                                          int subsample = 8);

struct ViReport {
  /// Largest value of (left side - right side) over all sampled inequalities.
  double worst = 0.0;
  double worst_phi = 0.0;
  double worst_psi = 0.0;
  int tests = 0;
};

/// Random continuous piecewise-linear test processes with values in
/// Dom(phi) and Dom(psi), checked on random step ranges [u, v).
/// `max_paths` caps the paths examined (evenly strided).
ViReport vi_residual(const BsdeSolution& sol, const ConvexFunction& phi, const ConvexFunction& psi, int n_tests,
                     std::uint64_t seed, std::size_t max_paths = 256);

/// Same inequalities with the test process S = Y.
ViReport vi_residual_self(const BsdeSolution& sol, const ConvexFunction& phi, const ConvexFunction& psi);

struct MonotonicityReport {
  double min_path = 0.0;
  double mean = 0.0;
};

/// Per path sum over steps of <state - state', dK - dK'> with stage pairing,
/// for two solutions on the same bundle.
MonotonicityReport monotonicity_measure(const BsdeSolution& a, const BsdeSolution& b);

/// E sup_n |Y_n|^2 from the start index on.
double sup_square_mean(const BsdeSolution& sol);

struct WeightedNorms {
  double lambda = 0.0;
  double sup_y = 0.0;
  double int_z = 0.0;
};

/// E sup e^{2 lambda (r + A_r)} |Y_r|^2 and E sum e^{2 lambda (r + A_r)} |Z_r|^2 dt.
WeightedNorms weighted_norms(const BsdeSolution& sol, const ReflectedPathBundle& bundle, double lambda);

/// max(mu_F + ell_F^2, mu_G).
double default_lambda(const Driver& driver);

/// Long-form CSV: path, step, time, y0.., znorm (first `max_paths` paths).
void write_solution_csv(const BsdeSolution& sol, const std::string& path, std::size_t max_paths);

}  // namespace fk
