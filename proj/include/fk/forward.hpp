#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "fk/geometry.hpp"
#include "fk/model.hpp"
#include "fk/types.hpp"

namespace fk {

/// Uniform grid r_k = k T / N on [0, T] with r_N = T exactly.
class TimeGrid {
 public:
  TimeGrid() = default;
  TimeGrid(double T, int N);

  double T() const noexcept { return T_; }
  int N() const noexcept { return N_; }
  double dt() const noexcept { return T_ / N_; }
  double node(int k) const noexcept { return k == N_ ? T_ : T_ * k / N_; }
  /// Largest k with r_k <= t (up to rounding); t must lie in [0, T].
  int start_index_of(double t) const;

  bool operator==(const TimeGrid& o) const { return T_ == o.T_ && N_ == o.N_; }

 private:
  double T_ = 1.0;
  int N_ = 1;
};

enum class ReflectionScheme { Projection, Penalization };

const char* to_string(ReflectionScheme s);

struct SimOptions {
  ReflectionScheme scheme = ReflectionScheme::Projection;
  /// Penalty width for the penalization scheme.
  double penalty_eps = 1e-3;
  /// Each increment is the sum of `refinement` sub-increments of a grid with
  /// N * refinement steps, so a coarse bundle nests inside a fine one.
  int refinement = 1;
  int threads = 1;
};

/// Monte Carlo ensemble of reflected paths. Arrays are path-major:
/// X[(p (N+1) + n) d + i], A[p (N+1) + n], dB[(p N + n) k + j].
struct ReflectedPathBundle {
  TimeGrid grid;
  std::size_t M = 0;
  int d = 1;
  int k = 1;
  double t_start = 0.0;
  Vec x_start;
  int start_index = 0;
  double snap_distance = 0.0;
  std::uint64_t seed = 0;
  ReflectionScheme scheme = ReflectionScheme::Projection;
  std::vector<double> X;
  std::vector<double> A;
  std::vector<double> dB;
  std::vector<std::uint8_t> boundary;

  int N() const noexcept { return grid.N(); }
  const double* x(std::size_t p, int n) const { return &X[(p * (grid.N() + 1) + n) * d]; }
  double* x(std::size_t p, int n) { return &X[(p * (grid.N() + 1) + n) * d]; }
  double a(std::size_t p, int n) const { return A[p * (grid.N() + 1) + n]; }
  const double* db(std::size_t p, int n) const { return &dB[(p * grid.N() + n) * k]; }
  bool on_boundary(std::size_t p, int n) const { return boundary[p * (grid.N() + 1) + n] != 0; }
  double dA(std::size_t p, int n) const { return a(p, n + 1) - a(p, n); }
};

/// Brownian increment dB_n of path p on the grid, written to out[0..k).
void brownian_increment(std::uint64_t seed, std::uint64_t path, int n, double dt, int k, int refinement, double* out);

/// Projection Euler: X~ = X_n + f dt + g dB_n, (X_{n+1}, delta) = projection of
/// X~ onto the closure of D, dA_n = delta. Nodes before the snapped start
/// index carry x and A = 0.
ReflectedPathBundle simulate_reflected(const LevelSetDomain& domain, const SdeCoefficients& coeffs,
                                       const TimeGrid& grid, double t, const Vec& x, std::size_t M,
                                       std::uint64_t seed, const SimOptions& opts = {});

/// Checks the bundle invariants; throws NumericFailure naming the first
/// offending path and step.
void validate_bundle(const LevelSetDomain& domain, const ReflectedPathBundle& bundle);

struct ResidualStats {
  double rms = 0.0;
  double max_abs = 0.0;
};

/// Per-path discrete residual at s = T of
///   A_T = sum L phi(X_n) dt + sum <grad phi(X_n), g dB_n> - (phi(X_T) - phi(x)).
ResidualStats local_time_identity_residual(const LevelSetDomain& domain, const SdeCoefficients& coeffs,
                                           const ReflectedPathBundle& bundle);

struct FlowDistance {
  double e_X = 0.0;
  double e_A = 0.0;
  double se_X = 0.0;
  double se_A = 0.0;
};

/// E sup_n |X_n - X'_n|^2 and E sup_n |A_n - A'_n|^2 for two starts driven by
/// identical increments.
FlowDistance coupled_flow_distance(const LevelSetDomain& domain, const SdeCoefficients& coeffs, const TimeGrid& grid,
                                   double t, const Vec& x, double t2, const Vec& x2, std::size_t M,
                                   std::uint64_t seed, const SimOptions& opts = {});

FlowDistance bundle_distance(const ReflectedPathBundle& a, const ReflectedPathBundle& b);

struct MomentEstimate {
  double mean = 0.0;
  double se = 0.0;
  bool overflow = false;
};

/// Empirical E exp(lambda A_T).
MomentEstimate exp_moment_estimate(const ReflectedPathBundle& bundle, double lambda);

struct MeanEstimate {
  double mean = 0.0;
  double se = 0.0;
};

/// Mean and standard error of A_T.
MeanEstimate local_time_mean(const ReflectedPathBundle& bundle);

/// E sup_n |X^(N)_n - X^(2N)_{2n}|^2 with nested increments.
MeanEstimate strong_self_distance(const LevelSetDomain& domain, const SdeCoefficients& coeffs, double T, int N,
                                  const Vec& x, std::size_t M, std::uint64_t seed, int threads = 1);

// Export. CSV columns: path, step, time, x0.., A, boundary.
void write_bundle_csv(const ReflectedPathBundle& bundle, const std::string& path, std::size_t max_paths);
/// Little-endian binary dump starting with the magic "FKRB1".
void write_bundle_binary(const ReflectedPathBundle& bundle, const std::string& path);
ReflectedPathBundle read_bundle_binary(const std::string& path);

}  // namespace fk
