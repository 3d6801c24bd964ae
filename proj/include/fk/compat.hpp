#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "fk/convex.hpp"
#include "fk/geometry.hpp"
#include "fk/model.hpp"

namespace fk {

struct CompatConfig {
  Vec u0;
  double c = 1.0;
  int n_y = 64;
  int n_eps = 9;
  int n_t = 3;
  int n_x = 8;
  int n_z = 4;
  double y_box = 4.0;
  double z_radius = 1.0;
};

/// Slack of conditions (b), (d), (e), (f), (g) at one sample; each is
/// "right side minus left side" so >= 0 means satisfied.
struct CompatMargins {
  double b = 0.0;
  double d = 0.0;
  double e = 0.0;
  double f = 0.0;
  double g = 0.0;
};

CompatMargins compat_margins(const Driver& driver, const ConvexFunction& phi, const ConvexFunction& psi, double c,
                             const Vec& u0, double t, const Vec& x, const Vec& y, const Mat& z, double eps);

struct NormalizationReport {
  std::string which;
  double value_at_u0 = 0.0;
  bool u0_interior = false;
  bool u0_minimizes = false;
  /// Translation that would move the (estimated) minimizer onto u0.
  Vec shift;
};

struct CompatReport {
  /// Condition (a): sup|phi(kappa)| + sup|psi(kappa)| on the sampled closure.
  double M = 0.0;
  /// Entries for (a), (b), (d), (e), (f), (g) in that order.
  std::vector<StructuralCheck> conditions;
  std::array<NormalizationReport, 2> normalization;
  std::size_t samples = 0;

  bool pass() const;
};

inline constexpr double kCompatTol = 1e-9;

/// Monte Carlo falsification of the compatibility conditions over a product
/// of sampled y, eps, t, x and z. PASS means no sampled counterexample.
CompatReport check_compatibility(const LevelSetDomain& domain, const Driver& driver, const ConvexFunction& phi,
                                 const ConvexFunction& psi, const TerminalCondition& kappa, const CompatConfig& cfg,
                                 double T, std::uint64_t seed, int threads = 1);

}  // namespace fk
