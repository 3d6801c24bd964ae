#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "fk/geometry.hpp"
#include "fk/types.hpp"

namespace fk {

/// Forward coefficients f(t, x) in R^d and g(t, x) in R^{d x k}.
/// Callbacks write into caller-provided storage; g is column-major.
struct SdeCoefficients {
  int d = 1;
  int k = 1;
  std::function<void(double t, const double* x, double* out)> f;
  std::function<void(double t, const double* x, double* out)> g;
  double mu_f = 0.0;
  double ell_g = 1.0;
  /// Set when f and g do not depend on t.
  bool time_homogeneous = true;

  Vec drift(double t, const Vec& x) const;
  Mat diffusion(double t, const Vec& x) const;
};

/// Backward generator: F(t, x, y, z) with z in R^{m x k} (column-major) and
/// the boundary term G(t, x, y).
struct Driver {
  int m = 1;
  int d = 1;
  int k = 1;
  std::function<void(double t, const double* x, const double* y, const double* z, double* out)> F;
  std::function<void(double t, const double* x, const double* y, double* out)> G;
  double mu_F = 0.0;
  double ell_F = 1.0;
  double b_F = 1.0;
  double mu_G = 0.0;
  double b_G = 1.0;
  /// Set when F does not depend on z (skips the Z regression).
  bool F_ignores_z = false;
  bool G_is_zero = false;
  bool time_homogeneous = true;

  Vec eval_F(double t, const Vec& x, const Vec& y, const Mat& z) const;
  Vec eval_G(double t, const Vec& x, const Vec& y) const;
};

struct TerminalCondition {
  int m = 1;
  std::function<void(const double* x, double* out)> kappa;

  Vec eval(const Vec& x) const;
};

/// One sampled hypothesis check: worst slack (>= 0 means satisfied) and the
/// sample that produced it.
struct StructuralCheck {
  explicit StructuralCheck(std::string n = {}) : name(std::move(n)) {}

  std::string name;
  double worst_margin = 0.0;
  std::string witness;
  bool pass = true;
};

struct StructuralReport {
  std::vector<StructuralCheck> checks;
  bool pass() const;
  std::string first_failure() const;
};

/// Samples the monotonicity and Lipschitz hypotheses of the forward
/// coefficients and of the driver on points of the closure of D, y in
/// [-y_box, y_box]^m and z in [-z_box, z_box]^{m x k}. Tolerance 1e-9.
StructuralReport check_structure(const LevelSetDomain& domain, const SdeCoefficients& coeffs, const Driver& driver,
                                 double T, int samples, std::uint64_t seed, double y_box = 10.0, double z_box = 10.0);

/// Uniform sample of the closure of D by rejection from the bounding box.
Vec sample_closure(const LevelSetDomain& domain, std::uint64_t seed, std::uint64_t index);

}  // namespace fk
