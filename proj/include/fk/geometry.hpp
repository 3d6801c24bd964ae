#pragma once

#include <functional>
#include <string>

#include "fk/types.hpp"

namespace fk {

enum class PointClass { Interior, Boundary, Exterior };

const char* to_string(PointClass c);

struct Projection {
  Vec point;
  double distance = 0.0;
};

struct BoundingBox {
  Vec lo;
  Vec hi;

  double diameter() const { return (hi - lo).norm(); }
};

/// Bounded open domain D = {x : phi(x) < 0} described by a level function
/// whose gradient has unit length on the boundary, so grad phi is the outward
/// normal there.
///
/// Built-in kinds have closed-form gradient, Hessian and exact closest-point
/// projection. Custom domains supply callbacks and are projected by damped
/// Newton iteration along the gradient; that projection lands on the boundary
/// but is only approximately the closest point. The level function is only
/// ever evaluated near the bounding box.
class LevelSetDomain {
 public:
  using ScalarField = std::function<double(const Vec&)>;
  using VectorField = std::function<Vec(const Vec&)>;
  using MatrixField = std::function<Mat(const Vec&)>;

  /// [a, b] in d = 1, phi(x) = ((x - c)^2 - r^2) / (2r).
  static LevelSetDomain interval(double a, double b);
  /// Ball of radius R about c, phi(x) = (|x - c|^2 - R^2) / (2R).
  static LevelSetDomain ball(const Vec& center, double radius);
  /// Empty placeholder (dim 0); every query on it fails.
  LevelSetDomain() = default;

  static LevelSetDomain custom(int dim, ScalarField phi, VectorField grad, MatrixField hess, BoundingBox box,
                               std::string description = "custom");

  int dim() const noexcept { return dim_; }
  const BoundingBox& bounding_box() const noexcept { return box_; }
  double boundary_tol() const noexcept { return boundary_tol_; }
  void set_boundary_tol(double tol);
  const std::string& description() const noexcept { return description_; }
  bool is_builtin() const noexcept { return kind_ != Kind::Custom; }

  double eval_phi(const Vec& x) const;
  Vec grad_phi(const Vec& x) const;
  Mat hess_phi(const Vec& x) const;

  Projection project_to_closure(const Vec& x) const;
  PointClass classify(const Vec& x) const;

  bool in_closure(const Vec& x) const { return eval_phi(x) <= boundary_tol_; }

  // Raw-pointer variants for the hot simulation loop; x has dim() entries.
  double phi_raw(const double* x) const;
  void grad_raw(const double* x, double* out) const;
  /// Projects x in place, returns the displacement length.
  double project_raw(double* x) const;

  static constexpr int kMaxNewtonIter = 50;
  static constexpr double kNewtonTol = 1e-12;

 private:
  enum class Kind { Interval, Ball, Custom };

  void check_finite(const Vec& x) const;
  Projection project_custom(const Vec& x) const;

  Kind kind_ = Kind::Ball;
  int dim_ = 0;
  Vec center_;
  double radius_ = 0.0;
  ScalarField phi_;
  VectorField grad_;
  MatrixField hess_;
  BoundingBox box_;
  double boundary_tol_ = 0.0;
  std::string description_;
};

}  // namespace fk
