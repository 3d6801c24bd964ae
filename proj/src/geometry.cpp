#include "fk/geometry.hpp"

#include <array>
#include <cmath>
#include <sstream>
#include <vector>

#include "fk/errors.hpp"
#include "fk/text.hpp"

namespace fk {

const char* to_string(PointClass c) {
  switch (c) {
    case PointClass::Interior: return "interior";
    case PointClass::Boundary: return "boundary";
    case PointClass::Exterior: return "exterior";
  }
  return "unknown";
}

LevelSetDomain LevelSetDomain::interval(double a, double b) {
  if (!(std::isfinite(a) && std::isfinite(b) && a < b)) {
    fail(ErrorKind::InvalidInput, "geometry", "interval needs finite a < b");
  }
  LevelSetDomain d;
  d.kind_ = Kind::Interval;
  d.dim_ = 1;
  d.center_ = Vec::Constant(1, 0.5 * (a + b));
  d.radius_ = 0.5 * (b - a);
  d.box_ = {Vec::Constant(1, a), Vec::Constant(1, b)};
  d.boundary_tol_ = 1e-8 * d.box_.diameter();
  std::ostringstream os;
  os.precision(17);
  os << "interval [" << a << ", " << b << "]";
  d.description_ = os.str();
  return d;
}

LevelSetDomain LevelSetDomain::ball(const Vec& center, double radius) {
  if (center.size() < 1 || !center.allFinite() || !(radius > 0.0) || !std::isfinite(radius)) {
    fail(ErrorKind::InvalidInput, "geometry", "ball needs a finite center and positive radius");
  }
  LevelSetDomain d;
  d.kind_ = Kind::Ball;
  d.dim_ = static_cast<int>(center.size());
  d.center_ = center;
  d.radius_ = radius;
  d.box_ = {center.array() - radius, center.array() + radius};
  d.boundary_tol_ = 1e-8 * d.box_.diameter();
  std::ostringstream os;
  os.precision(17);
  os << "ball center " << to_text(center) << " radius " << radius;
  d.description_ = os.str();
  return d;
}

LevelSetDomain LevelSetDomain::custom(int dim, ScalarField phi, VectorField grad, MatrixField hess, BoundingBox box,
                                      std::string description) {
  if (dim < 1 || !phi || !grad || box.lo.size() != dim || box.hi.size() != dim ||
      !(box.hi.array() > box.lo.array()).all()) {
    fail(ErrorKind::InvalidInput, "geometry", "custom domain needs dim >= 1, phi, grad and a proper bounding box");
  }
  LevelSetDomain d;
  d.kind_ = Kind::Custom;
  d.dim_ = dim;
  d.phi_ = std::move(phi);
  d.grad_ = std::move(grad);
  d.hess_ = std::move(hess);
  d.box_ = std::move(box);
  d.boundary_tol_ = 1e-8 * d.box_.diameter();
  d.description_ = std::move(description);
  return d;
}

void LevelSetDomain::set_boundary_tol(double tol) {
  if (!(tol >= 0.0) || !std::isfinite(tol)) fail(ErrorKind::InvalidInput, "geometry", "boundary_tol must be >= 0");
  boundary_tol_ = tol;
}

void LevelSetDomain::check_finite(const Vec& x) const {
  if (x.size() != dim_) {
    fail(ErrorKind::InvalidInput, "geometry",
         "point has dimension " + std::to_string(x.size()) + ", domain has " + std::to_string(dim_));
  }
  if (!x.allFinite()) fail(ErrorKind::InvalidInput, "geometry", "non-finite coordinate in " + to_text(x));
}

double LevelSetDomain::phi_raw(const double* x) const {
  if (kind_ == Kind::Custom) return phi_(Eigen::Map<const Vec>(x, dim_));
  double r2 = 0.0;
  for (int i = 0; i < dim_; ++i) {
    const double dx = x[i] - center_[i];
    r2 += dx * dx;
  }
  return (r2 - radius_ * radius_) / (2.0 * radius_);
}

void LevelSetDomain::grad_raw(const double* x, double* out) const {
  if (kind_ == Kind::Custom) {
    const Vec g = grad_(Eigen::Map<const Vec>(x, dim_));
    for (int i = 0; i < dim_; ++i) out[i] = g[i];
    return;
  }
  for (int i = 0; i < dim_; ++i) out[i] = (x[i] - center_[i]) / radius_;
}

double LevelSetDomain::eval_phi(const Vec& x) const {
  check_finite(x);
  return phi_raw(x.data());
}

Vec LevelSetDomain::grad_phi(const Vec& x) const {
  check_finite(x);
  Vec g(dim_);
  grad_raw(x.data(), g.data());
  return g;
}

Mat LevelSetDomain::hess_phi(const Vec& x) const {
  check_finite(x);
  if (kind_ == Kind::Custom) {
    if (!hess_) fail(ErrorKind::InvalidInput, "geometry", "custom domain has no Hessian callback");
    return hess_(x);
  }
  return Mat::Identity(dim_, dim_) / radius_;
}

double LevelSetDomain::project_raw(double* x) const {
  if (kind_ == Kind::Custom) {
    const Projection p = project_custom(Eigen::Map<const Vec>(x, dim_));
    for (int i = 0; i < dim_; ++i) x[i] = p.point[i];
    return p.distance;
  }
  double r2 = 0.0;
  for (int i = 0; i < dim_; ++i) {
    const double dx = x[i] - center_[i];
    r2 += dx * dx;
  }
  if (r2 <= radius_ * radius_) return 0.0;
  if (dim_ == 1) {
    // clamp, exact in floating point
    const double lo = center_[0] - radius_;
    const double hi = center_[0] + radius_;
    const double y = x[0] < lo ? lo : hi;
    const double delta = std::abs(x[0] - y);
    x[0] = y;
    return delta;
  }
  const double r = std::sqrt(r2);
  double scale = radius_ / r;
  // Shrink the scale by ulps until the image passes the same closure test, so
  // projecting twice is a no-op.
  std::array<double, 8> small{};
  std::vector<double> large;
  double* y = small.data();
  if (dim_ > 8) {
    large.resize(dim_);
    y = large.data();
  }
  for (int attempt = 0; attempt < 8; ++attempt) {
    double s2 = 0.0;
    for (int i = 0; i < dim_; ++i) {
      y[i] = center_[i] + (x[i] - center_[i]) * scale;
      s2 += (y[i] - center_[i]) * (y[i] - center_[i]);
    }
    if (s2 <= radius_ * radius_) break;
    scale = std::nextafter(scale, 0.0);
  }
  double delta2 = 0.0;
  for (int i = 0; i < dim_; ++i) {
    delta2 += (x[i] - y[i]) * (x[i] - y[i]);
    x[i] = y[i];
  }
  return std::sqrt(delta2);
}

Projection LevelSetDomain::project_to_closure(const Vec& x) const {
  check_finite(x);
  const Vec width = box_.hi - box_.lo;
  if (((x.array() < (box_.lo - width).array()) || (x.array() > (box_.hi + width).array())).any()) {
    fail(ErrorKind::InvalidInput, "geometry", "point " + to_text(x) + " is beyond the inflated bounding box");
  }
  if (kind_ == Kind::Custom) return project_custom(x);
  Vec y = x;
  const double delta = project_raw(y.data());
  return {std::move(y), delta};
}

Projection LevelSetDomain::project_custom(const Vec& x) const {
  if (phi_(x) <= 0.0) return {x, 0.0};
  const double scale = std::max(1.0, box_.diameter());
  Vec y = x;
  double value = phi_(y);
  for (int it = 0; it < kMaxNewtonIter; ++it) {
    if (std::abs(value) <= kNewtonTol * scale) return {y, (y - x).norm()};
    const Vec g = grad_(y);
    const double g2 = g.squaredNorm();
    if (!(g2 > 0.0) || !std::isfinite(g2)) break;
    const Vec step = (value / g2) * g;
    double damping = 1.0;
    Vec trial = y - step;
    double trial_value = phi_(trial);
    while (std::abs(trial_value) >= std::abs(value) && damping > 1e-6) {
      damping *= 0.5;
      trial = y - damping * step;
      trial_value = phi_(trial);
    }
    y = std::move(trial);
    value = trial_value;
  }
  if (std::abs(value) <= kNewtonTol * scale) return {y, (y - x).norm()};
  fail(ErrorKind::NumericFailure, "geometry",
       "projection of " + to_text(x) + " did not converge; last iterate " + to_text(y));
}

PointClass LevelSetDomain::classify(const Vec& x) const {
  const double v = eval_phi(x);
  if (std::abs(v) <= boundary_tol_) return PointClass::Boundary;
  if (v < -boundary_tol_) return PointClass::Interior;
  return PointClass::Exterior;
}

}  // namespace fk
