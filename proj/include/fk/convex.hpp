#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "fk/types.hpp"

namespace fk {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// value * weight with the extended-real convention 0 * (+inf) = 0.
inline double weighted(double value, double weight) { return weight == 0.0 ? 0.0 : value * weight; }

/// Proper lower semicontinuous convex function R^m -> (-inf, +inf].
///
/// Values outside the domain are +inf. The prox map
///   prox(y, eps) = argmin_z (1/(2 eps))|y - z|^2 + value(z)
/// is the resolvent (I + eps d value)^{-1}. At eps = 0 it is the eps -> 0
/// limit, the projection onto the closure of Dom.
class ConvexFunction {
 public:
  explicit ConvexFunction(int m) : m_(m) {}
  virtual ~ConvexFunction() = default;

  int dim() const noexcept { return m_; }

  virtual double value_raw(const double* y) const = 0;
  /// In-place prox; eps >= 0.
  virtual void prox_raw(double* y, double eps) const = 0;
  /// In-place Euclidean projection onto the closure of Dom.
  virtual void project_dom_raw(double* y) const;
  virtual std::string description() const = 0;
  /// True when the function vanishes identically, so prox is the identity.
  virtual bool is_zero() const { return false; }

  /// One-sided directional derivatives (phi'_-(y, z), phi'_+(y, z)).
  /// The default uses difference quotients at t = 2^-k, k = 10..40, with
  /// Richardson extrapolation; phi'_- is computed as -phi'_+(y, -z).
  virtual std::pair<double, double> dir_derivatives(const Vec& y, const Vec& z) const;

  double value(const Vec& y) const;
  Vec prox(const Vec& y, double eps) const;
  Vec project_dom(const Vec& y) const;
  bool in_dom(const Vec& y) const { return value(y) < kInf; }

 protected:
  void check_point(const Vec& y, const char* what) const;
  double generic_dir_plus(const Vec& y, const Vec& z) const;

 private:
  int m_;
};

using ConvexPtr = std::shared_ptr<const ConvexFunction>;

/// (y - prox(y, eps)) / eps.
Vec yosida_grad(const ConvexFunction& f, const Vec& y, double eps);

/// inf_z (1/(2 eps))|y - z|^2 + f(z), evaluated at the prox point.
double moreau_envelope(const ConvexFunction& f, const Vec& y, double eps);

/// Directional derivatives with a domain check; y outside Dom is a domain error.
std::pair<double, double> dir_derivatives(const ConvexFunction& f, const Vec& y, const Vec& z);

// Built-ins.
ConvexPtr make_zero(int m);
/// (alpha/2)|y - y0|^2, alpha >= 0.
ConvexPtr make_quadratic(double alpha, Vec y0);
/// Indicator of [a, +inf) (lower = true) or (-inf, a] (lower = false), m = 1.
ConvexPtr make_halfline(double a, bool lower);
/// Indicator of the closed ball of radius r around c.
ConvexPtr make_indicator_ball(Vec center, double radius);
/// alpha |y - c|; the absolute value when m = 1.
ConvexPtr make_norm(double alpha, Vec center);
/// phi(y) = sum_i phi_i(y_i) with one-dimensional parts.
ConvexPtr make_separable(std::vector<ConvexPtr> parts);

/// Smooth convex function given by value, gradient and Hessian callbacks.
/// Prox by damped Newton on (z - y)/eps + grad(z) = 0.
struct SmoothConvexSpec {
  int m = 1;
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> grad;
  std::function<Mat(const Vec&)> hess;
  std::string description = "smooth";
};
ConvexPtr make_smooth(SmoothConvexSpec spec);

inline constexpr int kProxMaxIter = 100;
inline constexpr double kProxTol = 1e-12;

}  // namespace fk
