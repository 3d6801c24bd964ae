#include "fk/convex.hpp"

#include <algorithm>
#include <cmath>

#include "fk/errors.hpp"
#include "fk/text.hpp"

namespace fk {

namespace {

void check_eps(double eps) {
  if (!(eps >= 0.0) || !std::isfinite(eps)) fail(ErrorKind::InvalidInput, "convex", "eps must be finite and >= 0");
}

class Zero final : public ConvexFunction {
 public:
  using ConvexFunction::ConvexFunction;
  double value_raw(const double*) const override { return 0.0; }
  void prox_raw(double*, double) const override {}
  void project_dom_raw(double*) const override {}
  std::string description() const override { return "zero"; }
  bool is_zero() const override { return true; }
  std::pair<double, double> dir_derivatives(const Vec&, const Vec&) const override { return {0.0, 0.0}; }
};

class Quadratic final : public ConvexFunction {
 public:
  Quadratic(double alpha, Vec y0) : ConvexFunction(static_cast<int>(y0.size())), alpha_(alpha), y0_(std::move(y0)) {}

  double value_raw(const double* y) const override {
    double s = 0.0;
    for (int i = 0; i < dim(); ++i) s += (y[i] - y0_[i]) * (y[i] - y0_[i]);
    return 0.5 * alpha_ * s;
  }
  void prox_raw(double* y, double eps) const override {
    if (eps == 0.0) return;
    const double w = eps * alpha_;
    for (int i = 0; i < dim(); ++i) y[i] = (y[i] + w * y0_[i]) / (1.0 + w);
  }
  void project_dom_raw(double*) const override {}
  std::string description() const override { return "quadratic alpha=" + to_text(alpha_) + " center=" + to_text(y0_); }
  bool is_zero() const override { return alpha_ == 0.0; }
  std::pair<double, double> dir_derivatives(const Vec& y, const Vec& z) const override {
    const double d = alpha_ * (y - y0_).dot(z);
    return {d, d};
  }

 private:
  double alpha_;
  Vec y0_;
};

class HalfLine final : public ConvexFunction {
 public:
  HalfLine(double a, bool lower) : ConvexFunction(1), a_(a), lower_(lower) {}

  double value_raw(const double* y) const override { return (lower_ ? y[0] >= a_ : y[0] <= a_) ? 0.0 : kInf; }
  void prox_raw(double* y, double) const override { y[0] = lower_ ? std::max(y[0], a_) : std::min(y[0], a_); }
  void project_dom_raw(double* y) const override { prox_raw(y, 0.0); }
  std::string description() const override {
    return lower_ ? "indicator [" + to_text(a_) + ", inf)" : "indicator (-inf, " + to_text(a_) + "]";
  }
  std::pair<double, double> dir_derivatives(const Vec& y, const Vec& z) const override {
    return {-plus(y[0], -z[0]), plus(y[0], z[0])};
  }

 private:
  // 0 if y + t z stays feasible for small t > 0, +inf otherwise
  double plus(double y, double z) const {
    if (z == 0.0 || y != a_) return 0.0;
    return (lower_ ? z > 0.0 : z < 0.0) ? 0.0 : kInf;
  }

  double a_;
  bool lower_;
};

class BallIndicator final : public ConvexFunction {
 public:
  BallIndicator(Vec c, double r) : ConvexFunction(static_cast<int>(c.size())), c_(std::move(c)), r_(r) {}

  // projected points may land a rounding error outside the sphere
  double value_raw(const double* y) const override { return dist2(y) <= r_ * r_ * (1.0 + 1e-12) ? 0.0 : kInf; }
  void prox_raw(double* y, double) const override {
    const double d2 = dist2(y);
    if (d2 <= r_ * r_) return;
    const double s = r_ / std::sqrt(d2);
    for (int i = 0; i < dim(); ++i) y[i] = c_[i] + (y[i] - c_[i]) * s;
  }
  void project_dom_raw(double* y) const override { prox_raw(y, 0.0); }
  std::string description() const override { return "indicator ball center=" + to_text(c_) + " radius=" + to_text(r_); }
  std::pair<double, double> dir_derivatives(const Vec& y, const Vec& z) const override {
    return {-plus(y, -z), plus(y, z)};
  }

 private:
  double dist2(const double* y) const {
    double s = 0.0;
    for (int i = 0; i < dim(); ++i) s += (y[i] - c_[i]) * (y[i] - c_[i]);
    return s;
  }
  double plus(const Vec& y, const Vec& z) const {
    if (z.squaredNorm() == 0.0 || dist2(y.data()) < r_ * r_) return 0.0;
    // on the sphere: feasible iff z points strictly inward
    return (y - c_).dot(z) < 0.0 ? 0.0 : kInf;
  }

  Vec c_;
  double r_;
};

class Norm final : public ConvexFunction {
 public:
  Norm(double alpha, Vec c) : ConvexFunction(static_cast<int>(c.size())), alpha_(alpha), c_(std::move(c)) {}

  double value_raw(const double* y) const override {
    if (dim() == 1) return alpha_ * std::abs(y[0] - c_[0]);
    double s = 0.0;
    for (int i = 0; i < dim(); ++i) s += (y[i] - c_[i]) * (y[i] - c_[i]);
    return alpha_ * std::sqrt(s);
  }
  void prox_raw(double* y, double eps) const override {
    const double w = eps * alpha_;
    if (w == 0.0) return;
    if (dim() == 1) {
      const double d = y[0] - c_[0];
      y[0] = d > w ? y[0] - w : (d < -w ? y[0] + w : c_[0]);
      return;
    }
    double s = 0.0;
    for (int i = 0; i < dim(); ++i) s += (y[i] - c_[i]) * (y[i] - c_[i]);
    const double n = std::sqrt(s);
    const double scale = n > w ? 1.0 - w / n : 0.0;
    for (int i = 0; i < dim(); ++i) y[i] = c_[i] + (y[i] - c_[i]) * scale;
  }
  void project_dom_raw(double*) const override {}
  std::string description() const override {
    return (dim() == 1 ? "abs alpha=" : "norm alpha=") + to_text(alpha_) + " center=" + to_text(c_);
  }
  bool is_zero() const override { return alpha_ == 0.0; }
  std::pair<double, double> dir_derivatives(const Vec& y, const Vec& z) const override {
    const Vec d = y - c_;
    const double n = d.norm();
    if (n == 0.0) return {-alpha_ * z.norm(), alpha_ * z.norm()};
    const double v = alpha_ * d.dot(z) / n;
    return {v, v};
  }

 private:
  double alpha_;
  Vec c_;
};

class Separable final : public ConvexFunction {
 public:
  explicit Separable(std::vector<ConvexPtr> parts) : ConvexFunction(static_cast<int>(parts.size())), parts_(std::move(parts)) {}

  double value_raw(const double* y) const override {
    double s = 0.0;
    for (int i = 0; i < dim(); ++i) {
      const double v = parts_[i]->value_raw(y + i);
      if (v == kInf) return kInf;
      s += v;
    }
    return s;
  }
  void prox_raw(double* y, double eps) const override {
    for (int i = 0; i < dim(); ++i) parts_[i]->prox_raw(y + i, eps);
  }
  void project_dom_raw(double* y) const override {
    for (int i = 0; i < dim(); ++i) parts_[i]->project_dom_raw(y + i);
  }
  std::string description() const override {
    std::string s = "separable[";
    for (int i = 0; i < dim(); ++i) s += (i ? "; " : "") + parts_[i]->description();
    return s + "]";
  }
  bool is_zero() const override {
    return std::all_of(parts_.begin(), parts_.end(), [](const ConvexPtr& p) { return p->is_zero(); });
  }
  std::pair<double, double> dir_derivatives(const Vec& y, const Vec& z) const override {
    double lo = 0.0, hi = 0.0;
    for (int i = 0; i < dim(); ++i) {
      const auto [l, h] = parts_[i]->dir_derivatives(Vec::Constant(1, y[i]), Vec::Constant(1, z[i]));
      lo += l;
      hi += h;
    }
    return {lo, hi};
  }

 private:
  std::vector<ConvexPtr> parts_;
};

class SmoothConvex final : public ConvexFunction {
 public:
  explicit SmoothConvex(SmoothConvexSpec spec) : ConvexFunction(spec.m), spec_(std::move(spec)) {}

  double value_raw(const double* y) const override { return spec_.value(Eigen::Map<const Vec>(y, dim())); }

  void prox_raw(double* y, double eps) const override {
    if (eps == 0.0) return;
    const Vec y0 = Eigen::Map<const Vec>(y, dim());
    auto objective = [&](const Vec& z) { return (z - y0).squaredNorm() / (2.0 * eps) + spec_.value(z); };
    Vec z = y0;
    double obj = objective(z);
    for (int it = 0; it < kProxMaxIter; ++it) {
      const Vec r = (z - y0) / eps + spec_.grad(z);
      if (r.norm() * eps <= kProxTol * (1.0 + z.norm())) {
        Eigen::Map<Vec>(y, dim()) = z;
        return;
      }
      const Mat h = Mat::Identity(dim(), dim()) / eps + spec_.hess(z);
      const Vec step = h.ldlt().solve(r);
      double damping = 1.0;
      Vec trial = z - step;
      double trial_obj = objective(trial);
      while (!(trial_obj <= obj) && damping > 1e-8) {
        damping *= 0.5;
        trial = z - damping * step;
        trial_obj = objective(trial);
      }
      if (!(trial_obj <= obj)) break;
      if ((trial - z).norm() <= kProxTol * (1.0 + z.norm())) {
        Eigen::Map<Vec>(y, dim()) = trial;
        return;
      }
      z = std::move(trial);
      obj = trial_obj;
    }
    fail(ErrorKind::NumericFailure, "convex",
         "prox of " + spec_.description + " at " + to_text(y0) + " did not converge; last iterate " + to_text(z));
  }

  void project_dom_raw(double*) const override {}
  std::string description() const override { return spec_.description; }

  std::pair<double, double> dir_derivatives(const Vec& y, const Vec& z) const override {
    const double d = spec_.grad(y).dot(z);
    return {d, d};
  }

 private:
  SmoothConvexSpec spec_;
};

}  // namespace

void ConvexFunction::project_dom_raw(double* y) const {
  // closest feasible point as the eps -> 0 limit of prox
  prox_raw(y, 1e-12);
}

double ConvexFunction::value(const Vec& y) const {
  check_point(y, "value");
  return value_raw(y.data());
}

Vec ConvexFunction::prox(const Vec& y, double eps) const {
  check_point(y, "prox");
  check_eps(eps);
  Vec p = y;
  prox_raw(p.data(), eps);
  return p;
}

Vec ConvexFunction::project_dom(const Vec& y) const {
  check_point(y, "project_dom");
  Vec p = y;
  project_dom_raw(p.data());
  return p;
}

void ConvexFunction::check_point(const Vec& y, const char* what) const {
  if (y.size() != m_) {
    fail(ErrorKind::InvalidInput, "convex",
         std::string(what) + ": point has dimension " + std::to_string(y.size()) + ", expected " + std::to_string(m_));
  }
  if (!y.allFinite()) fail(ErrorKind::InvalidInput, "convex", std::string(what) + ": non-finite point " + to_text(y));
}

double ConvexFunction::generic_dir_plus(const Vec& y, const Vec& z) const {
  const double f0 = value_raw(y.data());
  std::vector<double> q;
  for (int k = 10; k <= 40; ++k) {
    const double t = std::ldexp(1.0, -k);
    const Vec p = y + t * z;
    const double v = value_raw(p.data());
    if (v == kInf) {
      // the feasible set along z is an interval around 0; restart below the exit
      q.clear();
      continue;
    }
    q.push_back((v - f0) / t);
  }
  if (q.empty()) return kInf;
  if (q.size() == 1) return q[0];
  std::vector<double> rich(q.size() - 1);
  for (std::size_t i = 0; i + 1 < q.size(); ++i) rich[i] = 2.0 * q[i + 1] - q[i];
  if (rich.size() == 1) return rich[0];
  std::size_t best = 0;
  double best_gap = kInf;
  for (std::size_t i = 0; i + 1 < rich.size(); ++i) {
    const double gap = std::abs(rich[i + 1] - rich[i]);
    if (gap < best_gap) {
      best_gap = gap;
      best = i;
    }
  }
  return rich[best];
}

std::pair<double, double> ConvexFunction::dir_derivatives(const Vec& y, const Vec& z) const {
  const Vec mz = -z;
  return {-generic_dir_plus(y, mz), generic_dir_plus(y, z)};
}

Vec yosida_grad(const ConvexFunction& f, const Vec& y, double eps) {
  if (!(eps > 0.0)) fail(ErrorKind::InvalidInput, "convex", "yosida_grad needs eps > 0");
  return (y - f.prox(y, eps)) / eps;
}

double moreau_envelope(const ConvexFunction& f, const Vec& y, double eps) {
  if (!(eps > 0.0)) fail(ErrorKind::InvalidInput, "convex", "moreau_envelope needs eps > 0");
  const Vec p = f.prox(y, eps);
  return (y - p).squaredNorm() / (2.0 * eps) + f.value_raw(p.data());
}

std::pair<double, double> dir_derivatives(const ConvexFunction& f, const Vec& y, const Vec& z) {
  if (z.size() != f.dim() || !z.allFinite()) fail(ErrorKind::InvalidInput, "convex", "direction must be finite with dim m");
  if (!(f.value(y) < kInf)) fail(ErrorKind::DomainError, "convex", "point " + to_text(y) + " is outside Dom");
  return f.dir_derivatives(y, z);
}

ConvexPtr make_zero(int m) {
  if (m < 1) fail(ErrorKind::InvalidInput, "convex", "dimension must be >= 1");
  return std::make_shared<Zero>(m);
}

ConvexPtr make_quadratic(double alpha, Vec y0) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha) || y0.size() < 1 || !y0.allFinite()) {
    fail(ErrorKind::InvalidInput, "convex", "quadratic needs alpha >= 0 and a finite center");
  }
  return std::make_shared<Quadratic>(alpha, std::move(y0));
}

ConvexPtr make_halfline(double a, bool lower) {
  if (!std::isfinite(a)) fail(ErrorKind::InvalidInput, "convex", "half-line endpoint must be finite");
  return std::make_shared<HalfLine>(a, lower);
}

ConvexPtr make_indicator_ball(Vec center, double radius) {
  if (center.size() < 1 || !center.allFinite() || !(radius > 0.0) || !std::isfinite(radius)) {
    fail(ErrorKind::InvalidInput, "convex", "ball indicator needs a finite center and radius > 0");
  }
  return std::make_shared<BallIndicator>(std::move(center), radius);
}

ConvexPtr make_norm(double alpha, Vec center) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha) || center.size() < 1 || !center.allFinite()) {
    fail(ErrorKind::InvalidInput, "convex", "norm needs alpha >= 0 and a finite center");
  }
  return std::make_shared<Norm>(alpha, std::move(center));
}

ConvexPtr make_separable(std::vector<ConvexPtr> parts) {
  if (parts.empty()) fail(ErrorKind::InvalidInput, "convex", "separable sum needs at least one part");
  for (const auto& p : parts) {
    if (!p || p->dim() != 1) fail(ErrorKind::InvalidInput, "convex", "separable parts must be one-dimensional");
  }
  return std::make_shared<Separable>(std::move(parts));
}

ConvexPtr make_smooth(SmoothConvexSpec spec) {
  if (spec.m < 1 || !spec.value || !spec.grad || !spec.hess) {
    fail(ErrorKind::InvalidInput, "convex", "smooth convex function needs value, grad and hess");
  }
  return std::make_shared<SmoothConvex>(std::move(spec));
}

}  // namespace fk
