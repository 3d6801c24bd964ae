#include <doctest.h>

#include <cmath>

#include "fk/elliptic.hpp"
#include "fk/errors.hpp"

using namespace fk;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }

EllipticConfig base_config() {
  EllipticConfig c;
  c.domain = LevelSetDomain::interval(-1, 1);
  c.coeffs.f = [](double, const double*, double* o) { o[0] = 0.0; };
  c.coeffs.g = [](double, const double*, double* o) { o[0] = 1.0; };
  c.driver.F = [](double, const double*, const double* y, const double*, double* o) { o[0] = -y[0]; };
  c.driver.G = [](double, const double*, const double*, double* o) { o[0] = 0.0; };
  c.driver.F_ignores_z = true;
  c.driver.G_is_zero = true;
  c.driver.mu_F = -1;
  c.driver.ell_F = 0;
  c.driver.mu_G = -1;
  c.lambda = -1;
  return c;
}

// F = 1 - y, G = -3 y on reflected Brownian motion in [-1, 1].
EllipticConfig dissipative(int steps) {
  auto c = base_config();
  c.driver.F = [](double, const double*, const double* y, const double*, double* o) { o[0] = 1.0 - y[0]; };
  c.driver.G = [](double, const double*, const double* y, double* o) { o[0] = -3.0 * y[0]; };
  c.driver.G_is_zero = false;
  c.driver.mu_G = -3;
  c.steps_per_unit = steps;
  return c;
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::InvalidInput;
}

}  // namespace

TEST_SUITE("elliptic") {
  TEST_CASE("horizon from calibration") {
    CHECK(horizon_from_calibration(1.0, -1.0, 1e-3, 40).n == 7);
    CHECK(horizon_from_calibration(2.0, -0.5, 1e-2, 40).n == 11);
    CHECK(horizon_from_calibration(0.0, -1.0, 1e-3, 40).n == 1);
    CHECK(horizon_from_calibration(1e-5, -1.0, 1e-3, 40).n == 1);
    const auto capped = horizon_from_calibration(1.0, -0.01, 1e-6, 40);
    CHECK(capped.n == 40);
    CHECK(capped.capped);
    CHECK(kind_of([] { horizon_from_calibration(1.0, 0.0, 1e-3, 40); }) == ErrorKind::InvalidConfig);
  }

  TEST_CASE("dissipativity gate") {
    auto c = base_config();
    c.lambda = 0.5;
    CHECK(kind_of([&] { c.validate(); }) == ErrorKind::InvalidConfig);
    c.lambda = -2.0;  // below max(mu_F + ell_F^2, mu_G) = -1
    CHECK(kind_of([&] { c.validate(); }) == ErrorKind::InvalidConfig);
    auto pos = base_config();
    pos.driver.mu_F = 0.5;
    pos.lambda = default_lambda(pos.driver);
    CHECK(kind_of([&] { pos.validate(); }) == ErrorKind::InvalidConfig);
    auto td = base_config();
    td.coeffs.time_homogeneous = false;
    CHECK(kind_of([&] { td.validate(); }) == ErrorKind::InvalidConfig);
    CHECK_NOTHROW(base_config().validate());
  }

  TEST_CASE("zero data gives zero") {
    auto c = base_config();
    c.driver.F = [](double, const double*, const double*, const double*, double* o) { o[0] = 0.0; };
    const auto r = solve_elliptic(c, v1(0.3), 500, 1, {2, 4});
    CHECK(r.u.u(0) == 0.0);
    CHECK(r.calibration.horizon.n == 1);
    for (const auto& row : r.decay) CHECK(row.gap == 0.0);
  }

  TEST_CASE("no-boundary ODE limit is 1") {
    auto c = base_config();
    c.coeffs.g = [](double, const double*, double* o) { o[0] = 0.0; };
    c.driver.F = [](double, const double*, const double* y, const double*, double* o) { o[0] = 1.0 - y[0]; };
    c.steps_per_unit = 200;
    c.tol = 1e-4;
    CHECK(std::abs(solve_horizon(c, v1(0.2), 12, 16, 1).u(0) - 1.0) <= 1e-3);
    const auto r = solve_elliptic(c, v1(0.2), 16, 1, {2, 4, 6});
    CHECK(std::abs(r.u.u(0) - 1.0) <= 1e-3);
    // gaps follow e^{lambda n} for this ODE
    CHECK(fit_log_slope(r.decay) == doctest::Approx(-1.0).epsilon(0.05));
  }

  TEST_CASE("log slope of synthetic gaps") {
    std::vector<DecayRow> rows;
    for (int n : {2, 4, 6, 8}) rows.push_back({n, v1(0), std::exp(-1.5 * n)});
    rows.push_back({10, v1(0), 0.0});
    CHECK(fit_log_slope(rows) == doctest::Approx(-1.5).epsilon(1e-12));
  }

  TEST_CASE("gaps shrink on the dissipative benchmark") {
    const auto rows = decay_table(dissipative(25), v1(0.0), {2, 4, 6, 8}, 2000, 3);
    REQUIRE(rows.size() == 4);
    for (std::size_t i = 0; i + 2 < rows.size(); ++i) CHECK(rows[i + 1].gap < rows[i].gap);
    CHECK(fit_log_slope(rows) < -1.0);
  }

  TEST_CASE("continuity in x under shared noise") {
    const auto c = dissipative(25);
    const double u0 = solve_horizon(c, v1(0.4), 4, 2000, 5).u(0);
    double first = 0, last = 0;
    for (int n = 1; n <= 6; ++n) {
      const double du = std::abs(solve_horizon(c, v1(0.4 + std::ldexp(0.5, -n)), 4, 2000, 5).u(0) - u0);
      if (n == 1) first = du;
      last = du;
    }
    CHECK(last < first / 10);
  }

  TEST_CASE("shared pilot noise") {
    const auto cal = horizon_for_tolerance(dissipative(25), v1(0.0), 2000, 7);
    CHECK(cal.c_hat > 0.0);
    CHECK(cal.horizon.n >= 1);
    CHECK(cal.y_pilot(0) == solve_horizon(dissipative(25), v1(0.0), 2, 2000, 7).u(0));
  }
}
