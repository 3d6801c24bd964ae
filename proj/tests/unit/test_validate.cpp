#include <doctest.h>

#include <cmath>
#include <functional>

#include "fk/config.hpp"
#include "fk/errors.hpp"
#include "fk/forward.hpp"
#include "fk/validate.hpp"
#include "helpers.hpp"

using namespace fk;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::InvalidInput;
}

double heat_exact(double T, double t, double x) { return std::exp(-0.5 * M_PI * M_PI * (T - t)) * std::cos(M_PI * x); }

double fd_error_at_start(int n) {
  const auto p = test::heat_problem(0.5, 10);
  FdOptions o;
  o.nx = n;
  o.nt = n;
  const auto sol = fd_reference_parabolic_1d(p, o);
  double err = 0.0;
  for (std::size_t j = 0; j < sol.grid.x.size(); ++j) {
    err = std::max(err, std::abs(sol.grid.U(0, j) - heat_exact(0.5, 0.0, sol.grid.x[j])));
  }
  return err;
}

SpaceTimeGrid grid_from(double T, int nt, int nx, const std::function<double(double, double)>& u) {
  SpaceTimeGrid g;
  for (int i = 0; i <= nt; ++i) g.t.push_back(T * i / nt);
  for (int j = 0; j <= nx; ++j) g.x.push_back(-1.0 + 2.0 * j / nx);
  g.t.back() = T;
  g.x.back() = 1.0;
  g.U.resize(nt + 1, nx + 1);
  for (int i = 0; i <= nt; ++i)
    for (int j = 0; j <= nx; ++j) g.U(i, j) = u(g.t[i], g.x[j]);
  return g;
}

// Lower obstacle at 0 with kappa = x^2, F = -2, G = 2. x^2 - (T - t) solves
// the unconstrained equation, so u lies above its positive part; the
// contact set shrinks towards the terminal time.
Problem moving_obstacle() {
  auto p = test::heat_problem(0.5, 50);
  test::set_kappa(p, [](double x) { return x * x; });
  test::set_F(p, [](double, double, double) { return -2.0; });
  test::set_G(p, [](double, double) { return 2.0; });
  p.phi = make_halfline(0.0, true);
  return p;
}

}  // namespace

TEST_SUITE("validate") {
  TEST_CASE("fd reproduces constants and the affine-in-time solution") {
    auto p = test::heat_problem(0.5, 10);
    test::set_kappa(p, [](double) { return 0.7; });
    FdOptions o;
    o.nx = 50;
    o.nt = 40;
    auto sol = fd_reference_parabolic_1d(p, o);
    CHECK((sol.grid.U.array() - 0.7).abs().maxCoeff() <= 1e-14);

    test::set_kappa(p, [](double) { return 0.0; });
    test::set_F(p, [](double, double, double) { return 1.0; });
    sol = fd_reference_parabolic_1d(p, o);
    for (std::size_t i = 0; i < sol.grid.t.size(); ++i) {
      CHECK((sol.grid.U.row(i).array() - (0.5 - sol.grid.t[i])).abs().maxCoeff() <= 1e-12);
    }
  }

  TEST_CASE("fd terminal row is kappa") {
    const auto p = test::heat_problem(0.5, 10);
    const auto sol = fd_reference_parabolic_1d(p, {});
    const int last = static_cast<int>(sol.grid.t.size()) - 1;
    CHECK(sol.grid.t[last] == 0.5);
    for (std::size_t j = 0; j < sol.grid.x.size(); ++j) {
      CHECK(sol.grid.U(last, j) == std::cos(M_PI * sol.grid.x[j]));
    }
  }

  TEST_CASE("fd converges on the cosine benchmark") {
    const double coarse = fd_error_at_start(200);
    const double fine = fd_error_at_start(400);
    CHECK(fine <= 1e-4);
    CHECK(coarse / fine >= 3.0);
  }

  TEST_CASE("fd honours the Robin flux") {
    auto p = test::heat_problem(0.5, 10);
    test::set_G(p, [](double, double) { return 1.0; });
    FdOptions o;
    o.nx = 200;
    o.nt = 200;
    const auto sol = fd_reference_parabolic_1d(p, o);
    REQUIRE(sol.robin_residual.size() == sol.grid.t.size());
    // the terminal row is kappa, whose flux is 0, and the first implicit
    // steps carry the layer
    for (std::size_t i = 0; i + 10 < sol.robin_residual.size(); ++i) CHECK(sol.robin_residual[i] <= 1e-2);
  }

  TEST_CASE("fd rejects unsupported problems and reports stalled iterations") {
    auto p = test::heat_problem(0.5, 10);
    FdOptions o;
    o.nx = 40;
    o.nt = 20;
    o.theta = 0.3;
    CHECK(kind_of([&] { fd_reference_parabolic_1d(p, o); }) == ErrorKind::InvalidInput);
    o.theta = 0.5;
    p.phi = make_halfline(-2.0, true);
    CHECK(kind_of([&] { fd_reference_parabolic_1d(p, o); }) == ErrorKind::InvalidInput);
    p.phi = make_zero(1);
    p.psi = make_norm(1.0, v1(0.0));
    CHECK(kind_of([&] { fd_reference_parabolic_1d(p, o); }) == ErrorKind::InvalidInput);
    p.psi = make_zero(1);
    o.nx = 3;
    CHECK(kind_of([&] { fd_reference_parabolic_1d(p, o); }) == ErrorKind::InvalidInput);

    o.nx = 40;
    test::set_F(p, [](double, double, double y) { return 5.0 * std::sin(3.0 * y); });
    o.picard_sweeps = 2;
    o.picard_tol = 1e-300;
    CHECK(kind_of([&] { fd_reference_parabolic_1d(p, o); }) == ErrorKind::NumericFailure);
  }

  TEST_CASE("residuals of the closed-form heat solution are small") {
    const auto p = test::heat_problem(0.5, 10);
    const auto g = grid_from(0.5, 200, 200, [](double t, double x) { return heat_exact(0.5, t, x); });
    const auto r = pde_residuals(g, p);
    CHECK(r.interior_max <= 1e-3);
    CHECK(r.boundary_max <= 1e-3);
    CHECK(r.membership_max <= 1e-3);
    CHECK(r.interior_nodes == 199 * 199);
    CHECK(r.boundary_nodes == 2 * 199);
    CHECK(r.contact_nodes == 0);
  }

  TEST_CASE("residuals of a constant vanish and coarse grids are rejected") {
    auto p = test::heat_problem(0.5, 10);
    test::set_kappa(p, [](double) { return 0.3; });
    const auto g = grid_from(0.5, 20, 20, [](double, double) { return 0.3; });
    const auto r = pde_residuals(g, p);
    CHECK(r.interior_max <= 1e-12);
    CHECK(r.boundary_max <= 1e-12);

    const auto tiny = grid_from(0.5, 3, 20, [](double, double) { return 0.3; });
    CHECK(kind_of([&] { pde_residuals(tiny, p); }) == ErrorKind::InvalidInput);
    ResidualOptions o;
    o.skip_rows = 15;
    CHECK(kind_of([&] { pde_residuals(g, p, o); }) == ErrorKind::InvalidInput);
  }

  TEST_CASE("stationary obstacle: fd solution satisfies the inclusion") {
    const auto cfg = load_config(std::string(FK_SOURCE_DIR) + "/configs/obstacle.json");
    const auto sol = fd_reference_parabolic_1d(cfg.problem, cfg.fd);
    for (std::size_t j = 0; j < sol.grid.x.size(); ++j) {
      const double s = std::max(std::abs(sol.grid.x[j]) - 0.3, 0.0);
      CHECK(std::abs(sol.grid.U(0, j) - s * s) <= 1e-3);
      CHECK(sol.grid.U(0, j) >= 0.0);
    }
    const auto r = pde_residuals(sol.grid, cfg.problem, cfg.residuals.options);
    CHECK(r.membership_max <= 5e-2);
    CHECK(r.boundary_max <= 5e-2);
    CHECK(r.contact_nodes > 0);
    // the edge nodes |x| = 0.3 see half the curvature of the free part
    CHECK(r.contact_raw_max < 0.0);
    CHECK(r.raw_min == doctest::Approx(-1.0));
  }

  TEST_CASE("moving obstacle: membership is small away from the terminal layer") {
    const auto p = moving_obstacle();
    FdOptions o;
    o.nx = 200;
    o.nt = 200;
    o.theta = 1.0;
    o.project_phi = true;
    const auto sol = fd_reference_parabolic_1d(p, o);
    for (std::size_t j = 0; j < sol.grid.x.size(); ++j) {
      const double x = sol.grid.x[j];
      CHECK(sol.grid.U(0, j) >= std::max(x * x - 0.5, 0.0) - 1e-3);
    }
    ResidualOptions ro;
    ro.skip_rows = 1;
    const auto all = pde_residuals(sol.grid, p, ro);
    CHECK(all.membership_rms <= 1e-2);
    CHECK(all.contact_raw_max < 0.0);
    ro.skip_rows = 20;
    CHECK(pde_residuals(sol.grid, p, ro).membership_max <= 5e-2);
  }

  TEST_CASE("continuity scan along a null sequence has zero distance") {
    const auto p = test::heat_problem(0.5, 40);
    ContinuitySpec s;
    s.x = v1(0.2);
    s.direction = v1(0.0);
    s.n_first = 1;
    s.n_last = 3;
    const auto r = continuity_scan(p, s, 500, 3);
    REQUIRE(r.rows.size() == 3);
    for (const auto& row : r.rows) {
      CHECK(row.e == 0.0);
      CHECK(row.du == 0.0);
    }
  }

  TEST_CASE("continuity scan rejects sequences leaving the domain") {
    const auto p = test::heat_problem(0.5, 40);
    ContinuitySpec s;
    s.x = v1(0.9);
    s.direction = v1(1.0);
    CHECK(kind_of([&] { continuity_scan(p, s, 100, 3); }) == ErrorKind::InvalidInput);
    s.direction = Vec::Constant(2, 0.1);
    CHECK(kind_of([&] { continuity_scan(p, s, 100, 3); }) == ErrorKind::InvalidInput);
    s.direction = v1(0.01);
    s.kind = SequenceKind::Time;
    s.n_first = 2;
    s.t = 0.0;
    CHECK_NOTHROW(continuity_scan(p, s, 100, 3));
  }

  TEST_CASE("sup_square_distance sees a constant shift exactly") {
    const auto p = test::heat_problem(0.5, 40);
    const auto bundle = simulate_reflected(p.domain, p.coeffs, p.grid, 0, v1(0.1), 800, 4);
    const auto a = solve_bsvi(bundle, p.driver, *p.phi, *p.psi, p.kappa);
    TerminalCondition shifted;
    shifted.kappa = [](const double* x, double* o) { o[0] = std::cos(M_PI * x[0]) + 0.25; };
    const auto b = solve_bsvi(bundle, p.driver, *p.phi, *p.psi, shifted);
    CHECK(sup_square_distance(a, a).mean == 0.0);
    const auto d = sup_square_distance(a, b);
    CHECK(d.mean == doctest::Approx(0.0625).epsilon(1e-9));
    CHECK(d.se <= 1e-9);
  }
}
