#include <doctest.h>

#include "fk/compat.hpp"
#include "fk/config.hpp"
#include "helpers.hpp"

using namespace fk;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }

ExperimentConfig load(const char* name) { return load_config(std::string(FK_SOURCE_DIR) + "/configs/" + name); }

CompatReport run(const ExperimentConfig& cfg) {
  const Problem& p = cfg.problem;
  return check_compatibility(p.domain, p.driver, *p.phi, *p.psi, p.kappa, cfg.compat, p.grid.T(), cfg.seed);
}

}  // namespace

TEST_SUITE("compat") {
  TEST_CASE("obstacle pair with inward-pointing data passes") {
    const auto r = run(load("compat_pass.json"));
    CHECK(r.pass());
    REQUIRE(r.conditions.size() == 6);
    CHECK(r.M == 0.0);
    CHECK(r.samples == 64u * 9 * 3 * 8 * 4);
    CHECK(r.normalization[0].u0_interior);
    CHECK(r.normalization[0].u0_minimizes);
    CHECK(r.normalization[1].u0_minimizes);
  }

  TEST_CASE("outward boundary flux is falsified with a witness") {
    const auto r = run(load("compat_violating.json"));
    CHECK_FALSE(r.pass());
    bool d_failed = false;
    for (const auto& c : r.conditions) {
      if (c.name.rfind("(d)", 0) == 0) {
        d_failed = !c.pass;
        CHECK(c.worst_margin < 0.0);
        CHECK(c.witness.find("y=") != std::string::npos);
      }
    }
    CHECK(d_failed);
  }

  TEST_CASE("margins match a hand computation") {
    // phi = indicator [0, inf), psi = indicator (-inf, 1], y = -1, eps = 1:
    // grad phi_eps = -1, grad psi_eps = 0.
    const auto cfg = load("compat_violating.json");
    const auto& p = cfg.problem;
    const auto mg = compat_margins(p.driver, *p.phi, *p.psi, 1.0, v1(0.5), 0.0, v1(0.0), v1(-1.0),
                                   Mat::Zero(1, 1), 1.0);
    CHECK(mg.b == 0.0);
    CHECK(mg.d == doctest::Approx(-1.0));  // G = -1
    CHECK(mg.e == doctest::Approx(2.5));   // F = 1.5
    CHECK(mg.f == doctest::Approx(1.0));
    CHECK(mg.g == doctest::Approx(1.0));  // F(u0) = 0
  }

  TEST_CASE("separated half-line indicators never violate (b)") {
    test::Gen gen(31);
    const auto zero = make_zero(1);
    for (int i = 0; i < 500; ++i) {
      const double a = gen.uniform(-2, 1);
      const double b = a + gen.uniform(0.01, 2);
      const auto phi = make_halfline(a, true);
      const auto psi = make_halfline(b, false);
      Driver drv;
      drv.F = [](double, const double*, const double*, const double*, double* o) { o[0] = 0.0; };
      drv.G = [](double, const double*, const double*, double* o) { o[0] = 0.0; };
      const double eps = std::pow(10.0, gen.uniform(-4, 0));
      const auto mg = compat_margins(drv, *phi, *psi, 1.0, v1(0.5 * (a + b)), 0.0, v1(0.0), v1(gen.uniform(-4, 4)),
                                     Mat::Zero(1, 1), eps);
      CHECK(mg.b == 0.0);
      CHECK(mg.d >= 0.0);
      CHECK(mg.e >= 0.0);
      // identical functions give |grad|^2
      const double y = gen.uniform(-4, 4);
      const auto same = compat_margins(drv, *phi, *phi, 1.0, v1(b), 0.0, v1(0.0), v1(y), Mat::Zero(1, 1), eps);
      CHECK(same.b >= 0.0);
    }
  }

  TEST_CASE("zero functions pass trivially") {
    auto cfg = load("compat_pass.json");
    cfg.problem.phi = make_zero(1);
    cfg.problem.psi = make_zero(1);
    const auto r = run(cfg);
    CHECK(r.pass());
    for (const auto& c : r.conditions) CHECK(c.worst_margin == 0.0);
  }

  TEST_CASE("threads do not change the report") {
    const auto cfg = load("compat_violating.json");
    const Problem& p = cfg.problem;
    const auto a = check_compatibility(p.domain, p.driver, *p.phi, *p.psi, p.kappa, cfg.compat, p.grid.T(), 5, 1);
    const auto b = check_compatibility(p.domain, p.driver, *p.phi, *p.psi, p.kappa, cfg.compat, p.grid.T(), 5, 3);
    REQUIRE(a.conditions.size() == b.conditions.size());
    for (std::size_t i = 0; i < a.conditions.size(); ++i) {
      CHECK(a.conditions[i].worst_margin == b.conditions[i].worst_margin);
      CHECK(a.conditions[i].witness == b.conditions[i].witness);
    }
  }
}
