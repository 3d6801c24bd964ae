#include <doctest.h>

#include <cmath>

#include "fk/config.hpp"
#include "fk/errors.hpp"
#include "fk/expr.hpp"
#include "helpers.hpp"

using namespace fk;
using nlohmann::json;

namespace {

json minimal() {
  return json::parse(R"({
    "domain": {"kind": "interval", "a": -1, "b": 1},
    "sde": {"f": 0, "g": 1, "mu_f": 0, "ell_g": 0},
    "driver": {"F": 0, "G": 0, "ell_F": 0, "b_F": 0, "b_G": 0},
    "kappa": {"cos": {"mul": ["pi", "x"]}},
    "grid": {"T": 0.5, "N": 20},
    "ensemble": {"M": 100, "seed": 4}
  })");
}

std::string config_error(const json& j) {
  try {
    parse_config(j);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvalidConfig);
    return e.what();
  }
  FAIL("expected a config error");
  return {};
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("expressions evaluate with the documented variable layout") {
    const VarTable vars(2, 1, 2);
    CHECK(vars.size() == 1 + 2 + 1 + 2);
    CHECK(vars.lookup("x") == vars.x(0));
    CHECK(vars.lookup("x1") == vars.x(1));
    CHECK(vars.lookup("z0_1") == vars.z(0, 1));
    CHECK(vars.lookup("w") == -1);
    const auto e = Expr::parse(json::parse(R"({"add": [{"mul": ["t", "x1"]}, {"pow": ["y", 3]},
                                               {"poly": {"of": "z0_1", "coeffs": [1, 0, 2]}},
                                               {"clip": ["x0", -0.5, 0.5]}, {"pos": {"neg": "y"}}]})"),
                               vars, "F");
    const double env[] = {0.5, 2.0, 3.0, -1.5, 0.0, 0.25};
    CHECK(e.eval(env) == doctest::Approx(0.5 * 3.0 - 3.375 + 1.0 + 2.0 * 0.0625 + 0.5 + 1.5));
  }

  TEST_CASE("symbolic derivatives agree with central differences") {
    const VarTable vars(1, 1, 1);
    const char* sources[] = {
        R"({"mul": [{"sin": "x"}, {"exp": {"mul": [-0.5, "y"]}}]})",
        R"({"div": [{"add": [1, {"pow": ["y", 2]}]}, {"add": [2, {"cos": "x"}]}]})",
        R"({"poly": {"of": {"sub": ["x", "y"]}, "coeffs": [0.1, -2, 0, 0.5]}})",
        R"({"mul": ["t", "z", {"abs": "y"}]})",
    };
    test::Gen gen(77);
    for (const char* src : sources) {
      const auto e = Expr::parse(json::parse(src), vars, "f");
      for (int slot = 0; slot < vars.size(); ++slot) {
        const auto de = e.derivative(slot);
        for (int i = 0; i < 50; ++i) {
          double env[4] = {gen.uniform(0, 1), gen.uniform(-1, 1), gen.uniform(0.2, 2), gen.uniform(-1, 1)};
          const double h = 1e-6;
          double up[4], dn[4];
          std::copy(env, env + 4, up);
          std::copy(env, env + 4, dn);
          up[slot] += h;
          dn[slot] -= h;
          CHECK(de.eval(env) == doctest::Approx((e.eval(up) - e.eval(dn)) / (2 * h)).epsilon(1e-6).scale(1.0));
        }
      }
    }
  }

  TEST_CASE("expression errors name the location") {
    const VarTable vars(1, 1, 1, true, true, false, false);
    for (const char* src : {R"({"foo": 1})", R"("y")", R"({"pow": ["x", -1]})", R"({"sub": [1]})"}) {
      try {
        Expr::parse(json::parse(src), vars, "driver.G");
        FAIL("expected an error");
      } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InvalidConfig);
        CHECK(std::string(e.what()).find("driver.G") != std::string::npos);
      }
    }
  }

  TEST_CASE("defaults are resolved and hashed") {
    const auto a = parse_config(minimal());
    CHECK(a.M == 100u);
    CHECK(a.seed == 4u);
    CHECK(a.problem.grid.N() == 20);
    CHECK(a.problem.phi->is_zero());
    CHECK(a.resolved.contains("solver"));
    CHECK(a.hash.size() == 64);
    CHECK(parse_config(minimal()).hash == a.hash);
    Overrides ov;
    ov.seed = 9;
    const auto b = parse_config(minimal(), ov);
    CHECK(b.seed == 9u);
    CHECK(b.hash != a.hash);
    // the resolved form parses to the same configuration
    CHECK(parse_config(a.resolved).hash == a.hash);
  }

  TEST_CASE("sha256 known answers") {
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  }

  TEST_CASE("unknown keys and bad values are rejected with their path") {
    auto j = minimal();
    j["grid"]["dt"] = 0.1;
    CHECK(config_error(j).find("grid.dt") != std::string::npos);
    j = minimal();
    j["grid"]["T"] = -1;
    CHECK(config_error(j).find("grid.T") != std::string::npos);
    j = minimal();
    j["phi"] = {{"kind", "simplex"}};
    CHECK(config_error(j).find("phi.kind") != std::string::npos);
    j = minimal();
    j["point"] = {{"t", 0}, {"x", {2.0}}};
    CHECK(config_error(j).find("point.x") != std::string::npos);
    j = minimal();
    j.erase("domain");
    CHECK(config_error(j).find("domain") != std::string::npos);
  }

  TEST_CASE("declared structure constants are checked by sampling") {
    auto j = minimal();
    j["driver"]["F"] = "y";
    j["driver"]["mu_F"] = -1;
    j["driver"]["b_F"] = 1;
    const std::string msg = config_error(j);
    CHECK(msg.find("structure") != std::string::npos);
    j["driver"]["mu_F"] = 1;
    CHECK_NOTHROW(parse_config(j));
  }

  TEST_CASE("every shipped config parses") {
    for (const char* name : {"ball_drift", "compat_pass", "compat_violating", "constant", "elliptic_dissipative",
                             "neumann_heat", "obstacle", "robin_flux", "smooth_continuity"}) {
      CAPTURE(name);
      CHECK_NOTHROW(load_config(std::string(FK_SOURCE_DIR) + "/configs/" + name + ".json"));
    }
  }
}
