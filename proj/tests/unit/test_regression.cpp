#include <doctest.h>

#include <cmath>

#include "fk/errors.hpp"
#include "fk/regression.hpp"
#include "helpers.hpp"

using namespace fk;

TEST_SUITE("regression") {
  TEST_CASE("polynomials up to the basis degree are reproduced") {
    test::Gen g(1);
    const int M = 500;
    Mat X(M, 2), Y(M, 2);
    for (int p = 0; p < M; ++p) {
      const double a = g.uniform(-1, 3), b = g.uniform(-2, 2);
      X(p, 0) = a;
      X(p, 1) = b;
      Y(p, 0) = 1 + 2 * a - a * b + 0.5 * b * b * b;
      Y(p, 1) = -3 + a * a;
    }
    RegressionBasis basis;
    basis.degree = 3;
    basis.ridge = 0.0;
    auto fit = regress(basis, X, Y);
    CHECK((fit.fitted - Y).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(fit.columns == 10);
    CHECK(fit.condition >= 1.0);
  }

  TEST_CASE("constant targets are exact and fitted means match") {
    test::Gen g(2);
    const int M = 300;
    Mat X(M, 1), Y(M, 2);
    for (int p = 0; p < M; ++p) {
      X(p, 0) = g.uniform(-1, 1);
      Y(p, 0) = 0.7;
      Y(p, 1) = std::sin(5 * X(p, 0)) + g.normal();
    }
    RegressionBasis basis;
    auto fit = regress(basis, X, Y);
    for (int p = 0; p < M; ++p) REQUIRE(fit.fitted(p, 0) == 0.7);
    CHECK(std::abs(fit.fitted.col(1).mean() - Y.col(1).mean()) < 1e-12);
  }

  TEST_CASE("constant features reduce to the mean") {
    Mat X = Mat::Constant(4, 1, 0.3);
    Mat Y(4, 1);
    Y << 1, 2, 3, 6;
    auto fit = regress(RegressionBasis{}, X, Y);
    for (int p = 0; p < 4; ++p) CHECK(fit.fitted(p, 0) == doctest::Approx(3.0).epsilon(1e-14));
  }

  TEST_CASE("bins average within equal-mass cells") {
    const int M = 100;
    Mat X(M, 1), Y(M, 1);
    for (int p = 0; p < M; ++p) {
      X(p, 0) = (p * 37) % M;
      Y(p, 0) = X(p, 0) < 50 ? 1.0 : 3.0;
    }
    RegressionBasis basis;
    basis.kind = BasisKind::Bins;
    basis.bins = 2;
    auto fit = regress(basis, X, Y);
    for (int p = 0; p < M; ++p) REQUIRE(fit.fitted(p, 0) == doctest::Approx(Y(p, 0)));
  }

  TEST_CASE("bad inputs") {
    Mat X(0, 1), Y(0, 1);
    CHECK_THROWS_AS(regress(RegressionBasis{}, X, Y), Error);
    RegressionBasis bins;
    bins.kind = BasisKind::Bins;
    CHECK_THROWS_AS(regress(bins, Mat::Zero(5, 2), Mat::Zero(5, 1)), Error);
    RegressionBasis neg;
    neg.degree = -1;
    CHECK_THROWS_AS(regress(neg, Mat::Zero(5, 1), Mat::Zero(5, 1)), Error);
  }
}
