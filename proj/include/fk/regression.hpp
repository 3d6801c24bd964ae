#pragma once

#include <string>

#include "fk/types.hpp"

namespace fk {

enum class BasisKind { Polynomial, Bins };

const char* to_string(BasisKind k);

/// Conditional-expectation estimator family.
struct RegressionBasis {
  BasisKind kind = BasisKind::Polynomial;
  /// Total degree of the monomials of the standardized state.
  int degree = 3;
  /// Equal-mass bins (d = 1 only).
  int bins = 20;
  /// Ridge added to the non-intercept part of the normal equations.
  double ridge = 1e-10;
};

struct RegressionFit {
  /// Fitted values, same shape as the targets (M x q).
  Mat fitted;
  double condition = 1.0;
  int columns = 1;
};

/// Least-squares projection of every target column onto the basis evaluated
/// at `features` (M x d). The intercept is never penalized, so fitted
/// columns keep the target means; constant features reduce to the mean.
/// `step` only labels errors.
RegressionFit regress(const RegressionBasis& basis, const Mat& features, const Mat& targets, int step = -1);

}  // namespace fk
