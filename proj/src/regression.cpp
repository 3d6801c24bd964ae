#include "fk/regression.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include "fk/errors.hpp"

namespace fk {

namespace {

constexpr double kMaxCondition = 1e14;

// Exponent vectors of all monomials of total degree <= deg in n variables,
// constant first.
std::vector<std::vector<int>> monomials(int n, int deg) {
  std::vector<std::vector<int>> out;
  std::vector<int> e(n, 0);
  for (int total = 0; total <= deg; ++total) {
    // compositions of `total` into n parts in lexicographic order
    std::function<void(int, int)> rec = [&](int i, int left) {
      if (i == n - 1) {
        e[i] = left;
        out.push_back(e);
        return;
      }
      for (int v = left; v >= 0; --v) {
        e[i] = v;
        rec(i + 1, left - v);
      }
    };
    if (n == 0) {
      if (total == 0) out.push_back({});
      continue;
    }
    rec(0, total);
  }
  return out;
}

[[noreturn]] void rank_failure(int step, const std::string& what) {
  fail(ErrorKind::NumericFailure, "backward", "regression at step " + std::to_string(step) + ": " + what);
}

RegressionFit polynomial(const RegressionBasis& basis, const Mat& X, const Mat& Y, int step) {
  const Eigen::Index M = X.rows();
  const double Mn = static_cast<double>(M);
  std::vector<int> active;
  std::vector<double> mean, sd;
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double mu = X.col(j).sum() / Mn;
    const double var = (X.col(j).array() - mu).square().sum() / Mn;
    if (var > 1e-24 * (1.0 + mu * mu)) {
      active.push_back(static_cast<int>(j));
      mean.push_back(mu);
      sd.push_back(std::sqrt(var));
    }
  }
  const int n = static_cast<int>(active.size());
  const auto expo = monomials(n, n == 0 ? 0 : basis.degree);
  const int p = static_cast<int>(expo.size());

  Mat Z(M, n);
  for (int j = 0; j < n; ++j) Z.col(j) = (X.col(active[j]).array() - mean[j]) / sd[j];
  Mat Phi(M, p);
  for (int c = 0; c < p; ++c) {
    for (Eigen::Index r = 0; r < M; ++r) {
      double v = 1.0;
      for (int j = 0; j < n; ++j) {
        for (int q = 0; q < expo[c][j]; ++q) v *= Z(r, j);
      }
      Phi(r, c) = v;
    }
  }
  Mat G = Phi.transpose() * Phi / Mn;
  for (int c = 1; c < p; ++c) G(c, c) += basis.ridge;
  const Mat rhs = Phi.transpose() * Y / Mn;

  RegressionFit fit;
  fit.columns = p;
  if (p == 1) {
    fit.condition = 1.0;
  } else {
    Eigen::SelfAdjointEigenSolver<Mat> eig(G, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    fit.condition = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
    if (!(fit.condition <= kMaxCondition)) rank_failure(step, "normal matrix is numerically singular");
  }
  Eigen::LDLT<Mat> ldlt(G);
  if (ldlt.info() != Eigen::Success) rank_failure(step, "factorization failed");
  const Mat beta = ldlt.solve(rhs);
  if (!beta.allFinite()) rank_failure(step, "non-finite coefficients");
  fit.fitted = Phi * beta;
  return fit;
}

RegressionFit bins(const RegressionBasis& basis, const Mat& X, const Mat& Y, int step) {
  if (X.cols() != 1) fail(ErrorKind::InvalidInput, "backward", "bin regression needs one-dimensional states");
  const Eigen::Index M = X.rows();
  std::vector<double> sorted(X.data(), X.data() + M);
  std::sort(sorted.begin(), sorted.end());
  const int B = std::max(1, std::min<int>(basis.bins, static_cast<int>(M)));
  std::vector<double> edges;
  for (int j = 1; j < B; ++j) {
    const double e = sorted[static_cast<std::size_t>(j) * M / B];
    if (edges.empty() || e > edges.back()) edges.push_back(e);
  }
  const int nb = static_cast<int>(edges.size()) + 1;
  std::vector<int> which(M);
  std::vector<double> count(nb, 0.0);
  Mat sums = Mat::Zero(nb, Y.cols());
  for (Eigen::Index r = 0; r < M; ++r) {
    const int b = static_cast<int>(std::upper_bound(edges.begin(), edges.end(), X(r, 0)) - edges.begin());
    which[r] = b;
    count[b] += 1.0;
    sums.row(b) += Y.row(r);
  }
  RegressionFit fit;
  fit.columns = nb;
  fit.fitted.resize(M, Y.cols());
  for (Eigen::Index r = 0; r < M; ++r) fit.fitted.row(r) = sums.row(which[r]) / count[which[r]];
  if (!fit.fitted.allFinite()) rank_failure(step, "non-finite bin means");
  const double cmin = *std::min_element(count.begin(), count.end());
  const double cmax = *std::max_element(count.begin(), count.end());
  fit.condition = cmax / cmin;
  return fit;
}

}  // namespace

const char* to_string(BasisKind k) { return k == BasisKind::Polynomial ? "polynomial" : "bins"; }

RegressionFit regress(const RegressionBasis& basis, const Mat& features, const Mat& targets, int step) {
  if (features.rows() != targets.rows() || features.rows() < 1) {
    fail(ErrorKind::InvalidInput, "backward", "regression needs matching, nonempty samples");
  }
  if (basis.degree < 0 || basis.bins < 1 || !(basis.ridge >= 0.0)) {
    fail(ErrorKind::InvalidInput, "backward", "invalid regression basis");
  }
  RegressionFit fit = basis.kind == BasisKind::Polynomial ? polynomial(basis, features, targets, step)
                                                          : bins(basis, features, targets, step);
  // constants lie in every basis; reproduce them without rounding
  for (Eigen::Index c = 0; c < targets.cols(); ++c) {
    if ((targets.col(c).array() == targets(0, c)).all()) fit.fitted.col(c).setConstant(targets(0, c));
  }
  return fit;
}

}  // namespace fk
