#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

#include "lipgan/error.hpp"

namespace lipgan::solvers {

struct LpResult {
  Eigen::VectorXd x;
  double objective = 0.0;
  std::size_t pivots = 0;
};

/// max c^T x  s.t.  A x <= b, x >= 0, with b >= 0 so the slack basis is
/// feasible. Condensed (dictionary) tableau; Bland's rule on both the
/// entering and leaving choice, so degenerate problems cannot cycle.
inline LpResult simplex_max(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& c,
                            double tol = 1e-9) {
  const Eigen::Index m = A.rows();
  const Eigen::Index n = A.cols();
  if (b.size() != m || c.size() != n) throw InvalidArgument("simplex_max: shape mismatch");
  if ((b.array() < 0.0).any()) throw InvalidArgument("simplex_max: right-hand side must be non-negative");

  // Dictionary: x_B[i] = rhs[i] - sum_j a(i, j) x_N[j];  z = z0 + sum_j obj[j] x_N[j].
  Eigen::MatrixXd a = A;
  Eigen::VectorXd rhs = b;
  Eigen::VectorXd obj = c;
  double z0 = 0.0;
  // Labels: 0..n-1 original variables, n..n+m-1 slacks.
  std::vector<Eigen::Index> nonbasic(static_cast<std::size_t>(n)), basic(static_cast<std::size_t>(m));
  std::iota(nonbasic.begin(), nonbasic.end(), Eigen::Index{0});
  std::iota(basic.begin(), basic.end(), n);

  LpResult result;
  const std::size_t max_pivots = 1000000;
  while (true) {
    Eigen::Index enter = -1;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (obj[j] > tol && (enter < 0 || nonbasic[j] < nonbasic[enter])) enter = j;
    }
    if (enter < 0) break;

    Eigen::Index leave = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < m; ++i) {
      const double coef = a(i, enter);
      if (coef <= tol) continue;
      const double ratio = rhs[i] / coef;
      if (ratio < best - tol || (std::abs(ratio - best) <= tol && basic[i] < basic[leave])) {
        best = ratio;
        leave = i;
      }
    }
    if (leave < 0) throw NumericalError("simplex_max: problem is unbounded");
    if (++result.pivots > max_pivots) throw NumericalError("simplex_max: pivot limit exceeded");

    const double p = a(leave, enter);
    a.row(leave) /= p;
    rhs[leave] /= p;
    a(leave, enter) = 1.0 / p;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (i == leave) continue;
      const double f = a(i, enter);
      if (f == 0.0) continue;
      a.row(i) -= f * a.row(leave);
      a(i, enter) = -f * a(leave, enter);
      rhs[i] -= f * rhs[leave];
      if (rhs[i] < 0.0 && rhs[i] > -tol) rhs[i] = 0.0;
    }
    const double ce = obj[enter];
    obj -= ce * a.row(leave).transpose();
    obj[enter] = -ce * a(leave, enter);
    z0 += ce * rhs[leave];
    std::swap(nonbasic[static_cast<std::size_t>(enter)], basic[static_cast<std::size_t>(leave)]);
  }

  result.x = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < m; ++i)
    if (basic[static_cast<std::size_t>(i)] < n) result.x[basic[static_cast<std::size_t>(i)]] = rhs[i];
  result.objective = c.dot(result.x);
  return result;
}

}  // namespace lipgan::solvers
