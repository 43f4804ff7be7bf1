#pragma once

// Wasserstein-1 between point clouds: the primal coupling, the dual LP with
// either cross-pair (real, fake) constraints only or constraints between every
// pair of support points, and helpers to read a plan.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "lipgan/error.hpp"
#include "lipgan/geometry.hpp"
#include "lipgan/solvers/assignment.hpp"
#include "lipgan/solvers/simplex.hpp"

namespace lipgan {

/// plan(i, j): mass moved between real point i and fake point j.
struct TransportPlan {
  Eigen::MatrixXd plan;
  double cost = 0.0;
};

enum class ConstraintMode { support_restricted, full_lipschitz };

inline const char* to_string(ConstraintMode m) {
  return m == ConstraintMode::support_restricted ? "support_restricted" : "full_lipschitz";
}

struct DualPotential {
  std::vector<double> pr_values;
  std::vector<double> pg_values;
  double objective = 0.0;  // E_pr[f] - E_pg[f]
  ConstraintMode mode = ConstraintMode::support_restricted;
};

inline constexpr std::size_t kDualSupportLimit = 2000;

inline Eigen::MatrixXd cost_matrix(const PointCloud& pr, const PointCloud& pg) {
  if (pr.dim() != pg.dim()) throw DimensionMismatch(pr.dim(), pg.dim());
  Eigen::MatrixXd c(static_cast<Eigen::Index>(pr.size()), static_cast<Eigen::Index>(pg.size()));
  for (std::size_t i = 0; i < pr.size(); ++i)
    for (std::size_t j = 0; j < pg.size(); ++j)
      c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = euclidean(pr.point(i), pg.point(j));
  return c;
}

/// Exact optimal coupling. Uniform equal-sized clouds go through the
/// Hungarian method; everything else through the transportation simplex.
inline TransportPlan w1_primal(const PointCloud& pr, const PointCloud& pg) {
  const Eigen::MatrixXd c = cost_matrix(pr, pg);
  TransportPlan out;
  if (pr.size() == pg.size() && pr.is_uniform() && pg.is_uniform()) {
    const auto n = static_cast<Eigen::Index>(pr.size());
    const auto match = solvers::hungarian(c);
    out.plan = Eigen::MatrixXd::Zero(n, n);
    const double mass = 1.0 / static_cast<double>(n);
    for (Eigen::Index i = 0; i < n; ++i) out.plan(i, static_cast<Eigen::Index>(match[static_cast<std::size_t>(i)])) = mass;
  } else {
    out.plan = solvers::transportation_simplex(c, pr.weights(), pg.weights());
  }
  out.cost = (out.plan.array() * c.array()).sum();
  return out;
}

inline double w1(const PointCloud& pr, const PointCloud& pg) { return w1_primal(pr, pg).cost; }

/// Dual LP: max E_pr[f] - E_pg[f] over values of f on the support, subject to
/// f(x) - f(y) <= d(x, y) for x in P_r, y in P_g (support_restricted) or for
/// every ordered pair of support points (full_lipschitz).
inline DualPotential w1_dual(const PointCloud& pr, const PointCloud& pg, ConstraintMode mode) {
  if (pr.dim() != pg.dim()) throw DimensionMismatch(pr.dim(), pg.dim());
  const std::size_t nr = pr.size();
  const std::size_t ng = pg.size();
  const std::size_t total = nr + ng;
  if (total > kDualSupportLimit)
    throw InvalidArgument("w1_dual: total support " + std::to_string(total) + " exceeds the LP limit of " +
                          std::to_string(kDualSupportLimit));

  // Support point k: k < nr is real point k, otherwise fake point k - nr.
  auto point = [&](std::size_t k) -> const Point& { return k < nr ? pr.point(k) : pg.point(k - nr); };

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  if (mode == ConstraintMode::support_restricted) {
    pairs.reserve(nr * ng);
    for (std::size_t i = 0; i < nr; ++i)
      for (std::size_t j = 0; j < ng; ++j) pairs.emplace_back(i, nr + j);
  } else {
    pairs.reserve(total * (total - 1));
    for (std::size_t p = 0; p < total; ++p)
      for (std::size_t q = 0; q < total; ++q)
        if (p != q) pairs.emplace_back(p, q);
  }

  // f_k = fp_k - fm_k with fp, fm >= 0; columns [fp_0..fp_{N-1}, fm_0..fm_{N-1}].
  const auto N = static_cast<Eigen::Index>(total);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(pairs.size()), 2 * N);
  Eigen::VectorXd b(static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t r = 0; r < pairs.size(); ++r) {
    const auto [p, q] = pairs[r];
    const auto row = static_cast<Eigen::Index>(r);
    const auto ip = static_cast<Eigen::Index>(p);
    const auto iq = static_cast<Eigen::Index>(q);
    A(row, ip) += 1.0;
    A(row, N + ip) -= 1.0;
    A(row, iq) -= 1.0;
    A(row, N + iq) += 1.0;
    b[row] = euclidean(point(p), point(q));
  }
  Eigen::VectorXd c(2 * N);
  for (std::size_t k = 0; k < total; ++k) {
    const double w = k < nr ? pr.weight(k) : -pg.weight(k - nr);
    c[static_cast<Eigen::Index>(k)] = w;
    c[N + static_cast<Eigen::Index>(k)] = -w;
  }

  const solvers::LpResult lp = solvers::simplex_max(A, b, c);

  DualPotential out;
  out.mode = mode;
  out.pr_values.resize(nr);
  out.pg_values.resize(ng);
  for (std::size_t k = 0; k < total; ++k) {
    const double f = lp.x[static_cast<Eigen::Index>(k)] - lp.x[N + static_cast<Eigen::Index>(k)];
    (k < nr ? out.pr_values[k] : out.pg_values[k - nr]) = f;
  }
  out.objective = 0.0;
  for (std::size_t i = 0; i < nr; ++i) out.objective += pr.weight(i) * out.pr_values[i];
  for (std::size_t j = 0; j < ng; ++j) out.objective -= pg.weight(j) * out.pg_values[j];
  return out;
}

/// E_pr[f] - E_pg[f] for given support values.
inline double dual_objective(const PointCloud& pr, const PointCloud& pg, const std::vector<double>& pr_values,
                             const std::vector<double>& pg_values) {
  if (pr_values.size() != pr.size() || pg_values.size() != pg.size())
    throw InvalidArgument("dual_objective: value count does not match support size");
  double obj = 0.0;
  for (std::size_t i = 0; i < pr.size(); ++i) obj += pr.weight(i) * pr_values[i];
  for (std::size_t j = 0; j < pg.size(); ++j) obj -= pg.weight(j) * pg_values[j];
  return obj;
}

/// Largest constraint violation max(f(x) - f(y) - d(x, y)) over the pairs the
/// mode constrains; <= 0 means feasible.
inline double dual_max_violation(const PointCloud& pr, const PointCloud& pg, const std::vector<double>& pr_values,
                                 const std::vector<double>& pg_values, ConstraintMode mode) {
  if (pr_values.size() != pr.size() || pg_values.size() != pg.size())
    throw InvalidArgument("dual_max_violation: value count does not match support size");
  const std::size_t nr = pr.size();
  const std::size_t total = nr + pg.size();
  auto point = [&](std::size_t k) -> const Point& { return k < nr ? pr.point(k) : pg.point(k - nr); };
  auto value = [&](std::size_t k) { return k < nr ? pr_values[k] : pg_values[k - nr]; };
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < total; ++p) {
    for (std::size_t q = 0; q < total; ++q) {
      if (p == q) continue;
      const bool cross = p < nr && q >= nr;
      if (mode == ConstraintMode::support_restricted && !cross) continue;
      worst = std::max(worst, value(p) - value(q) - euclidean(point(p), point(q)));
    }
  }
  return worst;
}

struct CouplingTarget {
  std::size_t pr_index;
  double mass;
};

/// Real points receiving mass from fake point `pg_index`.
inline std::vector<CouplingTarget> coupling_targets(const TransportPlan& plan, std::size_t pg_index,
                                                    double mass_tol = 1e-12) {
  if (pg_index >= static_cast<std::size_t>(plan.plan.cols()))
    throw InvalidArgument("coupling_targets: fake index " + std::to_string(pg_index) + " out of range");
  std::vector<CouplingTarget> out;
  for (Eigen::Index i = 0; i < plan.plan.rows(); ++i) {
    const double m = plan.plan(i, static_cast<Eigen::Index>(pg_index));
    if (m > mass_tol) out.push_back({static_cast<std::size_t>(i), m});
  }
  return out;
}

}  // namespace lipgan
