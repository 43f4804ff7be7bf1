#pragma once

// Exact solvers for discrete transport: the Hungarian method for square
// uniform problems and a transportation simplex for the general case.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <queue>
#include <vector>

#include "lipgan/error.hpp"

namespace lipgan::solvers {

/// Minimum-cost perfect matching on a square cost matrix, O(n^3).
/// Returns assignment[row] = column.
inline std::vector<std::size_t> hungarian(const Eigen::MatrixXd& cost) {
  const auto n = static_cast<std::size_t>(cost.rows());
  if (cost.cols() != cost.rows()) throw InvalidArgument("hungarian: cost matrix must be square");
  constexpr double kInf = std::numeric_limits<double>::infinity();
  // Potentials u (rows) and v (columns), 1-based with a sentinel column 0.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> match_col(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    match_col[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = match_col[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(static_cast<Eigen::Index>(i0 - 1), static_cast<Eigen::Index>(j - 1)) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match_col[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match_col[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match_col[j0] = match_col[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> assignment(n);
  for (std::size_t j = 1; j <= n; ++j) assignment[match_col[j] - 1] = j - 1;
  return assignment;
}

/// Balanced transportation problem: min sum c_ij x_ij subject to row sums
/// `supply` and column sums `demand`. The basis is kept as a spanning tree of
/// m + n - 1 cells (zero-valued cells carry degeneracy); entering cells are
/// chosen by lowest index among negative reduced costs.
inline Eigen::MatrixXd transportation_simplex(const Eigen::MatrixXd& cost, const std::vector<double>& supply,
                                              const std::vector<double>& demand) {
  const std::size_t m = supply.size();
  const std::size_t n = demand.size();
  if (m == 0 || n == 0) throw InvalidArgument("transportation_simplex: empty problem");
  if (static_cast<std::size_t>(cost.rows()) != m || static_cast<std::size_t>(cost.cols()) != n)
    throw InvalidArgument("transportation_simplex: cost shape does not match marginals");

  struct Cell {
    std::size_t i, j;
    double x;
  };
  std::vector<Cell> basis;
  basis.reserve(m + n - 1);

  // North-west corner start: exactly m + n - 1 cells.
  {
    std::vector<double> a = supply, b = demand;
    std::size_t i = 0, j = 0;
    while (true) {
      const double x = std::max(0.0, std::min(a[i], b[j]));
      basis.push_back({i, j, x});
      a[i] -= x;
      b[j] -= x;
      if (i == m - 1 && j == n - 1) break;
      if (i == m - 1) ++j;
      else if (j == n - 1) ++i;
      else if (a[i] <= b[j]) ++i;
      else ++j;
    }
  }

  const double scale = std::max(1.0, cost.cwiseAbs().maxCoeff());
  const double tol = 1e-12 * scale;
  // Nodes: rows 0..m-1, columns m..m+n-1.
  const std::size_t nodes = m + n;
  std::vector<std::vector<std::size_t>> adj(nodes);  // node -> basis cell ids

  auto rebuild_adjacency = [&] {
    for (auto& a : adj) a.clear();
    for (std::size_t k = 0; k < basis.size(); ++k) {
      adj[basis[k].i].push_back(k);
      adj[m + basis[k].j].push_back(k);
    }
  };

  std::vector<double> pot(nodes);
  std::vector<char> seen(nodes);
  const std::size_t max_pivots = 50 * (m + n) * (m + n) + 1000;
  for (std::size_t pivot = 0;; ++pivot) {
    if (pivot > max_pivots) throw NumericalError("transportation_simplex: pivot limit exceeded");
    rebuild_adjacency();

    // Potentials u_i + v_j = c_ij on basic cells; u_0 = 0.
    std::fill(seen.begin(), seen.end(), 0);
    std::queue<std::size_t> q;
    pot[0] = 0.0;
    seen[0] = 1;
    q.push(0);
    while (!q.empty()) {
      const std::size_t node = q.front();
      q.pop();
      for (std::size_t k : adj[node]) {
        const Cell& c = basis[k];
        const std::size_t other = node < m ? m + c.j : c.i;
        if (seen[other]) continue;
        seen[other] = 1;
        pot[other] = cost(static_cast<Eigen::Index>(c.i), static_cast<Eigen::Index>(c.j)) - pot[node];
        q.push(other);
      }
    }

    // Entering cell: lowest index with negative reduced cost.
    std::size_t ei = m, ej = n;
    for (std::size_t i = 0; i < m && ei == m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double r = cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) - pot[i] - pot[m + j];
        if (r < -tol) {
          ei = i;
          ej = j;
          break;
        }
      }
    }
    if (ei == m) break;

    // Tree path from row ei to column ej.
    std::vector<std::size_t> parent_cell(nodes, basis.size());
    std::vector<std::size_t> parent_node(nodes, nodes);
    std::fill(seen.begin(), seen.end(), 0);
    seen[ei] = 1;
    q.push(ei);
    while (!q.empty()) {
      const std::size_t node = q.front();
      q.pop();
      if (node == m + ej) {
        std::queue<std::size_t>().swap(q);
        break;
      }
      for (std::size_t k : adj[node]) {
        const Cell& c = basis[k];
        const std::size_t other = node < m ? m + c.j : c.i;
        if (seen[other]) continue;
        seen[other] = 1;
        parent_cell[other] = k;
        parent_node[other] = node;
        q.push(other);
      }
    }
    // Walking back from the column, path cells alternate -, +, -, ...
    std::vector<std::size_t> minus, plus;
    bool sign_minus = true;
    for (std::size_t node = m + ej; node != ei; node = parent_node[node]) {
      if (parent_node[node] == nodes) throw NumericalError("transportation_simplex: basis is not a spanning tree");
      (sign_minus ? minus : plus).push_back(parent_cell[node]);
      sign_minus = !sign_minus;
    }
    double theta = std::numeric_limits<double>::infinity();
    std::size_t leaving = basis.size();
    for (std::size_t k : minus) {
      const Cell& c = basis[k];
      const bool better = c.x < theta ||
                          (c.x == theta && (c.i * n + c.j) < (basis[leaving].i * n + basis[leaving].j));
      if (better) {
        theta = c.x;
        leaving = k;
      }
    }
    for (std::size_t k : minus) basis[k].x = std::max(0.0, basis[k].x - theta);
    for (std::size_t k : plus) basis[k].x += theta;
    basis[leaving] = {ei, ej, theta};
  }

  Eigen::MatrixXd plan = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  for (const Cell& c : basis) plan(static_cast<Eigen::Index>(c.i), static_cast<Eigen::Index>(c.j)) = c.x;
  return plan;
}

}  // namespace lipgan::solvers
