#include "scenmine/metrics/assignment.hpp"

#include <cmath>
#include <limits>

#include "scenmine/errors.hpp"

namespace scenmine::metrics {

namespace {

// Rows <= cols. 1-based potentials as in the classic formulation; column 0
// is a sentinel that holds the row being inserted.
std::vector<int> solve_wide(const CostMatrix& a, std::size_t n, std::size_t m) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, kInf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(n, -1);
  for (std::size_t j = 1; j <= m; ++j) {
    if (p[j] != 0) row_to_col[p[j] - 1] = static_cast<int>(j - 1);
  }
  return row_to_col;
}

}  // namespace

std::vector<int> min_cost_assignment(const CostMatrix& cost) {
  const std::size_t n = cost.size();
  if (n == 0) return {};
  const std::size_t m = cost.front().size();
  for (const auto& row : cost) {
    if (row.size() != m) throw InvalidInput("min_cost_assignment: ragged cost matrix");
    for (double c : row) {
      if (!std::isfinite(c)) throw InvalidInput("min_cost_assignment: non-finite cost");
    }
  }
  if (m == 0) return std::vector<int>(n, -1);
  if (n <= m) return solve_wide(cost, n, m);

  CostMatrix t(m, std::vector<double>(n));
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < m; ++c) t[c][r] = cost[r][c];
  }
  const auto col_to_row = solve_wide(t, m, n);
  std::vector<int> row_to_col(n, -1);
  for (std::size_t c = 0; c < m; ++c) row_to_col[col_to_row[c]] = static_cast<int>(c);
  return row_to_col;
}

std::vector<int> max_score_assignment(const CostMatrix& score) {
  CostMatrix neg = score;
  for (auto& row : neg) {
    for (double& x : row) x = -x;
  }
  return min_cost_assignment(neg);
}

}  // namespace scenmine::metrics
