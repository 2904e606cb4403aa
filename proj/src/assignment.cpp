#include "manta/assignment.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <stdexcept>

namespace manta {

namespace {

// Rows must not outnumber columns here; solve_assignment transposes first.
std::vector<int> solve_rows_le_cols(const Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  const int m = static_cast<int>(a.cols());
  const double inf = std::numeric_limits<double>::infinity();

  // 1-based potentials; p[j] = row matched to column j (0 = free).
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<double> v(static_cast<std::size_t>(m) + 1, 0.0);
  std::vector<int> p(static_cast<std::size_t>(m) + 1, 0);
  std::vector<int> way(static_cast<std::size_t>(m) + 1, 0);

  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(m) + 1, inf);
    std::vector<bool> used(static_cast<std::size_t>(m) + 1, false);
    do {
      used[static_cast<std::size_t>(j0)] = true;
      const int i0 = p[static_cast<std::size_t>(j0)];
      int j1 = -1;
      double delta = inf;
      for (int j = 1; j <= m; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = a(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] -
                           v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> row_to_col(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= m; ++j)
    if (p[static_cast<std::size_t>(j)] != 0)
      row_to_col[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
  return row_to_col;
}

}  // namespace

AssignmentResult solve_assignment(const Eigen::MatrixXd& cost) {
  AssignmentResult result;
  const int n = static_cast<int>(cost.rows());
  const int m = static_cast<int>(cost.cols());
  if (n == 0 || m == 0) {
    result.row_to_col.assign(static_cast<std::size_t>(n), -1);
    return result;
  }
  if (!cost.allFinite())
    throw std::invalid_argument("solve_assignment: cost matrix must be finite");

  if (n <= m) {
    result.row_to_col = solve_rows_le_cols(cost);
  } else {
    const std::vector<int> col_to_row = solve_rows_le_cols(cost.transpose());
    result.row_to_col.assign(static_cast<std::size_t>(n), -1);
    for (int j = 0; j < m; ++j)
      result.row_to_col[static_cast<std::size_t>(col_to_row[static_cast<std::size_t>(j)])] = j;
  }

  std::vector<double> matched;
  for (int i = 0; i < n; ++i)
    if (result.row_to_col[static_cast<std::size_t>(i)] >= 0)
      matched.push_back(cost(i, result.row_to_col[static_cast<std::size_t>(i)]));
  std::sort(matched.begin(), matched.end(), std::greater<>());
  for (double c : matched) result.cost += c;
  return result;
}

}  // namespace manta
