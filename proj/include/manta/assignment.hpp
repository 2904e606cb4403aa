#pragma once

#include <Eigen/Core>

#include <vector>

namespace manta {

struct AssignmentResult {
  // row_to_col[i] = matched column of row i, or -1 (only when rows > cols).
  std::vector<int> row_to_col;
  // Total cost of the matching, accumulated in descending order of the
  // matched entries so equal-cost matchings compare bit-identically.
  double cost = 0.0;
};

// Exact minimum-cost one-to-one assignment (shortest augmenting path with
// potentials, O(n^2 m)). The smaller side is matched completely.
AssignmentResult solve_assignment(const Eigen::MatrixXd& cost);

}  // namespace manta
