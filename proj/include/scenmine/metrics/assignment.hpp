#pragma once

#include <vector>

namespace scenmine::metrics {

// Dense cost matrix, row-major: cost[r][c]. All rows must share one length.
using CostMatrix = std::vector<std::vector<double>>;

// Minimum-total-cost assignment on a rectangular matrix (Kuhn-Munkres with
// potentials, O(n^2 m)). Every row of the smaller side is matched. Returns,
// per row, the assigned column or -1 when the row is left unmatched (only
// possible when rows > cols). Non-finite costs throw InvalidInput.
std::vector<int> min_cost_assignment(const CostMatrix& cost);

// Same, maximizing the total.
std::vector<int> max_score_assignment(const CostMatrix& score);

}  // namespace scenmine::metrics
