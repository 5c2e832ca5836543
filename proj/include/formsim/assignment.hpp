#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

namespace formsim {

/// A bijection rows -> columns with its objective value.
struct Assignment {
    std::vector<std::size_t> row_to_col;
    double total = 0.0;
};

/// Square linear sum assignment minimizing the summed cost (Hungarian method
/// with row/column potentials, O(n^3)). Among equal-cost optima the
/// lexicographically smallest row->column mapping is returned.
///
/// Reentrant; keeps no state between calls.
Assignment solve_min_cost_assignment(const Eigen::MatrixXd& cost);

/// Same as solve_min_cost_assignment on the negated matrix.
Assignment solve_max_weight_assignment(const Eigen::MatrixXd& weight);

}  // namespace formsim
