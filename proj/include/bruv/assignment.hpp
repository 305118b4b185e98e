#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace bruv {

/// Dense row-major cost matrix.
class CostMatrix {
 public:
  CostMatrix() = default;
  CostMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  CostMatrix transposed() const;

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

struct Assignment {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (row, col), ascending row
  std::vector<std::size_t> unmatched_rows;
  std::vector<std::size_t> unmatched_cols;
};

/// Minimum-cost assignment of every row to a distinct column (rows <= cols),
/// Hungarian method with potentials, O(rows² · cols). Returns the column of
/// each row.
std::vector<std::size_t> hungarian(const CostMatrix& cost);

/// Optimal partial assignment where leaving a row or a column unmatched costs
/// cost_limit / 2 each; pairs costing more than cost_limit are forbidden.
/// A pair is therefore used only when it beats leaving both ends open.
Assignment assign_with_limit(const CostMatrix& cost, double cost_limit);

/// Maximum-cardinality assignment over pairs with cost <= cost_limit, with
/// minimum total cost among those of maximum cardinality.
Assignment assign_max_matches(const CostMatrix& cost, double cost_limit);

}  // namespace bruv
