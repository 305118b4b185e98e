#include "bruv/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace bruv {

CostMatrix CostMatrix::transposed() const {
  CostMatrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  }
  return t;
}

std::vector<std::size_t> hungarian(const CostMatrix& cost) {
  const std::size_t n = cost.rows();
  const std::size_t m = cost.cols();
  if (n > m) throw std::invalid_argument("hungarian: more rows than columns");
  if (n == 0) return {};

  constexpr double inf = std::numeric_limits<double>::infinity();
  // 1-based potentials; column 0 is the virtual start of each augmenting path.
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> row_of_col(m + 1, 0), way(m + 1, 0);

  for (std::size_t i = 1; i <= n; ++i) {
    row_of_col[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = row_of_col[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
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
          u[row_of_col[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (row_of_col[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      row_of_col[j0] = row_of_col[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<std::size_t> col_of_row(n, 0);
  for (std::size_t j = 1; j <= m; ++j) {
    if (row_of_col[j] != 0) col_of_row[row_of_col[j] - 1] = j - 1;
  }
  return col_of_row;
}

namespace {

Assignment finish(std::size_t rows, std::size_t cols,
                  std::vector<std::pair<std::size_t, std::size_t>> pairs) {
  Assignment a;
  std::sort(pairs.begin(), pairs.end());
  std::vector<char> row_used(rows, 0), col_used(cols, 0);
  for (const auto& [r, c] : pairs) row_used[r] = col_used[c] = 1;
  for (std::size_t r = 0; r < rows; ++r) {
    if (!row_used[r]) a.unmatched_rows.push_back(r);
  }
  for (std::size_t c = 0; c < cols; ++c) {
    if (!col_used[c]) a.unmatched_cols.push_back(c);
  }
  a.pairs = std::move(pairs);
  return a;
}

}  // namespace

Assignment assign_with_limit(const CostMatrix& cost, double cost_limit) {
  const std::size_t n = cost.rows();
  const std::size_t m = cost.cols();
  if (n == 0 || m == 0) return finish(n, m, {});

  // Square extension: real block, row-dummy and column-dummy diagonals, and
  // a zero block pairing dummies with each other.
  const double forbidden = 2.0 * (cost_limit + 1.0) * static_cast<double>(n + m) + 1.0;
  const double half = 0.5 * cost_limit;
  const std::size_t k = n + m;
  CostMatrix ext(k, k, forbidden);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < m; ++c) {
      if (cost(r, c) <= cost_limit) ext(r, c) = cost(r, c);
    }
    ext(r, m + r) = half;
  }
  for (std::size_t c = 0; c < m; ++c) {
    ext(n + c, c) = half;
    for (std::size_t r = 0; r < n; ++r) ext(n + c, m + r) = 0.0;
  }

  const auto col_of_row = hungarian(ext);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t c = col_of_row[r];
    if (c < m && cost(r, c) <= cost_limit) pairs.emplace_back(r, c);
  }
  return finish(n, m, std::move(pairs));
}

Assignment assign_max_matches(const CostMatrix& cost, double cost_limit) {
  const std::size_t n = cost.rows();
  const std::size_t m = cost.cols();
  if (n == 0 || m == 0) return finish(n, m, {});

  const bool flip = n > m;
  const CostMatrix work = flip ? cost.transposed() : cost;
  double max_valid = 0.0;
  for (std::size_t r = 0; r < work.rows(); ++r) {
    for (std::size_t c = 0; c < work.cols(); ++c) {
      if (work(r, c) <= cost_limit) max_valid = std::max(max_valid, std::abs(work(r, c)));
    }
  }
  // One forbidden pair outweighs any difference in total valid cost.
  const double forbidden = (2.0 * max_valid + 1.0) * static_cast<double>(work.rows() + 1);
  CostMatrix gated = work;
  for (std::size_t r = 0; r < work.rows(); ++r) {
    for (std::size_t c = 0; c < work.cols(); ++c) {
      if (!(work(r, c) <= cost_limit)) gated(r, c) = forbidden;
    }
  }

  const auto col_of_row = hungarian(gated);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t r = 0; r < work.rows(); ++r) {
    const std::size_t c = col_of_row[r];
    if (work(r, c) <= cost_limit) {
      pairs.emplace_back(flip ? c : r, flip ? r : c);
    }
  }
  return finish(n, m, std::move(pairs));
}

}  // namespace bruv
