#pragma once

// Linear assignment and track-detection association.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "dstrack/error.hpp"
#include "dstrack/geometry.hpp"

namespace dstrack {

class CostMatrix {
 public:
  CostMatrix() = default;
  CostMatrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), v_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return rows_ == 0 || cols_ == 0; }

  double& operator()(std::size_t r, std::size_t c) { return v_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return v_[r * cols_ + c]; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> v_;
};

using MatchPair = std::pair<std::size_t, std::size_t>;

namespace detail {

// Re-route the tight-edge perfect matching so that row `row` takes column
// `col`, touching only rows not yet fixed. Returns false if impossible.
inline bool reroute(std::size_t row, std::size_t col, std::size_t n, const std::vector<char>& tight,
                    const std::vector<char>& row_fixed, std::vector<std::size_t>& col_of_row,
                    std::vector<std::size_t>& row_of_col) {
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  const std::size_t target = col_of_row[row];
  const std::size_t start = row_of_col[col];
  // BFS over rows; parent_col[y] = row that reached column y.
  std::vector<std::size_t> parent_row(n, kNone);
  std::vector<char> seen_row(n, 0);
  std::vector<std::size_t> queue{start};
  seen_row[start] = 1;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const std::size_t x = queue[head];
    for (std::size_t y = 0; y < n; ++y) {
      if (!tight[x * n + y] || y == col || parent_row[y] != kNone) continue;
      const std::size_t owner = row_of_col[y];
      if (owner != row && row_fixed[owner]) continue;
      parent_row[y] = x;
      if (y == target) {
        // Shift along the path: each row on it takes the column it reached.
        std::size_t c = y;
        while (true) {
          const std::size_t r = parent_row[c];
          const std::size_t prev = col_of_row[r];
          col_of_row[r] = c;
          row_of_col[c] = r;
          if (r == start) break;
          c = prev;
        }
        col_of_row[row] = col;
        row_of_col[col] = row;
        return true;
      }
      if (owner != row && !seen_row[owner]) {
        seen_row[owner] = 1;
        queue.push_back(owner);
      }
    }
  }
  return false;
}

}  // namespace detail

// Minimum-cost assignment of min(rows, cols) pairs. Among optimal
// assignments returns the lexicographically smallest (row, col) pair set.
// Pairs are sorted by row. Throws Error on non-finite entries.
inline std::vector<MatchPair> hungarian(const CostMatrix& cost) {
  if (cost.empty()) return {};
  const std::size_t rows = cost.rows();
  const std::size_t cols = cost.cols();
  const std::size_t n = std::max(rows, cols);
  double scale = 1.0;
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) {
      const double c = cost(i, j);
      if (!std::isfinite(c)) throw Error("cost matrix entry is not finite");
      scale = std::max(scale, std::abs(c));
    }
  const auto at = [&](std::size_t i, std::size_t j) { return (i < rows && j < cols) ? cost(i, j) : 0.0; };

  // Shortest augmenting path with potentials on the padded square matrix.
  // 1-based; column 0 is the virtual source. Invariant: c(i,j) - u[i] - v[j] >= 0.
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> match_col(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    match_col[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = match_col[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = at(i0 - 1, j - 1) - u[i0] - v[j];
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

  // Every optimal assignment is a perfect matching on zero-reduced-cost
  // edges. Pick the lexicographically smallest such matching greedily.
  const double tol = 1e-10 * scale * static_cast<double>(n);
  std::vector<char> tight(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) tight[i * n + j] = (at(i, j) - u[i + 1] - v[j + 1]) <= tol;

  std::vector<std::size_t> col_of_row(n), row_of_col(n);
  for (std::size_t j = 1; j <= n; ++j) {
    row_of_col[j - 1] = match_col[j] - 1;
    col_of_row[match_col[j] - 1] = j - 1;
  }
  std::vector<char> row_fixed(n, 0);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (!tight[i * n + j] || row_fixed[row_of_col[j]]) continue;
      if (col_of_row[i] == j || detail::reroute(i, j, n, tight, row_fixed, col_of_row, row_of_col)) break;
    }
    row_fixed[i] = 1;
  }

  std::vector<MatchPair> out;
  out.reserve(std::min(rows, cols));
  for (std::size_t i = 0; i < rows; ++i)
    if (col_of_row[i] < cols) out.emplace_back(i, col_of_row[i]);
  return out;
}

inline double assignment_cost(const CostMatrix& cost, std::span<const MatchPair> pairs) {
  double total = 0.0;
  for (const auto& [r, c] : pairs) total += cost(r, c);
  return total;
}

struct Association {
  std::vector<MatchPair> matches;  // (track index, detection index)
  std::vector<std::size_t> unmatched_tracks;
  std::vector<std::size_t> unmatched_detections;
};

struct AssociationOptions {
  double iou_gate = 0.3;
  IouMode iou_mode = IouMode::kRotated;
  // Penalize sub-gate pairs inside the cost matrix instead of only demoting
  // them after assignment.
  bool premask_gate = false;
};

// Cost 1 - IoU, optimal assignment, then pairs below the gate are demoted.
inline Association associate(std::span<const RotatedBox> predicted, std::span<const RotatedBox> detections,
                             const AssociationOptions& opt = {}) {
  Association out;
  CostMatrix iou(predicted.size(), detections.size());
  for (std::size_t i = 0; i < predicted.size(); ++i)
    for (std::size_t j = 0; j < detections.size(); ++j) iou(i, j) = box_iou(predicted[i], detections[j], opt.iou_mode);

  CostMatrix cost(predicted.size(), detections.size());
  const double penalty = 1.0 + static_cast<double>(std::max(predicted.size(), detections.size()));
  for (std::size_t i = 0; i < predicted.size(); ++i)
    for (std::size_t j = 0; j < detections.size(); ++j) {
      cost(i, j) = 1.0 - iou(i, j);
      if (opt.premask_gate && iou(i, j) < opt.iou_gate) cost(i, j) += penalty;
    }

  std::vector<char> track_used(predicted.size(), 0), det_used(detections.size(), 0);
  for (const auto& [t, d] : hungarian(cost)) {
    if (iou(t, d) < opt.iou_gate) continue;
    out.matches.emplace_back(t, d);
    track_used[t] = 1;
    det_used[d] = 1;
  }
  for (std::size_t i = 0; i < predicted.size(); ++i)
    if (!track_used[i]) out.unmatched_tracks.push_back(i);
  for (std::size_t j = 0; j < detections.size(); ++j)
    if (!det_used[j]) out.unmatched_detections.push_back(j);
  return out;
}

}  // namespace dstrack
