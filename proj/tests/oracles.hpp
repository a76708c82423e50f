#pragma once

// Reference implementations used only by tests. None of these call into the
// clipping, assignment or filter code they are checked against.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

#include "dstrack/geometry.hpp"

namespace oracle {

using dstrack::Point;
using dstrack::RotatedBox;

inline bool inside_box(const RotatedBox& b, double x, double y) {
  const double c = std::cos(b.theta), s = std::sin(b.theta);
  const double dx = x - b.cx, dy = y - b.cy;
  return std::abs(dx * c + dy * s) <= 0.5 * b.w && std::abs(-dx * s + dy * c) <= 0.5 * b.h;
}

struct Region {
  double x0, y0, x1, y1;
};

inline Region union_region(const RotatedBox& a, const RotatedBox& b) {
  const auto ea = dstrack::bounding_aabb(a);
  const auto eb = dstrack::bounding_aabb(b);
  return {std::min(ea.x0, eb.x0), std::min(ea.y0, eb.y0), std::max(ea.x1, eb.x1), std::max(ea.y1, eb.y1)};
}

// Literal per-cell rasterization: n x n cell centers over the union region.
inline double raster_iou_cells(const RotatedBox& a, const RotatedBox& b, int n = 2000) {
  const Region r = union_region(a, b);
  const double dx = (r.x1 - r.x0) / n, dy = (r.y1 - r.y0) / n;
  long long both = 0, either = 0;
  for (int j = 0; j < n; ++j) {
    const double y = r.y0 + (j + 0.5) * dy;
    for (int i = 0; i < n; ++i) {
      const double x = r.x0 + (i + 0.5) * dx;
      const bool ia = inside_box(a, x, y), ib = inside_box(b, x, y);
      both += ia && ib;
      either += ia || ib;
    }
  }
  return either ? static_cast<double>(both) / static_cast<double>(either) : 0.0;
}

namespace detail {

// x-range of a row inside a box: both slab constraints are linear in x.
inline std::pair<double, double> row_interval(const RotatedBox& b, double y) {
  const double c = std::cos(b.theta), s = std::sin(b.theta);
  double lo = -std::numeric_limits<double>::infinity(), hi = std::numeric_limits<double>::infinity();
  const auto slab = [&](double coef, double offset, double half) {
    // |coef * x + offset| <= half
    if (std::abs(coef) < 1e-15) {
      if (std::abs(offset) > half) {
        lo = 1.0;
        hi = 0.0;
      }
      return;
    }
    double a = (-half - offset) / coef, z = (half - offset) / coef;
    if (a > z) std::swap(a, z);
    lo = std::max(lo, a);
    hi = std::min(hi, z);
  };
  slab(c, -b.cx * c + (y - b.cy) * s, 0.5 * b.w);
  slab(-s, b.cx * s + (y - b.cy) * c, 0.5 * b.h);
  return {lo, hi};
}

// Number of cell centers x0 + (i + 0.5) dx, i in [0, n), inside [lo, hi].
inline long long centers_in(double lo, double hi, double x0, double dx, int n) {
  if (lo > hi) return 0;
  const double first = std::ceil((lo - x0) / dx - 0.5);
  const double last = std::floor((hi - x0) / dx - 0.5);
  const double a = std::max(first, 0.0), z = std::min(last, static_cast<double>(n - 1));
  return z >= a ? static_cast<long long>(z - a + 1) : 0;
}

}  // namespace detail

// Same grid as raster_iou_cells, counted per row via the interval each box
// covers on that row.
inline double raster_iou(const RotatedBox& a, const RotatedBox& b, int n = 2000) {
  const Region r = union_region(a, b);
  const double dx = (r.x1 - r.x0) / n, dy = (r.y1 - r.y0) / n;
  long long both = 0, either = 0;
  for (int j = 0; j < n; ++j) {
    const double y = r.y0 + (j + 0.5) * dy;
    const auto [alo, ahi] = detail::row_interval(a, y);
    const auto [blo, bhi] = detail::row_interval(b, y);
    const long long na = detail::centers_in(alo, ahi, r.x0, dx, n);
    const long long nb = detail::centers_in(blo, bhi, r.x0, dx, n);
    const long long nab = detail::centers_in(std::max(alo, blo), std::min(ahi, bhi), r.x0, dx, n);
    both += nab;
    either += na + nb - nab;
  }
  return either ? static_cast<double>(both) / static_cast<double>(either) : 0.0;
}

// Area of the intersection of two axis-aligned rectangles given as polygons,
// by rasterizing the pair's bounding region.
inline double raster_area_both(const std::function<bool(double, double)>& in_a,
                               const std::function<bool(double, double)>& in_b, Region r, int n) {
  const double dx = (r.x1 - r.x0) / n, dy = (r.y1 - r.y0) / n;
  long long both = 0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double x = r.x0 + (i + 0.5) * dx, y = r.y0 + (j + 0.5) * dy;
      both += in_a(x, y) && in_b(x, y);
    }
  return static_cast<double>(both) * dx * dy;
}

// Minimum AABB area over rotations theta = -pi/2 + k * step.
inline double swept_min_area(const std::vector<Point>& pts, double step = 0.001) {
  double best = std::numeric_limits<double>::infinity();
  for (double t = -std::numbers::pi / 2; t < std::numbers::pi / 2; t += step) {
    const double c = std::cos(t), s = std::sin(t);
    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    for (const Point& p : pts) {
      const double x = p.x * c + p.y * s, y = -p.x * s + p.y * c;
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
    best = std::min(best, (x1 - x0) * (y1 - y0));
  }
  return best;
}

// Exhaustive assignment: every injection of min(rows, cols) pairs. Returns
// the minimum cost (summed in row order) and the lexicographically smallest
// optimal pair list.
struct BruteAssignment {
  double cost = 0.0;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
};

inline BruteAssignment brute_force_assignment(const std::vector<std::vector<double>>& c) {
  BruteAssignment best{std::numeric_limits<double>::infinity(), {}};
  const std::size_t rows = c.size();
  const std::size_t cols = rows ? c[0].size() : 0;
  if (rows == 0 || cols == 0) return {0.0, {}};
  const std::size_t k = std::min(rows, cols);
  std::vector<std::pair<std::size_t, std::size_t>> cur;
  std::vector<char> col_used(cols, 0);
  // Recurse over rows in order; a row may be skipped only while enough rows remain.
  std::function<void(std::size_t)> rec = [&](std::size_t row) {
    if (cur.size() == k) {
      double total = 0.0;
      for (const auto& [r, cc] : cur) total += c[r][cc];
      if (total < best.cost || (total == best.cost && cur < best.pairs)) best = {total, cur};
      return;
    }
    if (row == rows) return;
    for (std::size_t j = 0; j < cols; ++j) {
      if (col_used[j]) continue;
      col_used[j] = 1;
      cur.emplace_back(row, j);
      rec(row + 1);
      cur.pop_back();
      col_used[j] = 0;
    }
    if (rows - row - 1 >= k - cur.size()) rec(row + 1);
  };
  rec(0);
  return best;
}

// Step-by-step greedy NMS: repeatedly take the best remaining box (highest
// score, lowest index) and discard everything overlapping it.
inline std::vector<std::size_t> reference_nms(const std::vector<RotatedBox>& boxes, const std::vector<double>& scores,
                                              double thr, const std::function<double(const RotatedBox&, const RotatedBox&)>& iou) {
  std::vector<char> alive(boxes.size(), 1);
  std::vector<std::size_t> kept;
  while (true) {
    std::size_t pick = boxes.size();
    for (std::size_t i = 0; i < boxes.size(); ++i)
      if (alive[i] && (pick == boxes.size() || scores[i] > scores[pick])) pick = i;
    if (pick == boxes.size()) break;
    kept.push_back(pick);
    alive[pick] = 0;
    for (std::size_t i = 0; i < boxes.size(); ++i)
      if (alive[i] && iou(boxes[pick], boxes[i]) >= thr) alive[i] = 0;
  }
  return kept;
}

// One axis of a constant-velocity Kalman filter, scalar arithmetic only.
struct AxisFilter {
  double pos, vel;
  double p00, p01, p11;
  double q_pos, q_vel, r;

  void predict() {
    pos += vel;
    const double n00 = p00 + 2 * p01 + p11 + q_pos;
    const double n01 = p01 + p11;
    const double n11 = p11 + q_vel;
    p00 = n00;
    p01 = n01;
    p11 = n11;
  }

  void update(double z) {
    const double s = p00 + r;
    const double k0 = p00 / s, k1 = p01 / s;
    const double y = z - pos;
    pos += k0 * y;
    vel += k1 * y;
    const double n00 = (1 - k0) * p00;
    const double n01 = (1 - k0) * p01;
    const double n11 = p11 - k1 * p01;
    p00 = n00;
    p01 = n01;
    p11 = n11;
  }
};

}  // namespace oracle
