#pragma once

// Planar geometry for rotated text boxes: quadrangles, rotated rectangles,
// convex clipping, rotated IoU and rotated NMS.
//
// Coordinates are continuous pixels. Orientation terms (CCW, signed area)
// are in the usual mathematical sense of the (x, y) plane.

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <tuple>
#include <vector>

#include "dstrack/error.hpp"

namespace dstrack {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kHalfPi = std::numbers::pi / 2.0;

// |cross| below this is treated as collinear during clipping.
inline constexpr double kCollinearEps = 1e-9;
// Clipped vertices closer than this are merged.
inline constexpr double kDuplicateEps = 1e-9;

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Point operator*(Point a, double s) { return {a.x * s, a.y * s}; }
  friend constexpr bool operator==(Point a, Point b) = default;
};

constexpr double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
constexpr double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }

// Wraps an angle into [-pi/2, pi/2).
inline double wrap_half_turn(double angle) {
  double r = std::fmod(angle + kHalfPi, kPi);
  if (r < 0.0) r += kPi;
  r -= kHalfPi;
  if (r >= kHalfPi) r -= kPi;
  return r;
}

// Wraps an angle into [-pi/4, pi/4).
inline double wrap_quarter_turn(double angle) {
  constexpr double quarter = kPi / 4.0;
  double r = std::fmod(angle + quarter, kHalfPi);
  if (r < 0.0) r += kHalfPi;
  r -= quarter;
  if (r >= quarter) r -= kHalfPi;
  return r;
}

// Rotated rectangle. Canonical form: w >= h, theta in [-pi/2, pi/2) measured
// CCW from +x to the w side. Squares (w == h up to 1e-12 relative) further
// reduce theta to [-pi/4, pi/4).
struct RotatedBox {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;
  double theta = 0.0;

  double area() const { return w * h; }
  Point center() const { return {cx, cy}; }

  friend bool operator==(const RotatedBox&, const RotatedBox&) = default;
};

inline bool is_square(double w, double h) { return std::abs(w - h) <= 1e-12 * std::max(w, h); }

inline RotatedBox canonicalize(RotatedBox b) {
  if (b.h > b.w) {
    std::swap(b.w, b.h);
    b.theta += kHalfPi;
  }
  b.theta = is_square(b.w, b.h) ? wrap_quarter_turn(b.theta) : wrap_half_turn(b.theta);
  return b;
}

inline bool is_valid(const RotatedBox& b) {
  return std::isfinite(b.cx) && std::isfinite(b.cy) && std::isfinite(b.w) && std::isfinite(b.h) &&
         std::isfinite(b.theta) && b.w > 0.0 && b.h > 0.0 && b.theta >= -kHalfPi && b.theta < kHalfPi;
}

// Corners in CCW order: (-u-v), (+u-v), (+u+v), (-u+v) around the center.
inline std::array<Point, 4> box_corners(const RotatedBox& b) {
  const double c = std::cos(b.theta);
  const double s = std::sin(b.theta);
  const Point u{c * b.w * 0.5, s * b.w * 0.5};
  const Point v{-s * b.h * 0.5, c * b.h * 0.5};
  const Point o = b.center();
  return {o - u - v, o + u - v, o + u + v, o - u + v};
}

struct Aabb {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
  double area() const { return std::max(0.0, x1 - x0) * std::max(0.0, y1 - y0); }
};

inline Aabb bounding_aabb(const RotatedBox& b) {
  const double c = std::abs(std::cos(b.theta));
  const double s = std::abs(std::sin(b.theta));
  const double ex = 0.5 * (c * b.w + s * b.h);
  const double ey = 0.5 * (s * b.w + c * b.h);
  return {b.cx - ex, b.cy - ey, b.cx + ex, b.cy + ey};
}

// ---------------------------------------------------------------------------
// Quad

inline double signed_area(std::span<const Point> pts) {
  double acc = 0.0;
  for (std::size_t i = 0, n = pts.size(); i < n; ++i) acc += cross(pts[i], pts[(i + 1) % n]);
  return 0.5 * acc;
}

namespace detail {

inline int orientation(Point a, Point b, Point c) {
  const double v = cross(b - a, c - a);
  if (std::abs(v) < kCollinearEps) return 0;
  return v > 0 ? 1 : -1;
}

inline bool on_segment(Point a, Point b, Point p) {
  return std::min(a.x, b.x) - kCollinearEps <= p.x && p.x <= std::max(a.x, b.x) + kCollinearEps &&
         std::min(a.y, b.y) - kCollinearEps <= p.y && p.y <= std::max(a.y, b.y) + kCollinearEps;
}

inline bool segments_touch(Point p1, Point p2, Point q1, Point q2) {
  const int o1 = orientation(p1, p2, q1);
  const int o2 = orientation(p1, p2, q2);
  const int o3 = orientation(q1, q2, p1);
  const int o4 = orientation(q1, q2, p2);
  if (o1 != o2 && o3 != o4 && o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0) return true;
  if (o1 == 0 && on_segment(p1, p2, q1)) return true;
  if (o2 == 0 && on_segment(p1, p2, q2)) return true;
  if (o3 == 0 && on_segment(q1, q2, p1)) return true;
  if (o4 == 0 && on_segment(q1, q2, p2)) return true;
  return false;
}

inline bool point_less_yx(Point a, Point b) { return std::tie(a.y, a.x) < std::tie(b.y, b.x); }

}  // namespace detail

// Four-vertex simple polygon, stored canonically: CCW, starting from the
// vertex minimizing (y, then x).
class Quad {
 public:
  Quad() = default;

  // Validates and canonicalizes. Throws GeometryError on non-finite,
  // self-intersecting or zero-area input.
  explicit Quad(const std::array<Point, 4>& vertices) : v_(vertices) {
    for (const Point& p : v_) {
      if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw GeometryError("non-finite quad vertex");
    }
    const double area = signed_area(v_);
    if (std::abs(area) < kCollinearEps) throw GeometryError("degenerate geometry");
    if (detail::segments_touch(v_[0], v_[1], v_[2], v_[3]) || detail::segments_touch(v_[1], v_[2], v_[3], v_[0])) {
      throw GeometryError("self-intersecting quad");
    }
    if (area < 0.0) std::reverse(v_.begin(), v_.end());
    const auto first = std::min_element(v_.begin(), v_.end(), detail::point_less_yx);
    std::rotate(v_.begin(), first, v_.end());
  }

  static Quad from_coords(std::span<const double, 8> xy) {
    return Quad({Point{xy[0], xy[1]}, Point{xy[2], xy[3]}, Point{xy[4], xy[5]}, Point{xy[6], xy[7]}});
  }

  const std::array<Point, 4>& vertices() const noexcept { return v_; }
  const Point& operator[](std::size_t i) const { return v_[i]; }

  std::array<double, 8> coords() const {
    return {v_[0].x, v_[0].y, v_[1].x, v_[1].y, v_[2].x, v_[2].y, v_[3].x, v_[3].y};
  }

  double area() const { return signed_area(v_); }

  friend bool operator==(const Quad&, const Quad&) = default;
  // Total order over the canonical coordinate sequence.
  friend bool operator<(const Quad& a, const Quad& b) { return a.coords() < b.coords(); }

 private:
  std::array<Point, 4> v_{};
};

// ---------------------------------------------------------------------------
// ConvexPolygon

// Fixed-capacity convex polygon, CCW. Empty means "no overlap".
class ConvexPolygon {
 public:
  static constexpr std::size_t kCapacity = 16;

  ConvexPolygon() = default;
  ConvexPolygon(std::initializer_list<Point> pts) {
    for (const Point& p : pts) push_back(p);
  }
  explicit ConvexPolygon(std::span<const Point> pts) {
    for (const Point& p : pts) push_back(p);
  }

  std::size_t size() const noexcept { return n_; }
  bool empty() const noexcept { return n_ == 0; }
  void clear() noexcept { n_ = 0; }
  const Point& operator[](std::size_t i) const { return pts_[i]; }
  const Point* begin() const noexcept { return pts_.data(); }
  const Point* end() const noexcept { return pts_.data() + n_; }
  std::span<const Point> points() const noexcept { return {pts_.data(), n_}; }

  void push_back(Point p) {
    assert(n_ < kCapacity);
    if (n_ < kCapacity) pts_[n_++] = p;
  }

  // Appends unless p duplicates the previous vertex.
  void push_unique(Point p) {
    if (n_ > 0) {
      const Point d = p - pts_[n_ - 1];
      if (std::abs(d.x) < kDuplicateEps && std::abs(d.y) < kDuplicateEps) return;
    }
    push_back(p);
  }

  // Drops a closing vertex equal to the first one; collapses to empty below 3.
  void finish() {
    if (n_ > 1) {
      const Point d = pts_[n_ - 1] - pts_[0];
      if (std::abs(d.x) < kDuplicateEps && std::abs(d.y) < kDuplicateEps) --n_;
    }
    if (n_ < 3) n_ = 0;
  }

 private:
  std::array<Point, kCapacity> pts_{};
  std::size_t n_ = 0;
};

inline ConvexPolygon to_polygon(const RotatedBox& b) {
  const auto c = box_corners(b);
  return ConvexPolygon(std::span<const Point>(c));
}

inline double polygon_area(const ConvexPolygon& p) {
  if (p.size() < 3) return 0.0;
  return std::abs(signed_area(p.points()));
}

// Sutherland-Hodgman: clips `subject` against every edge of `clip`.
inline ConvexPolygon convex_intersection(const ConvexPolygon& subject, const ConvexPolygon& clip) {
  if (subject.size() < 3 || clip.size() < 3) return {};
  ConvexPolygon current = subject;
  ConvexPolygon next;
  for (std::size_t e = 0, m = clip.size(); e < m; ++e) {
    const Point a = clip[e];
    const Point edge = clip[(e + 1) % m] - a;
    next.clear();
    const std::size_t n = current.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Point s = current[i];
      const Point t = current[(i + 1) % n];
      const double ds = cross(edge, s - a);
      const double dt = cross(edge, t - a);
      const bool s_in = ds >= -kCollinearEps;
      const bool t_in = dt >= -kCollinearEps;
      if (t_in) {
        if (!s_in) next.push_unique(s + (t - s) * (ds / (ds - dt)));
        next.push_unique(t);
      } else if (s_in) {
        next.push_unique(s + (t - s) * (ds / (ds - dt)));
      }
    }
    next.finish();
    if (next.empty()) return {};
    current = next;
  }
  return current;
}

// ---------------------------------------------------------------------------
// Conversions

inline Quad rotated_box_to_quad(const RotatedBox& b) { return Quad(box_corners(b)); }

namespace detail {

// Andrew's monotone chain; strict (collinear points removed), CCW.
inline std::vector<Point> convex_hull(std::vector<Point> pts) {
  std::sort(pts.begin(), pts.end(), [](Point a, Point b) { return std::tie(a.x, a.y) < std::tie(b.x, b.y); });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  std::vector<Point> hull(2 * pts.size());
  std::size_t k = 0;
  for (const Point& p : pts) {
    while (k >= 2 && cross(hull[k - 1] - hull[k - 2], p - hull[k - 2]) <= 0.0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

}  // namespace detail

// Minimum-area enclosing rectangle via rotating calipers over the hull.
inline RotatedBox quad_to_rotated_box(const Quad& q) {
  const auto& v = q.vertices();
  const std::vector<Point> hull = detail::convex_hull({v.begin(), v.end()});
  if (hull.size() < 3 || std::abs(signed_area(hull)) < kCollinearEps) throw GeometryError("degenerate geometry");

  RotatedBox best;
  double best_area = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0, n = hull.size(); i < n; ++i) {
    const Point e = hull[(i + 1) % n] - hull[i];
    const double len = std::hypot(e.x, e.y);
    if (len <= 0.0) continue;
    const Point d{e.x / len, e.y / len};
    const Point nrm{-d.y, d.x};
    double lo_d = std::numeric_limits<double>::infinity(), hi_d = -lo_d;
    double lo_n = lo_d, hi_n = -lo_d;
    for (const Point& p : hull) {
      const double pd = dot(p, d);
      const double pn = dot(p, nrm);
      lo_d = std::min(lo_d, pd);
      hi_d = std::max(hi_d, pd);
      lo_n = std::min(lo_n, pn);
      hi_n = std::max(hi_n, pn);
    }
    const double area = (hi_d - lo_d) * (hi_n - lo_n);
    if (area < best_area) {
      best_area = area;
      const Point c = d * (0.5 * (lo_d + hi_d)) + nrm * (0.5 * (lo_n + hi_n));
      best = {c.x, c.y, hi_d - lo_d, hi_n - lo_n, std::atan2(d.y, d.x)};
    }
  }
  return canonicalize(best);
}

// ---------------------------------------------------------------------------
// IoU

inline double aabb_iou(const RotatedBox& a, const RotatedBox& b) {
  const Aabb p = bounding_aabb(a);
  const Aabb q = bounding_aabb(b);
  const Aabb i{std::max(p.x0, q.x0), std::max(p.y0, q.y0), std::min(p.x1, q.x1), std::min(p.y1, q.y1)};
  const double inter = i.area();
  const double uni = p.area() + q.area() - inter;
  return uni > 0.0 ? std::clamp(inter / uni, 0.0, 1.0) : 0.0;
}

inline double rotated_iou(const RotatedBox& a, const RotatedBox& b) {
  const Aabb p = bounding_aabb(a);
  const Aabb q = bounding_aabb(b);
  if (p.x1 <= q.x0 || q.x1 <= p.x0 || p.y1 <= q.y0 || q.y1 <= p.y0) return 0.0;
  // Fixed argument order makes the result exactly symmetric.
  const auto key = [](const RotatedBox& r) { return std::tie(r.cx, r.cy, r.w, r.h, r.theta); };
  const bool swap = key(b) < key(a);
  const RotatedBox& s = swap ? b : a;
  const RotatedBox& c = swap ? a : b;
  const double inter = polygon_area(convex_intersection(to_polygon(s), to_polygon(c)));
  const double uni = s.area() + c.area() - inter;
  return uni > 0.0 ? std::clamp(inter / uni, 0.0, 1.0) : 0.0;
}

enum class IouMode { kRotated, kAabb };

inline double box_iou(const RotatedBox& a, const RotatedBox& b, IouMode mode) {
  return mode == IouMode::kRotated ? rotated_iou(a, b) : aabb_iou(a, b);
}

// Greedy NMS. Visits boxes by descending score (ties: ascending index) and
// keeps a box when its IoU with every kept box is below iou_threshold.
// Returns kept indices in visiting order.
inline std::vector<std::size_t> rotated_nms(std::span<const RotatedBox> boxes, std::span<const double> scores,
                                            double iou_threshold, IouMode mode = IouMode::kRotated) {
  assert(boxes.size() == scores.size());
  std::vector<std::size_t> order(boxes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return scores[i] > scores[j]; });
  std::vector<std::size_t> kept;
  kept.reserve(order.size());
  for (const std::size_t i : order) {
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](std::size_t k) {
      return box_iou(boxes[i], boxes[k], mode) >= iou_threshold;
    });
    if (!suppressed) kept.push_back(i);
  }
  return kept;
}

}  // namespace dstrack
