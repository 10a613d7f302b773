#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

namespace benchpush {

inline constexpr double kPi = std::numbers::pi;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
  constexpr Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
  constexpr Vec2& operator*=(double s) { x *= s; y *= s; return *this; }
  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
  friend constexpr Vec2 operator*(Vec2 a, double s) { return {a.x * s, a.y * s}; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return {a.x * s, a.y * s}; }
  friend constexpr Vec2 operator/(Vec2 a, double s) { return {a.x / s, a.y / s}; }
  friend constexpr bool operator==(Vec2 a, Vec2 b) = default;
};

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
// cross(s, v) for a scalar angular rate: s × v
constexpr Vec2 cross(double s, Vec2 v) { return {-s * v.y, s * v.x}; }
constexpr Vec2 perp(Vec2 v) { return {-v.y, v.x}; }
inline double length(Vec2 v) { return std::hypot(v.x, v.y); }
constexpr double length_squared(Vec2 v) { return dot(v, v); }
inline Vec2 normalized(Vec2 v) {
  const double n = length(v);
  return n > 0.0 ? v / n : Vec2{};
}
inline Vec2 unit_from_angle(double theta) { return {std::cos(theta), std::sin(theta)}; }
inline Vec2 rotate(Vec2 v, double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

// Wraps to (-pi, pi].
inline double wrap_angle(double theta) {
  if (theta > -kPi && theta <= kPi) return theta;
  double r = std::remainder(theta, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Vec2 position() const { return {x, y}; }
  Vec2 heading() const { return unit_from_angle(theta); }
  Vec2 to_world(Vec2 local) const { return position() + rotate(local, theta); }
  Vec2 to_local(Vec2 world) const { return rotate(world - position(), -theta); }
  friend bool operator==(const Pose&, const Pose&) = default;
};

struct Aabb {
  Vec2 lo;
  Vec2 hi;

  bool overlaps(const Aabb& o) const {
    return lo.x <= o.hi.x && o.lo.x <= hi.x && lo.y <= o.hi.y && o.lo.y <= hi.y;
  }
  bool contains(Vec2 p) const { return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y; }
  Aabb merged(const Aabb& o) const {
    return {{std::min(lo.x, o.lo.x), std::min(lo.y, o.lo.y)},
            {std::max(hi.x, o.hi.x), std::max(hi.y, o.hi.y)}};
  }
};

// Axis-aligned rectangle used for arenas, receptacles and clearance areas.
struct Rect {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }
  Vec2 center() const { return {0.5 * (x_min + x_max), 0.5 * (y_min + y_max)}; }
  bool contains(Vec2 p) const { return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max; }
  bool strictly_contains(Vec2 p) const {
    return p.x > x_min && p.x < x_max && p.y > y_min && p.y < y_max;
  }
  Rect inflated(double d) const { return {x_min - d, y_min - d, x_max + d, y_max + d}; }
  friend bool operator==(const Rect&, const Rect&) = default;
};

inline double signed_area(std::span<const Vec2> poly) {
  double a = 0.0;
  for (std::size_t i = 0, n = poly.size(); i < n; ++i) a += cross(poly[i], poly[(i + 1) % n]);
  return 0.5 * a;
}

inline double polygon_area(std::span<const Vec2> poly) { return std::abs(signed_area(poly)); }

inline Vec2 polygon_centroid(std::span<const Vec2> poly) {
  double a = 0.0;
  Vec2 c;
  const Vec2 ref = poly.front();
  for (std::size_t i = 0, n = poly.size(); i < n; ++i) {
    const Vec2 p = poly[i] - ref, q = poly[(i + 1) % n] - ref;
    const double w = cross(p, q);
    a += w;
    c += (p + q) * w;
  }
  return ref + c / (3.0 * a);
}

// Counter-clockwise convex hull (Andrew's monotone chain); collinear points dropped.
inline std::vector<Vec2> convex_hull(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end(), [](Vec2 a, Vec2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  std::vector<Vec2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const Vec2& p : pts) {
    while (k >= 2 && cross(hull[k - 1] - hull[k - 2], p - hull[k - 2]) <= 0.0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

inline bool is_convex_ccw(std::span<const Vec2> poly) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 e0 = poly[(i + 1) % n] - poly[i];
    const Vec2 e1 = poly[(i + 2) % n] - poly[(i + 1) % n];
    if (cross(e0, e1) < 0.0) return false;
  }
  return signed_area(poly) > 0.0;
}

// Inclusive point test for a counter-clockwise convex polygon.
inline bool point_in_convex(std::span<const Vec2> poly, Vec2 p) {
  for (std::size_t i = 0, n = poly.size(); i < n; ++i) {
    if (cross(poly[(i + 1) % n] - poly[i], p - poly[i]) < 0.0) return false;
  }
  return true;
}

inline Aabb bounds_of(std::span<const Vec2> pts) {
  Aabb b{pts.front(), pts.front()};
  for (const Vec2& p : pts) {
    b.lo.x = std::min(b.lo.x, p.x);
    b.lo.y = std::min(b.lo.y, p.y);
    b.hi.x = std::max(b.hi.x, p.x);
    b.hi.y = std::max(b.hi.y, p.y);
  }
  return b;
}

inline Vec2 closest_point_on_segment(Vec2 a, Vec2 b, Vec2 p) {
  const Vec2 ab = b - a;
  const double l2 = length_squared(ab);
  if (l2 == 0.0) return a;
  const double t = std::clamp(dot(p - a, ab) / l2, 0.0, 1.0);
  return a + ab * t;
}

}  // namespace benchpush
