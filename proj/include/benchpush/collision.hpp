#pragma once

#include <array>
#include <limits>
#include <optional>

#include "benchpush/shape.hpp"

namespace benchpush {

struct Contact {
  int body_a = -1;
  int body_b = -1;
  Vec2 point;
  Vec2 normal;  // unit, pointing from A to B
  double penetration = 0.0;
};

struct ManifoldPoint {
  Vec2 point;
  double penetration = 0.0;
};

// Up to two contact points sharing one normal (A -> B). `depth` is the
// minimum-penetration-axis overlap.
struct Manifold {
  Vec2 normal;
  double depth = 0.0;
  std::array<ManifoldPoint, 2> points{};
  int count = 0;
};

namespace detail {

struct AxisQuery {
  double separation = -std::numeric_limits<double>::infinity();
  std::size_t edge = 0;
};

// Largest separation of `b` along the edge normals of `a`.
inline AxisQuery max_separation(const PlacedShape& a, const PlacedShape& b) {
  AxisQuery best;
  for (std::size_t i = 0; i < a.vertices.size(); ++i) {
    const Vec2 n = a.normals[i], v = a.vertices[i];
    double s = std::numeric_limits<double>::infinity();
    for (const Vec2& w : b.vertices) s = std::min(s, dot(n, w - v));
    if (s > best.separation) best = {s, i};
  }
  return best;
}

inline Manifold polygon_polygon(const PlacedShape& a, const PlacedShape& b, bool& hit) {
  hit = false;
  Manifold m;
  const AxisQuery qa = max_separation(a, b);
  if (qa.separation >= 0.0) return m;
  const AxisQuery qb = max_separation(b, a);
  if (qb.separation >= 0.0) return m;

  // Prefer A as the reference face unless B's axis is clearly better; the
  // tolerance keeps the choice stable between nearly equal axes.
  constexpr double kRelTol = 1e-9;
  const bool flip = qb.separation > qa.separation + kRelTol;
  const PlacedShape& ref = flip ? b : a;
  const PlacedShape& inc = flip ? a : b;
  const std::size_t ref_edge = flip ? qb.edge : qa.edge;
  const Vec2 n = ref.normals[ref_edge];

  std::size_t inc_edge = 0;
  double min_dot = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < inc.normals.size(); ++i) {
    const double d = dot(n, inc.normals[i]);
    if (d < min_dot) { min_dot = d; inc_edge = i; }
  }
  std::array<Vec2, 2> seg = {inc.vertices[inc_edge], inc.vertices[(inc_edge + 1) % inc.vertices.size()]};

  const Vec2 v1 = ref.vertices[ref_edge];
  const Vec2 v2 = ref.vertices[(ref_edge + 1) % ref.vertices.size()];
  const Vec2 tangent = normalized(v2 - v1);

  auto clip = [](std::array<Vec2, 2>& s, Vec2 dir, double offset) {
    const double d0 = dot(dir, s[0]) - offset, d1 = dot(dir, s[1]) - offset;
    if (d0 > 0.0 && d1 > 0.0) return false;
    if (d0 > 0.0) s[0] = s[0] + (s[1] - s[0]) * (d0 / (d0 - d1));
    else if (d1 > 0.0) s[1] = s[1] + (s[0] - s[1]) * (d1 / (d1 - d0));
    return true;
  };
  if (!clip(seg, -tangent, -dot(tangent, v1)) || !clip(seg, tangent, dot(tangent, v2))) {
    // Degenerate sliver: fall back to the deepest incident vertex.
    seg = {inc.vertices[inc_edge], inc.vertices[inc_edge]};
  }

  m.normal = flip ? -n : n;
  m.depth = -std::max(qa.separation, qb.separation);
  for (const Vec2& p : seg) {
    const double sep = dot(n, p - v1);
    if (sep <= 0.0 && m.count < 2) {
      if (m.count == 1 && m.points[0].point == p) continue;
      m.points[m.count++] = {p - n * (0.5 * sep), -sep};
    }
  }
  if (m.count == 0) {
    // Clipping removed every point; keep the deepest incident vertex instead.
    double deepest = 0.0;
    Vec2 best = inc.vertices[0];
    for (const Vec2& w : inc.vertices) {
      const double sep = dot(n, w - v1);
      if (sep < deepest) { deepest = sep; best = w; }
    }
    m.points[m.count++] = {best - n * (0.5 * deepest), -deepest};
  }
  hit = true;
  return m;
}

// Normal points from the polygon toward the disc.
inline Manifold polygon_disc(const PlacedShape& poly, const PlacedShape& disc, bool& hit) {
  hit = false;
  Manifold m;
  const Vec2 c = disc.center;
  const double r = disc.radius;
  double sep = -std::numeric_limits<double>::infinity();
  std::size_t face = 0;
  const std::size_t n = poly.vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double s = dot(poly.normals[i], c - poly.vertices[i]);
    if (s > r) return m;
    if (s > sep) { sep = s; face = i; }
  }
  const Vec2 v1 = poly.vertices[face], v2 = poly.vertices[(face + 1) % n];
  if (sep <= 0.0) {
    // Center inside the polygon: push out along the nearest face.
    m.normal = poly.normals[face];
    m.depth = r - sep;
    m.points[0] = {c - m.normal * (0.5 * (r + sep)), m.depth};
    m.count = 1;
    hit = true;
    return m;
  }
  const Vec2 q = closest_point_on_segment(v1, v2, c);
  const Vec2 d = c - q;
  const double dist = length(d);
  if (dist >= r) return m;
  m.normal = dist > 0.0 ? d / dist : poly.normals[face];
  m.depth = r - dist;
  m.points[0] = {q + m.normal * (0.5 * (dist - r)), m.depth};
  m.count = 1;
  hit = true;
  return m;
}

inline Manifold disc_disc(const PlacedShape& a, const PlacedShape& b, bool& hit) {
  hit = false;
  Manifold m;
  const Vec2 d = b.center - a.center;
  const double dist = length(d);
  const double r = a.radius + b.radius;
  if (dist >= r) return m;
  m.normal = dist > 0.0 ? d / dist : Vec2{1.0, 0.0};
  m.depth = r - dist;
  m.points[0] = {a.center + m.normal * (a.radius - 0.5 * m.depth), m.depth};
  m.count = 1;
  hit = true;
  return m;
}

}  // namespace detail

/// Narrow-phase test between two placed convex shapes. Returns a manifold whose
/// normal points from `a` to `b`, or nothing when the shapes do not overlap.
inline std::optional<Manifold> collide(const PlacedShape& a, const PlacedShape& b) {
  if (!a.bounds.overlaps(b.bounds)) return std::nullopt;
  bool hit = false;
  Manifold m;
  const bool pa = a.kind == Shape::Kind::Polygon, pb = b.kind == Shape::Kind::Polygon;
  if (pa && pb) {
    m = detail::polygon_polygon(a, b, hit);
  } else if (pa) {
    m = detail::polygon_disc(a, b, hit);
  } else if (pb) {
    m = detail::polygon_disc(b, a, hit);
    m.normal = -m.normal;
  } else {
    m = detail::disc_disc(a, b, hit);
  }
  if (!hit) return std::nullopt;
  return m;
}

/// Separating-axis test between two shapes at the given poses. The returned
/// contact carries the minimum-penetration axis; its point is the mean of the
/// manifold points.
inline std::optional<Contact> collide_convex(const Shape& a, const Pose& pose_a, const Shape& b,
                                             const Pose& pose_b) {
  const auto m = collide(place(a, pose_a), place(b, pose_b));
  if (!m) return std::nullopt;
  Contact c;
  c.normal = m->normal;
  c.penetration = m->depth;
  for (int i = 0; i < m->count; ++i) c.point += m->points[i].point;
  c.point = c.point / static_cast<double>(m->count);
  return c;
}

}  // namespace benchpush
