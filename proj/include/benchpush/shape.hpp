#pragma once

#include <string>
#include <vector>

#include "benchpush/error.hpp"
#include "benchpush/geometry.hpp"

namespace benchpush {

inline constexpr std::size_t kMinPolygonVertices = 3;
inline constexpr std::size_t kMaxPolygonVertices = 32;

/// Convex polygon or disc expressed in its body frame (meters).
///
/// Polygons are stored counter-clockwise. Single-part bodies built through
/// `centered_polygon` have their area centroid at the body-frame origin;
/// parts of compound bodies (robot chassis + bumper) keep arbitrary offsets.
class Shape {
 public:
  enum class Kind { Polygon, Disc };

  static Shape polygon(std::vector<Vec2> vertices) {
    if (vertices.size() < kMinPolygonVertices || vertices.size() > kMaxPolygonVertices) {
      throw Error(ErrorKind::InvalidShape,
                  "polygon needs 3..32 vertices, got " + std::to_string(vertices.size()));
    }
    if (signed_area(vertices) < 0.0) std::reverse(vertices.begin(), vertices.end());
    if (!(signed_area(vertices) > 1e-12)) throw Error(ErrorKind::InvalidShape, "zero-area polygon");
    if (!is_convex_ccw(vertices)) throw Error(ErrorKind::InvalidShape, "polygon is not convex");
    Shape s;
    s.kind_ = Kind::Polygon;
    s.vertices_ = std::move(vertices);
    s.normals_.resize(s.vertices_.size());
    for (std::size_t i = 0, n = s.vertices_.size(); i < n; ++i) {
      s.normals_[i] = normalized(Vec2{s.vertices_[(i + 1) % n].y - s.vertices_[i].y,
                                      s.vertices_[i].x - s.vertices_[(i + 1) % n].x});
    }
    return s;
  }

  static Shape disc(double radius, Vec2 center = {}) {
    if (!(radius > 0.0)) throw Error(ErrorKind::InvalidShape, "disc radius must be positive");
    Shape s;
    s.kind_ = Kind::Disc;
    s.radius_ = radius;
    s.center_ = center;
    return s;
  }

  static Shape box(double width, double height) {
    const double hx = 0.5 * width, hy = 0.5 * height;
    return polygon({{-hx, -hy}, {hx, -hy}, {hx, hy}, {-hx, hy}});
  }

  Kind kind() const { return kind_; }
  bool is_polygon() const { return kind_ == Kind::Polygon; }
  const std::vector<Vec2>& vertices() const { return vertices_; }
  const std::vector<Vec2>& normals() const { return normals_; }
  double radius() const { return radius_; }
  Vec2 center() const { return center_; }

  double area() const {
    return is_polygon() ? signed_area(vertices_) : kPi * radius_ * radius_;
  }

  Vec2 centroid() const { return is_polygon() ? polygon_centroid(vertices_) : center_; }

  // Second moment of area about the body-frame origin (multiply by density for inertia).
  double area_moment() const {
    if (!is_polygon()) {
      const double a = area();
      return a * (0.5 * radius_ * radius_ + length_squared(center_));
    }
    double num = 0.0;
    for (std::size_t i = 0, n = vertices_.size(); i < n; ++i) {
      const Vec2 p = vertices_[i], q = vertices_[(i + 1) % n];
      num += cross(p, q) * (dot(p, p) + dot(p, q) + dot(q, q));
    }
    return num / 12.0;
  }

  // Largest distance from the body-frame origin to any point of the shape.
  double bounding_radius() const {
    if (!is_polygon()) return length(center_) + radius_;
    double r = 0.0;
    for (const Vec2& v : vertices_) r = std::max(r, length(v));
    return r;
  }

 private:
  Shape() = default;

  Kind kind_ = Kind::Polygon;
  std::vector<Vec2> vertices_;
  std::vector<Vec2> normals_;
  double radius_ = 0.0;
  Vec2 center_;
};

struct CenteredPolygon {
  Shape shape;
  Vec2 offset;  // world/body position of the original centroid
};

// Builds a polygon whose area centroid sits at the origin; `offset` is where the
// centroid was in the input coordinates.
inline CenteredPolygon centered_polygon(std::vector<Vec2> points) {
  const Vec2 c = polygon_centroid(points);
  for (Vec2& p : points) p -= c;
  return {Shape::polygon(std::move(points)), c};
}

/// A shape placed in the world: transformed vertices and normals cached.
struct PlacedShape {
  Shape::Kind kind = Shape::Kind::Polygon;
  std::vector<Vec2> vertices;
  std::vector<Vec2> normals;
  Vec2 center;
  double radius = 0.0;
  Aabb bounds;
};

inline PlacedShape place(const Shape& shape, const Pose& pose) {
  PlacedShape out;
  out.kind = shape.kind();
  if (shape.is_polygon()) {
    const double c = std::cos(pose.theta), s = std::sin(pose.theta);
    out.vertices.reserve(shape.vertices().size());
    out.normals.reserve(shape.vertices().size());
    for (const Vec2& v : shape.vertices()) {
      out.vertices.push_back({pose.x + c * v.x - s * v.y, pose.y + s * v.x + c * v.y});
    }
    for (const Vec2& n : shape.normals()) out.normals.push_back({c * n.x - s * n.y, s * n.x + c * n.y});
    out.bounds = bounds_of(out.vertices);
  } else {
    out.center = pose.to_world(shape.center());
    out.radius = shape.radius();
    out.bounds = {out.center - Vec2{out.radius, out.radius}, out.center + Vec2{out.radius, out.radius}};
  }
  return out;
}

}  // namespace benchpush
