#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "benchpush/shape.hpp"

namespace benchpush {

enum class BodyRole { Robot, Box, WheeledBox, IceFloe, Wall };

inline std::string_view to_string(BodyRole role) {
  switch (role) {
    case BodyRole::Robot: return "robot";
    case BodyRole::Box: return "box";
    case BodyRole::WheeledBox: return "wheeled_box";
    case BodyRole::IceFloe: return "ice_floe";
    case BodyRole::Wall: return "wall";
  }
  return "unknown";
}

inline bool is_movable_object(BodyRole role) {
  return role == BodyRole::Box || role == BodyRole::WheeledBox || role == BodyRole::IceFloe;
}

struct FrictionClass {
  // Ground kinetic friction; unset means the world default (scaled for wheeled boxes).
  std::optional<double> ground_mu;
  double restitution = 0.0;
};

// Commanded unicycle velocity, re-applied at the start of every physics step.
struct Drive {
  double forward = 0.0;  // m/s
  double omega = 0.0;    // rad/s
};

struct Body {
  int id = -1;
  BodyRole role = BodyRole::Box;
  std::vector<Shape> parts;
  Pose pose;
  Vec2 velocity;
  double angular_velocity = 0.0;
  double mass = 0.0;     // 0 for static bodies
  double inertia = 0.0;  // about the body origin
  bool is_static = false;
  FrictionClass friction;
  std::optional<Drive> drive;

  double inv_mass() const { return is_static || mass <= 0.0 ? 0.0 : 1.0 / mass; }
  double inv_inertia() const { return is_static || inertia <= 0.0 ? 0.0 : 1.0 / inertia; }
  double kinetic_energy() const {
    if (is_static) return 0.0;
    return 0.5 * mass * length_squared(velocity) + 0.5 * inertia * angular_velocity * angular_velocity;
  }
  double bounding_radius() const {
    double r = 0.0;
    for (const Shape& s : parts) r = std::max(r, s.bounding_radius());
    return r;
  }
};

// Dynamic body whose single part is centered at the origin; inertia from uniform density.
inline Body make_dynamic_body(int id, BodyRole role, Shape shape, Pose pose, double mass) {
  Body b;
  b.id = id;
  b.role = role;
  b.mass = mass;
  b.inertia = mass * shape.area_moment() / shape.area();
  b.parts.push_back(std::move(shape));
  b.pose = pose;
  return b;
}

inline Body make_static_body(int id, Shape shape, Pose pose) {
  Body b;
  b.id = id;
  b.role = BodyRole::Wall;
  b.is_static = true;
  b.parts.push_back(std::move(shape));
  b.pose = pose;
  return b;
}

// Axis-aligned static wall covering `r`.
inline Body make_wall(int id, const Rect& r) {
  return make_static_body(id, Shape::box(r.width(), r.height()), Pose{r.center().x, r.center().y, 0.0});
}

inline std::vector<Vec2> world_vertices(const Body& body, std::size_t part = 0) {
  std::vector<Vec2> out;
  const Shape& s = body.parts.at(part);
  if (s.is_polygon()) {
    for (const Vec2& v : s.vertices()) out.push_back(body.pose.to_world(v));
  } else {
    constexpr int kSegments = 16;
    for (int i = 0; i < kSegments; ++i) {
      const double a = 2.0 * kPi * i / kSegments;
      out.push_back(body.pose.to_world(s.center() + Vec2{s.radius() * std::cos(a), s.radius() * std::sin(a)}));
    }
  }
  return out;
}

}  // namespace benchpush
