#pragma once

#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "benchpush/body.hpp"

namespace benchpush {

inline constexpr double kArcEpsilon = 1e-6;  // rad/s; below this the arc is a straight line

/// Exact unicycle integration over `dt` at constant forward speed and turn rate.
inline Pose integrate_unicycle(const Pose& pose, double forward, double omega, double dt) {
  Pose out = pose;
  if (std::abs(omega) < kArcEpsilon) {
    out.x += forward * std::cos(pose.theta) * dt;
    out.y += forward * std::sin(pose.theta) * dt;
  } else {
    const double r = forward / omega;
    const double th = pose.theta + omega * dt;
    out.x += r * (std::sin(th) - std::sin(pose.theta));
    out.y += r * (std::cos(pose.theta) - std::cos(th));
    out.theta = th;
  }
  out.theta = wrap_angle(out.theta);
  return out;
}

struct UnicycleCommand {
  double forward = 0.0;
  double omega = 0.0;
};

// Differential drive: wheel surface speeds (m/s) and track width (m).
inline UnicycleCommand wheels_to_unicycle(double left, double right, double track_width) {
  return {0.5 * (left + right), (right - left) / track_width};
}

enum class Bumper { Collector, Pusher, Navigation };

inline std::string_view to_string(Bumper b) {
  switch (b) {
    case Bumper::Collector: return "collector";
    case Bumper::Pusher: return "pusher";
    case Bumper::Navigation: return "navigation";
  }
  return "pusher";
}

// TurtleBot3 Burger footprint.
inline constexpr double kChassisRadius = 0.105;
inline constexpr double kTrackWidth = 0.16;
inline constexpr double kRobotMass = 1.0;

namespace detail {

inline constexpr int kBumperSegments = 8;
inline constexpr double kBumperHalfWidth = 0.11;
inline constexpr double kBumperThickness = 0.02;
inline constexpr double kBumperBase = 0.10;
inline constexpr double kBumperSag = 0.04;

}  // namespace detail

/// Front edge of the bumper as an 8-segment polyline (body frame, +x forward).
inline std::vector<Vec2> bumper_polyline(Bumper kind) {
  using namespace detail;
  std::vector<Vec2> pts;
  for (int i = 0; i <= kBumperSegments; ++i) {
    const double y = -kBumperHalfWidth + 2.0 * kBumperHalfWidth * i / kBumperSegments;
    const double s = 1.0 - (y / kBumperHalfWidth) * (y / kBumperHalfWidth);
    double x = kBumperBase + 0.5 * kBumperSag;
    if (kind == Bumper::Navigation) x = kBumperBase + kBumperSag * s;
    if (kind == Bumper::Collector) x = kBumperBase + kBumperSag * (1.0 - s);
    pts.push_back({x, y});
  }
  return pts;
}

/// Convex parts covering the bumper. The inward-curved collector is split into
/// three parts; the other two bumpers are convex as a whole.
inline std::vector<Shape> bumper_parts(Bumper kind) {
  using namespace detail;
  const std::vector<Vec2> front = bumper_polyline(kind);
  auto part = [&](std::size_t first, std::size_t last) {
    std::vector<Vec2> pts;
    for (std::size_t i = first; i <= last; ++i) {
      pts.push_back(front[i]);
      pts.push_back(front[i] - Vec2{kBumperThickness, 0.0});
    }
    return Shape::polygon(convex_hull(pts));
  };
  if (kind == Bumper::Collector) return {part(0, 3), part(3, 5), part(5, 8)};
  return {part(0, front.size() - 1)};
}

inline Body make_robot(int id, Pose pose, Bumper bumper, double mass = kRobotMass) {
  Body b;
  b.id = id;
  b.role = BodyRole::Robot;
  b.pose = pose;
  b.mass = mass;
  b.inertia = 0.5 * mass * kChassisRadius * kChassisRadius;
  b.parts.push_back(Shape::disc(kChassisRadius));
  for (Shape& s : bumper_parts(bumper)) b.parts.push_back(std::move(s));
  b.drive = Drive{};
  return b;
}

inline constexpr double kShipLength = 1.0;
inline constexpr double kShipBeam = 0.4;

// Model-scale ship hull with a pointed bow along +x.
inline Body make_ship(int id, Pose pose, double mass) {
  const double half_l = 0.5 * kShipLength, half_b = 0.5 * kShipBeam;
  auto hull = centered_polygon({{-half_l, -half_b}, {0.25 * kShipLength, -half_b}, {half_l, 0.0},
                                {0.25 * kShipLength, half_b}, {-half_l, half_b}});
  Body b = make_dynamic_body(id, BodyRole::Robot, std::move(hull.shape), pose, mass);
  b.drive = Drive{};
  return b;
}

}  // namespace benchpush
