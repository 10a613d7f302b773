#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "benchpush/physics.hpp"
#include "benchpush/static_map.hpp"

namespace benchpush {

/// C x H x W tensor, row-major per channel, values in [0, 1]. Row 0 is the
/// far edge ahead of the robot (or +y for unrotated windows).
struct Observation {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<float> data;
  std::vector<std::string> tags;

  float at(int c, int r, int col) const {
    return data[(static_cast<std::size_t>(c) * height + r) * width + col];
  }
  float& at(int c, int r, int col) { return data[(static_cast<std::size_t>(c) * height + r) * width + col]; }
  int channel_index(const std::string& tag) const {
    for (std::size_t i = 0; i < tags.size(); ++i) if (tags[i] == tag) return static_cast<int>(i);
    return -1;
  }
  friend bool operator==(const Observation&, const Observation&) = default;
};

inline std::vector<std::string> channel_tags(EnvKind kind) {
  switch (kind) {
    case EnvKind::Maze: return {"static_occupancy", "movable_occupancy", "footprint", "goal_dt"};
    case EnvKind::ShipIce: return {"static_occupancy", "movable_occupancy", "footprint", "goal_dt", "heading"};
    case EnvKind::BoxDelivery:
    case EnvKind::AreaClearing: return {"occupancy", "footprint", "egocentric_dt", "goal_dt"};
  }
  return {};
}

/// Everything the renderer reads. Kept explicit so tests can feed translated
/// or rotated copies of a scene.
struct RenderInputs {
  const World* world = nullptr;
  int robot_id = 0;
  const OccupancyGrid* static_grid = nullptr;
  const DistanceField* goal_field = nullptr;
  double goal_field_max = 0.0;  // normalizer: max finite value over the full map
};

namespace detail {

struct WindowFrame {
  Vec2 origin;   // robot center
  Vec2 forward;  // world direction of "up" in the window
  Vec2 right;    // world direction of increasing column
  double resolution = 0.0;
  int size = 0;

  // Cell center in window-continuous coordinates (col, row) maps to integers.
  Vec2 to_window(Vec2 world) const {
    const Vec2 d = world - origin;
    const double f = dot(d, forward), q = dot(d, right);
    return {q / resolution + 0.5 * size - 0.5, 0.5 * size - 0.5 - f / resolution};
  }
  Vec2 to_world(int row, int col) const {
    const double f = (0.5 * size - row - 0.5) * resolution;
    const double q = (col - 0.5 * size + 0.5) * resolution;
    return origin + forward * f + right * q;
  }
};

inline bool inside_convex_any_orientation(const std::vector<Vec2>& poly, Vec2 p) {
  bool pos = false, neg = false;
  for (std::size_t i = 0, n = poly.size(); i < n; ++i) {
    const double c = cross(poly[(i + 1) % n] - poly[i], p - poly[i]);
    if (c > 0.0) pos = true;
    if (c < 0.0) neg = true;
    if (pos && neg) return false;
  }
  return true;
}

template <typename Fn>
void rasterize_body(const Body& body, const WindowFrame& frame, Fn&& mark) {
  const int n = frame.size;
  for (const Shape& part : body.parts) {
    if (part.is_polygon()) {
      std::vector<Vec2> poly;
      for (const Vec2& v : part.vertices()) poly.push_back(frame.to_window(body.pose.to_world(v)));
      const Aabb b = bounds_of(poly);
      const int c0 = std::max(0, static_cast<int>(std::ceil(b.lo.x))), c1 = std::min(n - 1, static_cast<int>(std::floor(b.hi.x)));
      const int r0 = std::max(0, static_cast<int>(std::ceil(b.lo.y))), r1 = std::min(n - 1, static_cast<int>(std::floor(b.hi.y)));
      for (int r = r0; r <= r1; ++r)
        for (int c = c0; c <= c1; ++c)
          if (inside_convex_any_orientation(poly, {static_cast<double>(c), static_cast<double>(r)})) mark(r, c);
    } else {
      const Vec2 center = frame.to_window(body.pose.to_world(part.center()));
      const double rad = part.radius() / frame.resolution;
      const int c0 = std::max(0, static_cast<int>(std::ceil(center.x - rad))), c1 = std::min(n - 1, static_cast<int>(std::floor(center.x + rad)));
      const int r0 = std::max(0, static_cast<int>(std::ceil(center.y - rad))), r1 = std::min(n - 1, static_cast<int>(std::floor(center.y + rad)));
      for (int r = r0; r <= r1; ++r)
        for (int c = c0; c <= c1; ++c)
          if (length_squared(Vec2{c - center.x, r - center.y}) <= rad * rad) mark(r, c);
    }
  }
}

// Bresenham line from (r0, c0) toward (r1, c1), clipped to the window.
template <typename Fn>
void bresenham(int r0, int c0, int r1, int c1, int size, Fn&& mark) {
  const int dr = std::abs(r1 - r0), dc = std::abs(c1 - c0);
  const int sr = r0 < r1 ? 1 : -1, sc = c0 < c1 ? 1 : -1;
  int err = dc - dr;
  int r = r0, c = c0;
  while (r >= 0 && c >= 0 && r < size && c < size) {
    mark(r, c);
    if (r == r1 && c == c1) break;
    const int e2 = 2 * err;
    if (e2 > -dr) { err -= dr; c += sc; }
    if (e2 < dc) { err += dc; r += sr; }
  }
}

}  // namespace detail

/// Renders the robot-centered multi-channel observation for `kind`.
inline Observation render_observation(const RenderInputs& in, EnvKind kind, const ObsConfig& cfg) {
  const Body* robot = in.world->find(in.robot_id);
  if (!robot) throw Error(ErrorKind::InvalidSpec, "render_observation: robot body not found");
  const int n = cfg.size;
  const double alpha = cfg.rotate ? robot->pose.theta : kPi / 2.0;
  detail::WindowFrame frame{robot->pose.position(), unit_from_angle(alpha),
                            Vec2{std::sin(alpha), -std::cos(alpha)}, cfg.resolution, n};

  Observation obs;
  obs.tags = channel_tags(kind);
  obs.channels = static_cast<int>(obs.tags.size());
  obs.height = n;
  obs.width = n;
  obs.data.assign(static_cast<std::size_t>(obs.channels) * n * n, 0.0f);

  const bool shared_occupancy = task_class(kind) == TaskClass::Manipulation;
  const int ch_static = 0;
  const int ch_movable = shared_occupancy ? 0 : 1;
  const int ch_footprint = shared_occupancy ? 1 : 2;
  const int ch_goal = shared_occupancy ? 3 : 3;
  const float movable_value = shared_occupancy ? 0.5f : 1.0f;
  const double norm = in.goal_field_max > 0.0 ? in.goal_field_max : 1.0;
  const double half_diagonal = cfg.resolution * 0.5 * n * std::sqrt(2.0);

  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const Vec2 w = frame.to_world(r, c);
      if (in.static_grid->occupied_at(w)) obs.at(ch_static, r, c) = 1.0f;
      const double d = in.goal_field ? in.goal_field->nearest(w) : kUnreachable;
      obs.at(ch_goal, r, c) = std::isfinite(d) ? static_cast<float>(std::min(1.0, d / norm)) : 1.0f;
      if (shared_occupancy) {
        const double f = (0.5 * n - r - 0.5) * cfg.resolution, q = (c - 0.5 * n + 0.5) * cfg.resolution;
        obs.at(2, r, c) = static_cast<float>(std::sqrt(f * f + q * q) / half_diagonal);
      }
    }
  }

  for (const Body& b : in.world->bodies) {
    if (!is_movable_object(b.role)) continue;
    if (length(b.pose.position() - robot->pose.position()) - b.bounding_radius() > half_diagonal) continue;
    detail::rasterize_body(b, frame, [&](int r, int c) {
      float& v = obs.at(ch_movable, r, c);
      if (v < movable_value) v = movable_value;
    });
  }
  detail::rasterize_body(*robot, frame, [&](int r, int c) { obs.at(ch_footprint, r, c) = 1.0f; });

  if (kind == EnvKind::ShipIce) {
    const Vec2 h = robot->pose.heading();
    const double f = dot(h, frame.forward), q = dot(h, frame.right);
    const int r0 = n / 2, c0 = n / 2;
    const double len = 2.0 * n;
    detail::bresenham(r0, c0, r0 - static_cast<int>(std::lround(f * len)), c0 + static_cast<int>(std::lround(q * len)), n,
                      [&](int r, int c) { obs.at(4, r, c) = 1.0f; });
  }
  return obs;
}

}  // namespace benchpush
