#pragma once

#include <memory>
#include <variant>
#include <vector>

#include "benchpush/body.hpp"
#include "benchpush/env_spec.hpp"
#include "benchpush/grid.hpp"

namespace benchpush {

struct GoalDisc {
  Vec2 center;
  double radius = 0.0;
};

// Ship goal: everything at or beyond y = `y`.
struct GoalLine {
  double y = 0.0;
};

struct Receptacle {
  Rect area;
};

struct ClearanceArea {
  Rect area;
};

using GoalRegion = std::variant<GoalDisc, GoalLine, Receptacle, ClearanceArea>;

/// Static obstacles rasterized on the metric grid plus the task goal.
struct StaticMap {
  Rect arena;
  std::vector<Rect> walls;  // interior static obstacles
  OccupancyGrid grid;
  GoalRegion goal;
};

inline constexpr double kWallThickness = 0.2;

namespace detail {

inline bool goal_cell(const StaticMap& m, const GoalRegion& goal, Vec2 c, double half_extent) {
  return std::visit(
      [&](const auto& g) -> bool {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, GoalDisc>) return length(c - g.center) <= g.radius;
        if constexpr (std::is_same_v<T, GoalLine>) return c.y >= g.y;
        if constexpr (std::is_same_v<T, Receptacle>) return g.area.inflated(-half_extent).contains(c);
        if constexpr (std::is_same_v<T, ClearanceArea>)
          return m.arena.contains(c) && !g.area.inflated(half_extent).strictly_contains(c);
        return false;
      },
      goal);
}

}  // namespace detail

/// Free cells of the goal set for a point (robot) or for an object centroid of
/// the given half-extent: the receptacle shrunk by it, or everything outside
/// the clearance area grown by it.
inline std::vector<Cell> goal_cells(const StaticMap& m, double half_extent = 0.0) {
  std::vector<Cell> out;
  for (int y = 0; y < m.grid.height(); ++y) {
    for (int x = 0; x < m.grid.width(); ++x) {
      const Cell c{x, y};
      if (m.grid.free(c) && detail::goal_cell(m, m.goal, m.grid.center(c), half_extent)) out.push_back(c);
    }
  }
  return out;
}

inline bool robot_at_goal(const StaticMap& m, Vec2 robot_center) {
  if (const auto* d = std::get_if<GoalDisc>(&m.goal)) return length(robot_center - d->center) <= d->radius;
  if (const auto* l = std::get_if<GoalLine>(&m.goal)) return robot_center.y >= l->y;
  return false;
}

// Boxes resting against an arena wall sit within the contact slop of it.
inline constexpr double kContainmentTolerance = 0.005;

// Sub-task predicate: delivered (centroid and all vertices inside the
// receptacle) or cleared (no vertex inside the clearance area).
inline bool object_complete(const StaticMap& m, const Body& body) {
  if (const auto* r = std::get_if<Receptacle>(&m.goal)) {
    if (!r->area.contains(body.pose.position())) return false;
    const Rect loose = r->area.inflated(kContainmentTolerance);
    for (std::size_t k = 0; k < body.parts.size(); ++k)
      for (const Vec2& v : world_vertices(body, k))
        if (!loose.contains(v)) return false;
    return true;
  }
  if (const auto* c = std::get_if<ClearanceArea>(&m.goal)) {
    for (std::size_t k = 0; k < body.parts.size(); ++k)
      for (const Vec2& v : world_vertices(body, k))
        if (c->area.strictly_contains(v)) return false;
    return true;
  }
  return false;
}

struct LayoutStart {
  Pose robot;
  GoalRegion goal;
};

inline std::vector<Rect> maze_walls(MazeLayout layout, double w, double h) {
  switch (layout) {
    case MazeLayout::U:
      return {{0.25 * w, 0.0, 0.75 * w, 0.75 * h}};
    case MazeLayout::S:
      return {{0.0, h / 3.0 - 0.1, 0.75 * w, h / 3.0 + 0.1}, {0.25 * w, 2.0 * h / 3.0 - 0.1, w, 2.0 * h / 3.0 + 0.1}};
    case MazeLayout::Z:
      return {{0.25 * w, h / 3.0 - 0.1, w, h / 3.0 + 0.1}, {0.0, 2.0 * h / 3.0 - 0.1, 0.75 * w, 2.0 * h / 3.0 + 0.1}};
    case MazeLayout::Corridor:
      return {{0.0, 0.0, w, 0.5 * h - 0.8}, {0.0, 0.5 * h + 0.8, w, h}};
    case MazeLayout::Open:
      return {};
  }
  return {};
}

// Fixed start and goal of each maze layout (Open picks both at reset).
inline LayoutStart maze_start(MazeLayout layout, double w, double h, double goal_radius) {
  const double m = 0.125 * w;
  switch (layout) {
    case MazeLayout::U:
      return {{m, m, kPi / 2.0}, GoalDisc{{w - m, m}, goal_radius}};
    case MazeLayout::S:
      return {{m, m, 0.0}, GoalDisc{{w - m, h - m}, goal_radius}};
    case MazeLayout::Z:
      return {{w - m, m, kPi}, GoalDisc{{m, h - m}, goal_radius}};
    case MazeLayout::Corridor:
      return {{m, 0.5 * h, 0.0}, GoalDisc{{w - m, 0.5 * h}, goal_radius}};
    case MazeLayout::Open:
      return {{0.5 * w, 0.5 * h, 0.0}, GoalDisc{{w - m, h - m}, goal_radius}};
  }
  return {};
}

inline std::vector<Rect> manipulation_walls(const EnvSpec& s) {
  if (!s.static_obstacles) return {};
  const double w = s.arena_width, h = s.arena_height, g = s.goal_area_size;
  if (s.kind == EnvKind::BoxDelivery) {
    // Square columns away from the receptacle corner.
    const double c = 0.15;
    return {{0.25 * w - c, 0.65 * h - c, 0.25 * w + c, 0.65 * h + c},
            {0.5 * w - c, 0.3 * h - c, 0.5 * w + c, 0.3 * h + c},
            {0.7 * w - c, 0.52 * h - c, 0.7 * w + c, 0.52 * h + c}};
  }
  // Walls hugging the left and bottom edges of the clearance area.
  const Rect area{0.5 * (w - g), 0.5 * (h - g), 0.5 * (w + g), 0.5 * (h + g)};
  return {{area.x_min - 0.5, area.y_min, area.x_min - 0.4, area.y_max},
          {area.x_min, area.y_min - 0.5, area.x_max, area.y_min - 0.4}};
}

inline GoalRegion manipulation_goal(const EnvSpec& s) {
  const double w = s.arena_width, h = s.arena_height, g = s.goal_area_size;
  if (s.kind == EnvKind::BoxDelivery) return Receptacle{{w - g, h - g, w, h}};
  return ClearanceArea{{0.5 * (w - g), 0.5 * (h - g), 0.5 * (w + g), 0.5 * (h + g)}};
}

inline void validate_map(const StaticMap& m) {
  if (goal_cells(m).empty()) throw Error(ErrorKind::InvalidSpec, "goal region is empty or inside static obstacles");
}

/// Static map for a spec. For the Open maze the goal is a placeholder until reset.
inline StaticMap build_static_map(const EnvSpec& s) {
  StaticMap m;
  m.arena = {0.0, 0.0, s.arena_width, s.arena_height};
  switch (s.kind) {
    case EnvKind::Maze:
      m.walls = maze_walls(s.layout, s.arena_width, s.arena_height);
      m.goal = maze_start(s.layout, s.arena_width, s.arena_height, s.goal_radius).goal;
      break;
    case EnvKind::ShipIce:
      m.goal = GoalLine{s.goal_line};
      break;
    case EnvKind::BoxDelivery:
    case EnvKind::AreaClearing:
      m.walls = manipulation_walls(s);
      m.goal = manipulation_goal(s);
      break;
  }
  m.grid = OccupancyGrid::covering(m.arena, s.map_resolution);
  for (const Rect& r : m.walls) m.grid.fill_rect(r);
  validate_map(m);
  return m;
}

// Boundary walls just outside the arena plus the interior walls.
inline std::vector<Rect> wall_rects(const StaticMap& m) {
  const Rect& a = m.arena;
  const double t = kWallThickness;
  std::vector<Rect> out = {{a.x_min - t, a.y_min - t, a.x_max + t, a.y_min},
                           {a.x_min - t, a.y_max, a.x_max + t, a.y_max + t},
                           {a.x_min - t, a.y_min, a.x_min, a.y_max},
                           {a.x_max, a.y_min, a.x_max + t, a.y_max}};
  out.insert(out.end(), m.walls.begin(), m.walls.end());
  return out;
}

}  // namespace benchpush
