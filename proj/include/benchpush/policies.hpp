#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "benchpush/env.hpp"
#include "benchpush/grid.hpp"

namespace benchpush {

/// Environment-agnostic policy template. `act` may read the environment's
/// privileged state; learned agents only use the observation.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  virtual bool supports(ActionMode mode) const = 0;
  virtual bool needs_observation() const { return false; }
  virtual void reset(const Environment& env, std::uint64_t seed) = 0;
  virtual Action act(const Observation& obs, const Environment& env) = 0;
};

// ---------------------------------------------------------------------------
// Shared helpers

namespace detail {

// Unicycle command to the env's action mode (wheels are scaled to the limit).
inline Action drive_action(const EnvSpec& spec, double omega) {
  omega = std::clamp(omega, -spec.omega_max, spec.omega_max);
  if (spec.action_mode == ActionMode::WheelVelocities) {
    const double v = spec.forward_speed;
    double l = v - 0.5 * omega * kTrackWidth, r = v + 0.5 * omega * kTrackWidth;
    const double m = std::max(std::abs(l), std::abs(r));
    if (m > spec.max_wheel_speed) {
      l *= spec.max_wheel_speed / m;
      r *= spec.max_wheel_speed / m;
    }
    return Action::wheels(l, r);
  }
  return Action::angular(omega);
}

// Turn rate that removes `error` within one action step.
inline double steer_to(const EnvSpec& spec, double error) {
  return std::clamp(wrap_angle(error) / spec.step_duration, -spec.omega_max, spec.omega_max);
}

// Static obstacles rasterized on a coarse grid and grown by `inflate`.
inline OccupancyGrid planning_grid(const StaticMap& map, double resolution, double inflate) {
  OccupancyGrid g = OccupancyGrid::covering(map.arena, resolution);
  for (const Rect& r : map.walls) g.fill_rect(r);
  return inflate > 0.0 ? g.inflated(inflate) : g;
}

inline std::vector<Cell> planning_goal_cells(const StaticMap& map, const OccupancyGrid& g, double half_extent) {
  std::vector<Cell> out;
  for (int y = 0; y < g.height(); ++y)
    for (int x = 0; x < g.width(); ++x)
      if (g.free({x, y}) && goal_cell(map, map.goal, g.center({x, y}), half_extent)) out.push_back({x, y});
  return out;
}

inline double point_polygon_distance(const std::vector<Vec2>& poly, Vec2 p) {
  if (point_in_convex(poly, p)) return 0.0;
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0, n = poly.size(); i < n; ++i)
    d = std::min(d, length(closest_point_on_segment(poly[i], poly[(i + 1) % n], p) - p));
  return d;
}

// Aim point: the farthest point of `path` within `lookahead` that is visible from `from`.
inline Vec2 aim_point(const OccupancyGrid& g, const std::vector<Vec2>& path, Vec2 from, double lookahead) {
  Vec2 aim = path.empty() ? from : path.front();
  double travelled = 0.0;
  for (std::size_t i = 1; i < path.size(); ++i) {
    travelled += length(path[i] - path[i - 1]);
    if (travelled > lookahead) break;
    if (!line_of_sight(g, from, path[i])) break;
    aim = path[i];
  }
  return aim;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Teleoperation adapter

enum KeyBits : int { kKeyUp = 1, kKeyDown = 2, kKeyLeft = 4, kKeyRight = 8 };

/// Latest operator input: a key bitmask or an analog value.
struct TeleopCommand {
  int keys = 0;
  std::optional<double> omega;    // analog turn rate
  std::optional<double> heading;  // analog heading (world frame)
  std::optional<std::pair<double, double>> wheels;
};

/// Maps operator input to an action. Returns nothing when the input asks for
/// no motion in heading mode (a heading step always moves).
inline std::optional<Action> teleop_action(const TeleopCommand& cmd, const EnvSpec& spec) {
  const int dx = ((cmd.keys & kKeyRight) ? 1 : 0) - ((cmd.keys & kKeyLeft) ? 1 : 0);
  const int dy = ((cmd.keys & kKeyUp) ? 1 : 0) - ((cmd.keys & kKeyDown) ? 1 : 0);
  switch (spec.action_mode) {
    case ActionMode::AngularVelocity:
      if (cmd.omega) return Action::angular(std::clamp(*cmd.omega, -spec.omega_max, spec.omega_max));
      return Action::angular(-dx * spec.omega_max);
    case ActionMode::HeadingStep:
      if (cmd.heading) return Action::heading_to(wrap_angle(*cmd.heading));
      if (dx == 0 && dy == 0) return std::nullopt;
      // Screen up is world +y.
      return Action::heading_to(std::atan2(static_cast<double>(dy), static_cast<double>(dx)));
    case ActionMode::WheelVelocities: {
      if (cmd.wheels) return Action::wheels(cmd.wheels->first, cmd.wheels->second);
      const double m = spec.max_wheel_speed;
      const double l = std::clamp(dy * m + dx * m, -m, m), r = std::clamp(dy * m - dx * m, -m, m);
      return Action::wheels(l, r);
    }
  }
  return std::nullopt;
}

class TeleopPolicy : public Policy {
 public:
  std::string name() const override { return "teleop"; }
  bool supports(ActionMode) const override { return true; }
  void reset(const Environment&, std::uint64_t) override { cmd_ = {}; }
  void set_command(const TeleopCommand& c) { cmd_ = c; }
  Action act(const Observation&, const Environment& env) override {
    if (auto a = teleop_action(cmd_, env.spec())) return *a;
    return Action::heading_to(env.robot().pose.theta);
  }

 private:
  TeleopCommand cmd_;
};

// ---------------------------------------------------------------------------
// Idle: zero command (heading mode keeps the current heading).

class IdlePolicy : public Policy {
 public:
  std::string name() const override { return "idle"; }
  bool supports(ActionMode) const override { return true; }
  void reset(const Environment&, std::uint64_t) override {}
  Action act(const Observation&, const Environment& env) override {
    switch (env.action_mode()) {
      case ActionMode::AngularVelocity: return Action::angular(0.0);
      case ActionMode::HeadingStep: return Action::heading_to(env.robot().pose.theta);
      case ActionMode::WheelVelocities: return Action::wheels(0.0, 0.0);
    }
    return {};
  }
};

// ---------------------------------------------------------------------------
// Goal-DT follower: steers along the descent path of the goal distance field.

class DtFollowerPolicy : public Policy {
 public:
  static constexpr double kResolution = 0.05;
  static constexpr double kLookahead = 0.6;

  std::string name() const override { return "dt_follower"; }
  bool supports(ActionMode m) const override { return m != ActionMode::HeadingStep; }

  void reset(const Environment& env, std::uint64_t) override {
    const StaticMap& map = env.static_map();
    const double inflate = env.kind() == EnvKind::ShipIce ? 0.3 : 0.18;
    grid_ = detail::planning_grid(map, kResolution, inflate);
    std::vector<Cell> goals = detail::planning_goal_cells(map, grid_, 0.0);
    if (goals.empty()) {
      grid_ = detail::planning_grid(map, kResolution, 0.0);
      goals = detail::planning_goal_cells(map, grid_, 0.0);
    }
    field_ = geodesic_distance_field(grid_, goals);
  }

  Action act(const Observation&, const Environment& env) override {
    const Pose pose = env.robot().pose;
    Cell c = grid_.cell_of(pose.position());
    if (!std::isfinite(field_.at(c))) c = nearest_reachable(c);
    const std::vector<Vec2> path = descent_path(grid_, field_, c, 64);
    if (path.empty()) return detail::drive_action(env.spec(), 0.0);
    Vec2 aim = detail::aim_point(grid_, path, pose.position(), kLookahead);
    if (length(aim - pose.position()) < 1e-6) aim = path.back();
    if (length(aim - pose.position()) < 1e-6) return detail::drive_action(env.spec(), 0.0);
    const double desired = std::atan2(aim.y - pose.y, aim.x - pose.x);
    return detail::drive_action(env.spec(), detail::steer_to(env.spec(), desired - pose.theta));
  }

 private:
  Cell nearest_reachable(Cell c) const {
    for (int r = 1; r < 20; ++r)
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx)
          if (std::isfinite(field_.at({c.x + dx, c.y + dy}))) return {c.x + dx, c.y + dy};
    return c;
  }

  OccupancyGrid grid_;
  DistanceField field_;
};

// ---------------------------------------------------------------------------
// Kinodynamic RRT

struct RrtProblem {
  const OccupancyGrid* grid = nullptr;          // robot-center free space
  std::vector<std::vector<Vec2>> obstacles;     // movable outlines to avoid (world frame)
  double clearance = 0.16;                      // robot radius kept from movables
  Pose start;
  Vec2 goal_sample;
  std::function<bool(Vec2)> in_goal;
  Rect bounds;
  double forward_speed = 0.2;
  double omega_max = 2.0;
  double duration = 0.25;
  int max_nodes = 20000;
  int max_iterations = 60000;  // samples drawn, including rejected extensions
  double goal_bias = 0.1;
  int max_repeats = 4;  // same primitive re-applied while it keeps closing in
};

struct RrtResult {
  std::vector<Pose> nodes;
  std::vector<int> parents;
  std::vector<Pose> path;  // start to goal, tree resolution
};

namespace detail {

class PointHash {
 public:
  explicit PointHash(double cell) : cell_(cell) {}
  void insert(int idx, Vec2 p) { bins_[key(cell(p.x), cell(p.y))].push_back(idx); }

  // Nearest stored point to `q` by ring search.
  int nearest(Vec2 q, const std::vector<Pose>& pts) const {
    const long long cx = cell(q.x), cy = cell(q.y);
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (long long r = 0;; ++r) {
      if (best >= 0 && (static_cast<double>(r) - 1.0) * cell_ > std::sqrt(best_d)) break;
      for (long long y = cy - r; y <= cy + r; ++y) {
        for (long long x = cx - r; x <= cx + r; ++x) {
          if (std::max(std::abs(x - cx), std::abs(y - cy)) != r) continue;
          const auto it = bins_.find(key(x, y));
          if (it == bins_.end()) continue;
          for (int idx : it->second) {
            const double d = length_squared(pts[static_cast<std::size_t>(idx)].position() - q);
            if (d < best_d || (d == best_d && idx < best)) {
              best_d = d;
              best = idx;
            }
          }
        }
      }
    }
    return best;
  }

 private:
  long long cell(double v) const { return static_cast<long long>(std::floor(v / cell_)); }
  static long long key(long long x, long long y) { return (x << 32) ^ (y & 0xffffffffLL); }
  double cell_;
  std::unordered_map<long long, std::vector<int>> bins_;
};

struct ObstacleSet {
  static constexpr double kBin = 0.5;
  std::vector<std::vector<Vec2>> polys;
  std::vector<Aabb> boxes;
  double clearance = 0.0;
  std::unordered_map<long long, std::vector<int>> bins;

  static long long key(long long x, long long y) { return (x << 32) ^ (y & 0xffffffffLL); }
  static long long bin(double v) { return static_cast<long long>(std::floor(v / kBin)); }

  bool blocked(Vec2 p) const {
    if (polys.empty()) return false;
    const auto it = bins.find(key(bin(p.x), bin(p.y)));
    if (it == bins.end()) return false;
    for (int i : it->second) {
      const Aabb& b = boxes[static_cast<std::size_t>(i)];
      if (p.x < b.lo.x - clearance || p.x > b.hi.x + clearance || p.y < b.lo.y - clearance || p.y > b.hi.y + clearance)
        continue;
      if (point_polygon_distance(polys[static_cast<std::size_t>(i)], p) < clearance) return true;
    }
    return false;
  }
};

inline ObstacleSet obstacle_set(const std::vector<std::vector<Vec2>>& polys, double clearance) {
  ObstacleSet s;
  s.polys = polys;
  s.clearance = clearance;
  for (std::size_t i = 0; i < polys.size(); ++i) {
    const Aabb b = bounds_of(polys[i]);
    s.boxes.push_back(b);
    for (long long y = ObstacleSet::bin(b.lo.y - clearance); y <= ObstacleSet::bin(b.hi.y + clearance); ++y)
      for (long long x = ObstacleSet::bin(b.lo.x - clearance); x <= ObstacleSet::bin(b.hi.x + clearance); ++x)
        s.bins[ObstacleSet::key(x, y)].push_back(static_cast<int>(i));
  }
  return s;
}

inline bool point_free(const OccupancyGrid& g, const ObstacleSet& obs, Vec2 p) {
  return !g.occupied_at(p) && !obs.blocked(p);
}

inline bool segment_free(const OccupancyGrid& g, const ObstacleSet& obs, Vec2 a, Vec2 b, double spacing) {
  const int n = std::max(1, static_cast<int>(std::ceil(length(b - a) / spacing)));
  for (int i = 0; i <= n; ++i)
    if (!point_free(g, obs, a + (b - a) * (static_cast<double>(i) / n))) return false;
  return true;
}

}  // namespace detail

/// Kinodynamic RRT over (x, y, theta) with three constant-speed unicycle
/// primitives. Returns the first path found.
inline RrtResult rrt_plan(const RrtProblem& prob, std::mt19937_64& rng) {
  const OccupancyGrid& g = *prob.grid;
  const detail::ObstacleSet obs = detail::obstacle_set(prob.obstacles, prob.clearance);
  if (!detail::point_free(g, obs, prob.start.position()))
    throw Error(ErrorKind::StartInObstacle, "rrt: start pose is not in free space");

  RrtResult res;
  res.nodes.push_back(prob.start);
  res.parents.push_back(-1);
  detail::PointHash hash(0.25);
  hash.insert(0, prob.start.position());

  auto finish = [&](int idx) {
    for (int i = idx; i >= 0; i = res.parents[static_cast<std::size_t>(i)]) res.path.push_back(res.nodes[static_cast<std::size_t>(i)]);
    std::reverse(res.path.begin(), res.path.end());
    return res;
  };
  if (prob.in_goal(prob.start.position())) return finish(0);

  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_real_distribution<double> ux(prob.bounds.x_min, prob.bounds.x_max), uy(prob.bounds.y_min, prob.bounds.y_max);
  const double omegas[3] = {-prob.omega_max, 0.0, prob.omega_max};
  const int checks = 5;

  auto motion = [&](const Pose& from, double w, Pose& out) {
    Pose p = from;
    for (int k = 0; k < checks; ++k) {
      p = integrate_unicycle(p, prob.forward_speed, w, prob.duration / checks);
      if (!detail::point_free(g, obs, p.position())) return false;
    }
    out = p;
    return true;
  };

  for (int it = 0; it < prob.max_iterations && static_cast<int>(res.nodes.size()) < prob.max_nodes; ++it) {
    const Vec2 target = u01(rng) < prob.goal_bias ? prob.goal_sample : Vec2{ux(rng), uy(rng)};
    const int near = hash.nearest(target, res.nodes);
    int parent = near;
    double best_d = std::numeric_limits<double>::infinity();
    int best_w = -1;
    Pose best_pose;
    for (int w = 0; w < 3; ++w) {
      Pose p;
      if (!motion(res.nodes[static_cast<std::size_t>(near)], omegas[w], p)) continue;
      const double d = length(p.position() - target);
      if (d < best_d) {
        best_d = d;
        best_w = w;
        best_pose = p;
      }
    }
    if (best_w < 0) continue;
    for (int rep = 0; rep < prob.max_repeats && static_cast<int>(res.nodes.size()) < prob.max_nodes; ++rep) {
      const int idx = static_cast<int>(res.nodes.size());
      res.nodes.push_back(best_pose);
      res.parents.push_back(parent);
      hash.insert(idx, best_pose.position());
      if (prob.in_goal(best_pose.position())) return finish(idx);
      Pose next;
      if (!motion(best_pose, omegas[best_w], next)) break;
      const double d = length(next.position() - target);
      if (d >= best_d) break;
      best_d = d;
      parent = idx;
      best_pose = next;
    }
  }
  throw Error(ErrorKind::NoPathFound, "rrt: no path within the sampling budget");
}

/// Greedy line-of-sight shortcutting of a planned path.
inline std::vector<Vec2> shortcut_path(const RrtProblem& prob, const std::vector<Pose>& path) {
  std::vector<Vec2> out;
  if (path.empty()) return out;
  const detail::ObstacleSet obs = detail::obstacle_set(prob.obstacles, prob.clearance);
  const double spacing = 0.5 * prob.grid->resolution();
  std::size_t i = 0;
  out.push_back(path.front().position());
  while (i + 1 < path.size()) {
    std::size_t j = path.size() - 1;
    while (j > i + 1 && !detail::segment_free(*prob.grid, obs, path[i].position(), path[j].position(), spacing)) --j;
    out.push_back(path[j].position());
    i = j;
  }
  return out;
}

inline double polyline_length(const std::vector<Vec2>& pts) {
  double l = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) l += length(pts[i] - pts[i - 1]);
  return l;
}

namespace detail {

// Pure pursuit along a polyline. `progress` is the segment index the robot has reached.
inline Vec2 lookahead_point(const std::vector<Vec2>& path, Vec2 p, std::size_t& progress, double lookahead) {
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_seg = progress;
  Vec2 proj = path.front();
  for (std::size_t s = progress; s + 1 < path.size() && s < progress + 8; ++s) {
    const Vec2 q = closest_point_on_segment(path[s], path[s + 1], p);
    const double d = length(q - p);
    if (d < best) {
      best = d;
      best_seg = s;
      proj = q;
    }
  }
  if (path.size() == 1) return path.front();
  progress = best_seg;
  double left = lookahead;
  Vec2 cur = proj;
  for (std::size_t s = best_seg; s + 1 < path.size(); ++s) {
    const double seg = length(path[s + 1] - cur);
    if (seg >= left) return cur + (path[s + 1] - cur) * (left / seg);
    left -= seg;
    cur = path[s + 1];
  }
  return path.back();
}

inline double distance_to_polyline(const std::vector<Vec2>& path, Vec2 p) {
  if (path.size() == 1) return length(path.front() - p);
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s + 1 < path.size(); ++s) d = std::min(d, length(closest_point_on_segment(path[s], path[s + 1], p) - p));
  return d;
}

}  // namespace detail

/// RRT planner plus pure-pursuit tracking. Movable objects are planned around;
/// if that fails the planner ignores them (and pushes through).
class RrtPolicy : public Policy {
 public:
  static constexpr double kResolution = 0.05;
  static constexpr double kLookahead = 0.3;
  static constexpr double kGoalTolerance = 0.15;

  std::string name() const override { return "rrt"; }
  bool supports(ActionMode m) const override { return m != ActionMode::HeadingStep; }

  void reset(const Environment& env, std::uint64_t seed) override {
    rng_.seed(seed ^ 0x5bd1e995ULL);
    const StaticMap& map = env.static_map();
    const bool ship = env.kind() == EnvKind::ShipIce;
    radius_ = ship ? 0.3 : 0.16;
    grids_.clear();
    grids_.push_back(detail::planning_grid(map, kResolution, radius_));
    grids_.push_back(detail::planning_grid(map, kResolution, 0.5 * radius_));
    fallback_.reset(env, seed);
    path_.clear();
    progress_ = 0;
    history_.clear();
    replans_ = 0;
    planned_ = false;
    // Floes are meant to be pushed aside, so the ship plans around land only.
    movables_failed_ = ship;
  }

  Action act(const Observation& obs, const Environment& env) override {
    const Pose pose = env.robot().pose;
    history_.push_back(pose.position());
    bool stuck = false;
    if (history_.size() > 12) {
      stuck = length(history_.back() - history_[history_.size() - 13]) < 0.1;
    }
    if (!planned_ || path_.empty() || stuck || detail::distance_to_polyline(path_, pose.position()) > 0.4) {
      if (!planned_ || replans_ < 50) plan(env, pose, stuck);
    }
    if (path_.empty()) return fallback_.act(obs, env);
    const Vec2 aim = detail::lookahead_point(path_, pose.position(), progress_, kLookahead);
    const Vec2 d = aim - pose.position();
    const double dist = length(d);
    if (dist < 1e-6) return detail::drive_action(env.spec(), 0.0);
    const double alpha = wrap_angle(std::atan2(d.y, d.x) - pose.theta);
    // Pure pursuit curvature; sharp corrections fall back to a full-rate turn.
    double omega = 2.0 * env.spec().forward_speed * std::sin(alpha) / std::max(dist, 1e-3);
    if (std::abs(alpha) > kPi / 2.0) omega = std::copysign(env.spec().omega_max, alpha);
    return detail::drive_action(env.spec(), omega);
  }

  const std::vector<Vec2>& path() const { return path_; }

 private:
  RrtProblem problem(const Environment& env, const Pose& start, const OccupancyGrid& grid, bool with_movables) const {
    RrtProblem p;
    p.grid = &grid;
    p.clearance = radius_;
    p.start = start;
    p.bounds = env.static_map().arena;
    p.forward_speed = env.spec().forward_speed;
    p.omega_max = env.spec().omega_max;
    p.duration = env.spec().step_duration;
    if (with_movables) {
      for (int i = 0; i < env.object_count(); ++i) p.obstacles.push_back(world_vertices(env.object(i)));
    }
    const GoalRegion& goal = env.static_map().goal;
    if (const auto* disc = std::get_if<GoalDisc>(&goal)) {
      const Vec2 c = disc->center;
      const double tol = std::min(kGoalTolerance, disc->radius);
      p.goal_sample = c;
      p.in_goal = [c, tol](Vec2 q) { return length(q - c) <= tol; };
    } else if (const auto* line = std::get_if<GoalLine>(&goal)) {
      const double y = line->y;
      p.goal_sample = {start.x, std::min(y + 0.2, env.static_map().arena.y_max - 0.05)};
      p.in_goal = [y](Vec2 q) { return q.y >= y; };
    }
    return p;
  }

  void plan(const Environment& env, const Pose& pose, bool stuck) {
    planned_ = true;
    ++replans_;
    progress_ = 0;
    history_.clear();
    path_.clear();
    // Stuck against movables: plan through them instead.
    for (int pass = stuck || movables_failed_ ? 1 : 0; pass < 2 && path_.empty(); ++pass) {
      const bool with_movables = pass == 0;
      if (pass == 1 && !stuck) movables_failed_ = true;
      for (const OccupancyGrid& grid : grids_) {
        RrtProblem p = problem(env, pose, grid, with_movables);
        if (with_movables) {
          p.max_nodes = 5000;
          p.max_iterations = 15000;
        }
        try {
          const RrtResult r = rrt_plan(p, rng_);
          path_ = shortcut_path(p, r.path);
          if (const auto* disc = std::get_if<GoalDisc>(&env.static_map().goal)) path_.push_back(disc->center);
          if (std::get_if<GoalLine>(&env.static_map().goal)) path_.push_back(path_.back() + Vec2{0.0, 1.0});
          return;
        } catch (const Error&) {
        }
      }
    }
  }

  std::mt19937_64 rng_;
  double radius_ = 0.16;
  std::vector<OccupancyGrid> grids_;
  DtFollowerPolicy fallback_;
  std::vector<Vec2> path_;
  std::size_t progress_ = 0;
  std::vector<Vec2> history_;
  int replans_ = 0;
  bool planned_ = false;
  bool movables_failed_ = false;
};

// ---------------------------------------------------------------------------
// Greedy push

/// Scripted manipulation baseline: pick the cheapest incomplete box, walk to
/// the point behind it on its route to the goal, then push it along that route.
class GreedyPushPolicy : public Policy {
 public:
  static constexpr double kResolution = 0.05;
  static constexpr double kRobotRadius = 0.13;
  static constexpr double kRobotFront = 0.14;  // bumper front edge ahead of the robot center
  static constexpr double kDockTolerance = 0.15;

  std::string name() const override { return "greedy_push"; }
  bool supports(ActionMode m) const override { return m == ActionMode::HeadingStep; }

  void reset(const Environment& env, std::uint64_t) override {
    const StaticMap& map = env.static_map();
    const double half = 0.5 * env.spec().box_size;
    robot_grid_ = detail::planning_grid(map, kResolution, kRobotRadius);
    box_grid_ = detail::planning_grid(map, kResolution, half - 0.01);
    // Deliver the whole box (centroid pushed past the goal edge by its half-width).
    const double extent = env.kind() == EnvKind::BoxDelivery ? half + 0.05 : half * std::sqrt(2.0) + 0.05;
    std::vector<Cell> goals = detail::planning_goal_cells(map, box_grid_, extent);
    if (goals.empty()) goals = detail::planning_goal_cells(map, box_grid_, 0.0);
    box_field_ = geodesic_distance_field(box_grid_, goals);
  }

  struct Choice {
    int index = -1;
    Vec2 approach;
    Vec2 push_dir;
    double cost = kUnreachable;
  };

  Action act(const Observation&, const Environment& env) override {
    const Pose pose = env.robot().pose;
    const Choice c = choose(env);
    last_ = c;
    if (c.index < 0) return Action::heading_to(pose.theta);
    const Body& box = env.object(c.index);
    const Vec2 p = pose.position();
    if (length(c.approach - p) <= kDockTolerance) {
      // Docked: push through the box center along the route.
      const Vec2 target = box.pose.position() + c.push_dir * 0.3;
      return Action::heading_to(std::atan2(target.y - p.y, target.x - p.x));
    }
    const OccupancyGrid grid = occupancy_with_boxes(env, -1);
    const DistanceField field = geodesic_distance_field(grid, grid.cell_of(c.approach));
    Cell start = grid.cell_of(p);
    if (!std::isfinite(field.at(start))) start = step_out(grid, field, start);
    const std::vector<Vec2> path = descent_path(grid, field, start, 200);
    Vec2 aim = path.size() > 1 ? detail::aim_point(grid, path, p, 0.5) : c.approach;
    if (length(aim - p) < 1e-6) aim = c.approach;
    return Action::heading_to(std::atan2(aim.y - p.y, aim.x - p.x));
  }

  const Choice& last_choice() const { return last_; }

  // Route direction for a box centroid: toward a visible point down its goal field.
  Vec2 push_direction(Vec2 centroid) const {
    Cell c = box_grid_.cell_of(centroid);
    if (!std::isfinite(box_field_.at(c))) c = step_out(box_grid_, box_field_, c);
    const std::vector<Vec2> path = descent_path(box_grid_, box_field_, c, 40);
    Vec2 aim = path.size() > 1 ? detail::aim_point(box_grid_, path, centroid, 0.4) : centroid;
    if (length(aim - centroid) < 1e-6 && path.size() > 1) aim = path.back();
    const Vec2 d = aim - centroid;
    return length(d) > 1e-9 ? normalized(d) : Vec2{1.0, 0.0};
  }

 private:
  // Static obstacles plus all boxes except `skip`, grown by the robot radius.
  OccupancyGrid occupancy_with_boxes(const Environment& env, int skip) const {
    OccupancyGrid g = robot_grid_;
    const double r = kRobotRadius;
    for (int i = 0; i < env.object_count(); ++i) {
      if (i == skip || env.object_completed(i)) continue;
      const std::vector<Vec2> poly = world_vertices(env.object(i));
      const Aabb b = bounds_of(poly);
      const Cell lo = g.cell_of(b.lo - Vec2{r, r}), hi = g.cell_of(b.hi + Vec2{r, r});
      for (int y = std::max(0, lo.y); y <= std::min(g.height() - 1, hi.y); ++y)
        for (int x = std::max(0, lo.x); x <= std::min(g.width() - 1, hi.x); ++x)
          if (detail::point_polygon_distance(poly, g.center({x, y})) < r) g.set({x, y}, true);
    }
    return g;
  }

  static Cell step_out(const OccupancyGrid&, const DistanceField& field, Cell c) {
    for (int r = 1; r < 30; ++r) {
      Cell best = c;
      double best_d = kUnreachable;
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
          const double d = field.at({c.x + dx, c.y + dy});
          if (d < best_d) {
            best_d = d;
            best = {c.x + dx, c.y + dy};
          }
        }
      if (std::isfinite(best_d)) return best;
    }
    return c;
  }

  Choice choose(const Environment& env) const {
    Choice best;
    const Vec2 p = env.robot().pose.position();
    const double offset = 1.5 * 0.5 * env.spec().box_size + kRobotFront;
    const OccupancyGrid grid = occupancy_with_boxes(env, -1);
    Cell rc = grid.cell_of(p);
    const DistanceField from_robot = geodesic_distance_field(grid, rc);
    for (int i = 0; i < env.object_count(); ++i) {
      if (env.object_completed(i)) continue;
      const Vec2 c = env.object(i).pose.position();
      Cell bc = box_grid_.cell_of(c);
      if (!std::isfinite(box_field_.at(bc))) bc = step_out(box_grid_, box_field_, bc);
      const double to_goal = box_field_.bilinear(c);
      const Vec2 dir = push_direction(c);
      // Approach point behind the box; rotate the route direction if it is blocked.
      Vec2 approach = c - dir * offset;
      Vec2 push = dir;
      double reach = robot_reach(grid, from_robot, approach, p);
      for (double turn : {0.5, -0.5, 1.0, -1.0, 1.5, -1.5}) {
        if (std::isfinite(reach)) break;
        const Vec2 d2 = rotate(dir, turn);
        approach = c - d2 * offset;
        push = d2;
        reach = robot_reach(grid, from_robot, approach, p);
      }
      if (!std::isfinite(reach)) {
        approach = c - dir * offset;
        push = dir;
        reach = length(approach - p) + 10.0;
      }
      const double cost = reach + (std::isfinite(to_goal) ? to_goal : 100.0);
      if (cost < best.cost) best = {i, approach, push, cost};
    }
    return best;
  }

  static double robot_reach(const OccupancyGrid& grid, const DistanceField& from_robot, Vec2 approach, Vec2 robot) {
    if (length(approach - robot) <= kDockTolerance) return length(approach - robot);
    const Cell a = grid.cell_of(approach);
    if (grid.occupied(a)) return kUnreachable;
    return from_robot.at(a);
  }

  OccupancyGrid robot_grid_;
  OccupancyGrid box_grid_;
  DistanceField box_field_;
  Choice last_;
};

// ---------------------------------------------------------------------------

inline std::vector<std::string> policy_names() { return {"idle", "teleop", "dt_follower", "rrt", "greedy_push"}; }

inline std::unique_ptr<Policy> make_policy(const std::string& name) {
  if (name == "idle") return std::make_unique<IdlePolicy>();
  if (name == "teleop") return std::make_unique<TeleopPolicy>();
  if (name == "dt_follower" || name == "dt") return std::make_unique<DtFollowerPolicy>();
  if (name == "rrt") return std::make_unique<RrtPolicy>();
  if (name == "greedy_push" || name == "greedy") return std::make_unique<GreedyPushPolicy>();
  throw Error(ErrorKind::InvalidSpec, "policy: unknown policy '" + name + "'");
}

}  // namespace benchpush
