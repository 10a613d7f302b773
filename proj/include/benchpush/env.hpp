#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "benchpush/env_spec.hpp"
#include "benchpush/ice.hpp"
#include "benchpush/observation.hpp"
#include "benchpush/physics.hpp"
#include "benchpush/robot.hpp"
#include "benchpush/static_map.hpp"
#include "benchpush/trace.hpp"

namespace benchpush {

inline constexpr int kRobotId = 0;
inline constexpr int kWallIdBase = 1000;
inline constexpr double kJitterThreshold = 1e-3;  // m per env step
inline constexpr int kMaxPlacementAttempts = 10000;

struct Action {
  ActionMode mode = ActionMode::AngularVelocity;
  double omega = 0.0;    // rad/s
  double heading = 0.0;  // rad, world frame
  double left = 0.0;     // m/s
  double right = 0.0;    // m/s

  static Action angular(double w) {
    Action a;
    a.mode = ActionMode::AngularVelocity;
    a.omega = w;
    return a;
  }
  static Action heading_to(double phi) {
    Action a;
    a.mode = ActionMode::HeadingStep;
    a.heading = phi;
    return a;
  }
  static Action wheels(double l, double r) {
    Action a;
    a.mode = ActionMode::WheelVelocities;
    a.left = l;
    a.right = r;
    return a;
  }
  friend bool operator==(const Action&, const Action&) = default;
};

inline nlohmann::json action_to_json(const Action& a) {
  switch (a.mode) {
    case ActionMode::AngularVelocity: return {{"mode", to_string(a.mode)}, {"omega", a.omega}};
    case ActionMode::HeadingStep: return {{"mode", to_string(a.mode)}, {"heading", a.heading}};
    case ActionMode::WheelVelocities: return {{"mode", to_string(a.mode)}, {"left", a.left}, {"right", a.right}};
  }
  return {};
}

inline Action action_from_json(const nlohmann::json& j) {
  const ActionMode mode = parse_action_mode(j.at("mode").get<std::string>());
  switch (mode) {
    case ActionMode::AngularVelocity: return Action::angular(j.at("omega").get<double>());
    case ActionMode::HeadingStep: return Action::heading_to(j.at("heading").get<double>());
    case ActionMode::WheelVelocities: return Action::wheels(j.at("left").get<double>(), j.at("right").get<double>());
  }
  return {};
}

/// Per-step quantities the reward is computed from.
struct StepEvents {
  double goal_decrement = 0.0;    // robot goal-distance decrement (m)
  int new_movable_contacts = 0;   // robot contact onsets with movable objects
  double pushed_energy = 0.0;     // floe kinetic-energy gain while touching the ship (J)
  double heading_alignment = 0.0; // cos of the angle between ship heading and +y
  double object_decrement = 0.0;  // summed object goal-distance decrements (m)
  int newly_completed = 0;
  int newly_uncompleted = 0;
  int new_static_contacts = 0;    // robot contact onsets with walls
  bool terminated = false;
};

inline double compute_reward(EnvKind kind, const RewardConfig& c, const StepEvents& e) {
  switch (kind) {
    case EnvKind::Maze:
      return c.c_dist * e.goal_decrement - c.c_coll * e.new_movable_contacts + (e.terminated ? c.r_terminal : 0.0);
    case EnvKind::ShipIce:
      return -c.c_coll * e.pushed_energy + c.c_head * e.heading_alignment + (e.terminated ? c.r_terminal : 0.0);
    case EnvKind::BoxDelivery:
    case EnvKind::AreaClearing:
      return c.c_box * e.object_decrement + c.r_done * (e.newly_completed - e.newly_uncompleted) -
             c.c_static * e.new_static_contacts;
  }
  return 0.0;
}

struct ObjectStep {
  int id = 0;
  double displacement = 0.0;  // centroid arc length during this step (unfiltered)
};

struct StepInfo {
  std::vector<std::pair<int, int>> contact_onsets;  // id pairs, lower id first
  std::vector<ObjectStep> objects;
  std::vector<int> completed;    // sub-tasks completed during this step
  std::vector<int> uncompleted;  // sub-tasks undone during this step
  double robot_displacement = 0.0;
  int substeps = 0;
  StepEvents events;
};

struct Transition {
  Observation observation;
  double reward = 0.0;
  bool terminated = false;
  bool truncated = false;
  StepInfo info;
};

struct EpisodeOutcome {
  bool success = false;
  std::vector<bool> object_success;
  int total = 0;      // K
  int completed = 0;  // K'
};

namespace detail {

// Lower bound on the distance between two placed shapes (negative when overlapping).
inline double shape_gap(const PlacedShape& a, const PlacedShape& b) {
  const bool pa = a.kind == Shape::Kind::Polygon, pb = b.kind == Shape::Kind::Polygon;
  if (pa && pb) return std::max(max_separation(a, b).separation, max_separation(b, a).separation);
  if (!pa && !pb) return length(a.center - b.center) - a.radius - b.radius;
  const PlacedShape& poly = pa ? a : b;
  const PlacedShape& disc = pa ? b : a;
  if (point_in_convex(poly.vertices, disc.center)) return -disc.radius;
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0, n = poly.vertices.size(); i < n; ++i) {
    const Vec2 q = closest_point_on_segment(poly.vertices[i], poly.vertices[(i + 1) % n], disc.center);
    d = std::min(d, length(q - disc.center));
  }
  return d - disc.radius;
}

inline double body_gap(const Body& a, const Body& b, double cutoff) {
  double best = std::numeric_limits<double>::infinity();
  for (const Shape& sa : a.parts) {
    const PlacedShape pa = place(sa, a.pose);
    for (const Shape& sb : b.parts) {
      const PlacedShape pb = place(sb, b.pose);
      const Aabb grown{pa.bounds.lo - Vec2{cutoff, cutoff}, pa.bounds.hi + Vec2{cutoff, cutoff}};
      if (!grown.overlaps(pb.bounds)) continue;
      best = std::min(best, shape_gap(pa, pb));
    }
  }
  return best;
}

inline bool clear_of(const Body& candidate, const std::vector<Body>& others, double gap) {
  for (const Body& o : others) {
    if (o.id == candidate.id) continue;
    if (body_gap(candidate, o, gap) < gap) return false;
  }
  return true;
}

// Vertices of `b` all within `r`.
inline bool body_inside(const Body& b, const Rect& r) {
  for (std::size_t k = 0; k < b.parts.size(); ++k)
    for (const Vec2& v : world_vertices(b, k))
      if (!r.contains(v)) return false;
  return true;
}

inline bool body_touches(const Body& b, const Rect& r) {
  const Body probe = make_wall(-1, r);
  return body_gap(b, probe, 0.0) < 0.0;
}

inline std::pair<int, int> ordered(int a, int b) { return a < b ? std::pair{a, b} : std::pair{b, a}; }

}  // namespace detail

/// One task environment. Construct from a validated spec, then `reset(seed)`
/// before stepping. Not thread-safe; use one instance per thread.
class Environment {
 public:
  explicit Environment(EnvSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    base_map_ = std::make_shared<StaticMap>(build_static_map(spec_));
    map_ = base_map_;
    if (!(spec_.kind == EnvKind::Maze && spec_.layout == MazeLayout::Open)) rebuild_goal_field();
  }

  const EnvSpec& spec() const { return spec_; }
  EnvKind kind() const { return spec_.kind; }
  ActionMode action_mode() const { return spec_.action_mode; }
  const StaticMap& static_map() const { return *map_; }
  std::shared_ptr<const StaticMap> static_map_ptr() const { return map_; }
  const World& world() const { return world_; }
  const Body& robot() const { return world_.bodies.front(); }
  const DistanceField& goal_field() const { return goal_field_; }
  double goal_field_max() const { return goal_field_max_; }
  const EpisodeTrace& trace() const { return trace_; }
  bool active() const { return active_; }
  bool terminated() const { return terminated_; }
  bool truncated() const { return truncated_; }
  int steps() const { return steps_; }
  std::uint64_t seed() const { return seed_; }

  // Movable objects occupy world indices 1..K.
  int object_count() const { return object_count_; }
  const Body& object(int i) const { return world_.bodies[static_cast<std::size_t>(1 + i)]; }
  bool object_completed(int i) const { return completed_[static_cast<std::size_t>(i)]; }

  // Observations are skipped when a privileged policy does not need them.
  void set_render(bool on) { render_ = on; }
  // Called after every physics sub-step (used to pace live sessions).
  void set_substep_observer(std::function<void(const World&)> fn) { observer_ = std::move(fn); }

  Observation reset(std::uint64_t seed) {
    seed_ = seed;
    world_ = World{};
    world_.params = spec_.physics;
    world_.rng.seed(seed);
    map_ = base_map_;
    steps_ = 0;
    terminated_ = truncated_ = false;

    int next_wall = kWallIdBase;
    std::vector<Body> walls;
    for (const Rect& r : wall_rects(*map_)) walls.push_back(make_wall(next_wall++, r));

    switch (spec_.kind) {
      case EnvKind::Maze: reset_maze(walls); break;
      case EnvKind::ShipIce: reset_ship(walls); break;
      case EnvKind::BoxDelivery:
      case EnvKind::AreaClearing: reset_manipulation(walls); break;
    }
    object_count_ = static_cast<int>(world_.bodies.size()) - 1;
    for (Body& w : walls) world_.bodies.push_back(std::move(w));

    trace_ = EpisodeTrace{};
    trace_.kind = spec_.kind;
    trace_.robot_mass = robot().mass;
    trace_.robot_start = robot().pose.position();
    trace_.map = map_;
    completed_.assign(static_cast<std::size_t>(object_count_), false);
    for (int i = 0; i < object_count_; ++i) {
      const Body& b = object(i);
      trace_.objects.push_back({b.id, b.mass, 0.0, b.pose.position(), false});
      completed_[static_cast<std::size_t>(i)] = object_complete(*map_, b);
    }
    refresh_trace_flags();
    previous_contacts_.clear();
    for (const Contact& c : world_.contacts) previous_contacts_.insert(detail::ordered(c.body_a, c.body_b));
    active_ = true;
    return observe();
  }

  Transition step(const Action& action) {
    if (!active_) throw Error(ErrorKind::StepAfterTermination, "step called without an active episode");
    if (action.mode != spec_.action_mode) {
      throw Error(ErrorKind::WrongActionMode, std::string("environment expects '") +
                                                  std::string(to_string(spec_.action_mode)) + "' actions, got '" +
                                                  std::string(to_string(action.mode)) + "'");
    }
    if (!std::isfinite(action.omega) || !std::isfinite(action.heading) || !std::isfinite(action.left) ||
        !std::isfinite(action.right)) {
      throw Error(ErrorKind::WrongActionMode, "action contains non-finite values");
    }

    StepScratch scratch;
    scratch.object_arc.assign(static_cast<std::size_t>(object_count_), 0.0);
    const Vec2 robot_before = robot().pose.position();
    const double robot_dist_before = goal_distance(robot_before);
    std::vector<double> object_dist_before(static_cast<std::size_t>(object_count_));
    for (int i = 0; i < object_count_; ++i) object_dist_before[static_cast<std::size_t>(i)] = goal_distance(object(i).pose.position());

    Body& bot = world_.bodies.front();
    switch (action.mode) {
      case ActionMode::AngularVelocity: {
        bot.drive = Drive{spec_.forward_speed, std::clamp(action.omega, -spec_.omega_max, spec_.omega_max)};
        for (int k = 0; k < spec_.physics_substeps(); ++k) substep(scratch);
        break;
      }
      case ActionMode::WheelVelocities: {
        const double l = std::clamp(action.left, -spec_.max_wheel_speed, spec_.max_wheel_speed);
        const double r = std::clamp(action.right, -spec_.max_wheel_speed, spec_.max_wheel_speed);
        const UnicycleCommand u = wheels_to_unicycle(l, r, kTrackWidth);
        bot.drive = Drive{u.forward, u.omega};
        for (int k = 0; k < spec_.physics_substeps(); ++k) substep(scratch);
        break;
      }
      case ActionMode::HeadingStep: {
        // Turn in place instantly, then drive forward the fixed step distance.
        bot.pose.theta = wrap_angle(action.heading);
        const double dt = world_.params.dt;
        const int nominal = static_cast<int>(std::ceil(spec_.heading_step / (spec_.forward_speed * dt) - 1e-9));
        double travelled = 0.0;
        for (int k = 0; k < 2 * nominal && travelled < spec_.heading_step - 1e-9; ++k) {
          const double remaining = spec_.heading_step - travelled;
          world_.bodies.front().drive = Drive{std::min(spec_.forward_speed, remaining / dt), 0.0};
          const double before = scratch.robot_displacement;
          substep(scratch);
          travelled += scratch.robot_displacement - before;
        }
        Body& b = world_.bodies.front();
        b.drive = Drive{};
        b.velocity = {};
        b.angular_velocity = 0.0;
        break;
      }
    }
    ++steps_;

    Transition t;
    StepInfo& info = t.info;
    info.substeps = scratch.substeps;
    info.robot_displacement = scratch.robot_displacement;
    info.contact_onsets.assign(scratch.onsets.begin(), scratch.onsets.end());
    StepEvents& ev = info.events;
    for (const auto& [a, b] : scratch.onsets) {
      if (a != kRobotId) continue;
      const Body* other = world_.find(b);
      if (!other) continue;
      if (is_movable_object(other->role)) ++ev.new_movable_contacts;
      if (other->role == BodyRole::Wall) ++ev.new_static_contacts;
    }
    ev.pushed_energy = scratch.pushed_energy;
    ev.heading_alignment = robot().pose.heading().y;

    const double robot_dist_after = goal_distance(robot().pose.position());
    if (std::isfinite(robot_dist_before) && std::isfinite(robot_dist_after))
      ev.goal_decrement = robot_dist_before - robot_dist_after;

    for (int i = 0; i < object_count_; ++i) {
      const std::size_t k = static_cast<std::size_t>(i);
      const Body& b = object(i);
      const double arc = scratch.object_arc[k];
      info.objects.push_back({b.id, arc});
      if (arc >= kJitterThreshold) trace_.objects[k].path_length += arc;
      const double after = goal_distance(b.pose.position());
      if (std::isfinite(object_dist_before[k]) && std::isfinite(after)) ev.object_decrement += object_dist_before[k] - after;
      const bool done = object_complete(*map_, b);
      if (done && !completed_[k]) {
        ++ev.newly_completed;
        info.completed.push_back(b.id);
      } else if (!done && completed_[k]) {
        ++ev.newly_uncompleted;
        info.uncompleted.push_back(b.id);
      }
      completed_[k] = done;
    }

    terminated_ = goal_reached();
    truncated_ = !terminated_ && steps_ >= spec_.max_steps;
    ev.terminated = terminated_;
    active_ = !(terminated_ || truncated_);
    refresh_trace_flags();

    t.reward = compute_reward(spec_.kind, spec_.reward, ev);
    t.terminated = terminated_;
    t.truncated = truncated_;
    t.observation = observe();
    return t;
  }

  Observation observe() const {
    if (!render_ || world_.bodies.empty()) return {};
    RenderInputs in;
    in.world = &world_;
    in.robot_id = kRobotId;
    in.static_grid = &map_->grid;
    in.goal_field = &goal_field_;
    in.goal_field_max = goal_field_max_;
    return render_observation(in, spec_.kind, spec_.obs);
  }

  EpisodeOutcome outcome() const {
    EpisodeOutcome o;
    o.success = trace_.success;
    for (const ObjectRecord& r : trace_.objects) o.object_success.push_back(r.success);
    o.total = trace_.total_objects();
    o.completed = trace_.completed_objects();
    return o;
  }

  // Bilinear geodesic distance of a point to the goal set (robot for
  // navigation, object centroid for manipulation).
  double goal_distance(Vec2 p) const { return goal_field_.bilinear(p); }

  bool goal_reached() const {
    if (task_class(spec_.kind) == TaskClass::Navigation) return robot_at_goal(*map_, robot().pose.position());
    return std::all_of(completed_.begin(), completed_.end(), [](bool b) { return b; });
  }

 private:
  struct StepScratch {
    std::set<std::pair<int, int>> onsets;
    std::vector<double> object_arc;
    double robot_displacement = 0.0;
    double pushed_energy = 0.0;
    int substeps = 0;
  };

  void substep(StepScratch& s) {
    const std::size_t n = static_cast<std::size_t>(object_count_) + 1;
    std::vector<Vec2> before(n);
    std::vector<double> energy(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      before[i] = world_.bodies[i].pose.position();
      energy[i] = world_.bodies[i].kinetic_energy();
    }
    advance_in_place(world_);
    ++s.substeps;

    const double d0 = length(world_.bodies[0].pose.position() - before[0]);
    s.robot_displacement += d0;
    trace_.robot_path_length += d0;
    for (std::size_t i = 1; i < n; ++i) s.object_arc[i - 1] += length(world_.bodies[i].pose.position() - before[i]);

    std::set<std::pair<int, int>> current;
    for (const Contact& c : world_.contacts) current.insert(detail::ordered(c.body_a, c.body_b));
    for (const auto& pair : current) {
      if (!previous_contacts_.count(pair)) s.onsets.insert(pair);
      if (spec_.kind == EnvKind::ShipIce && pair.first == kRobotId && pair.second >= 1 &&
          pair.second <= object_count_) {
        const std::size_t i = static_cast<std::size_t>(pair.second);
        s.pushed_energy += std::max(0.0, world_.bodies[i].kinetic_energy() - energy[i]);
      }
    }
    previous_contacts_ = std::move(current);
    if (observer_) observer_(world_);
  }

  void refresh_trace_flags() {
    for (std::size_t k = 0; k < completed_.size(); ++k) trace_.objects[k].success = completed_[k];
    trace_.success = task_class(spec_.kind) == TaskClass::Navigation ? goal_reached()
                                                                     : trace_.completed_objects() == trace_.total_objects();
  }

  void rebuild_goal_field() {
    const std::vector<Cell> cells = goal_cells(*map_);
    goal_field_ = geodesic_distance_field(map_->grid, cells);
    goal_field_max_ = goal_field_.max_finite();
  }

  template <typename Make, typename Accept>
  Body sample(const char* what, const Rect& region, Make&& make, Accept&& accept) {
    std::uniform_real_distribution<double> ux(region.x_min, region.x_max), uy(region.y_min, region.y_max);
    std::uniform_real_distribution<double> ua(-kPi, kPi);
    for (int attempt = 0; attempt < kMaxPlacementAttempts; ++attempt) {
      const double x = ux(world_.rng), y = uy(world_.rng), a = ua(world_.rng);
      Body b = make(Pose{x, y, a});
      if (accept(b)) return b;
    }
    throw Error(ErrorKind::PlacementFailure, std::string("could not place ") + what + " after " +
                                                 std::to_string(kMaxPlacementAttempts) + " attempts");
  }

  Body make_box(int id, BodyRole role, double size, double mass, Pose pose) const {
    return make_dynamic_body(id, role, Shape::box(size, size), pose, mass);
  }

  void reset_maze(const std::vector<Body>& walls) {
    LayoutStart start = maze_start(spec_.layout, spec_.arena_width, spec_.arena_height, spec_.goal_radius);
    if (spec_.layout == MazeLayout::Open) {
      // Random start, goal at least 2 m away, both clear of the walls.
      const Rect region = map_->arena.inflated(-0.4);
      const Body robot_body = sample("robot", region, [&](Pose p) { return make_robot(kRobotId, p, spec_.bumper); },
                                     [&](const Body& b) { return detail::clear_of(b, walls, 0.05); });
      std::uniform_real_distribution<double> ux(region.x_min, region.x_max), uy(region.y_min, region.y_max);
      Vec2 goal;
      int tries = 0;
      do {
        if (++tries > kMaxPlacementAttempts) throw Error(ErrorKind::PlacementFailure, "could not place open-maze goal");
        goal = {ux(world_.rng), uy(world_.rng)};
      } while (length(goal - robot_body.pose.position()) < 2.0);
      start.robot = robot_body.pose;
      start.goal = GoalDisc{goal, spec_.goal_radius};
      auto m = std::make_shared<StaticMap>(*base_map_);
      m->goal = start.goal;
      validate_map(*m);
      map_ = m;
      rebuild_goal_field();
    }
    Pose pose = start.robot;
    pose.theta = wrap_angle(pose.theta + spec_.start_heading_offset);
    world_.bodies.push_back(make_robot(kRobotId, pose, spec_.bumper));

    const GoalDisc goal = std::get<GoalDisc>(map_->goal);
    const double half_diag = spec_.obstacle_size * std::sqrt(0.5);
    std::vector<Body> placed = walls;
    placed.push_back(world_.bodies.front());
    for (int i = 0; i < spec_.obstacles; ++i) {
      const int id = 1 + i;
      Body b = sample("maze obstacle", map_->arena,
                      [&](Pose p) { return make_box(id, BodyRole::Box, spec_.obstacle_size, spec_.obstacle_mass, p); },
                      [&](const Body& c) {
                        if (length(c.pose.position() - goal.center) < goal.radius + half_diag + 0.05) return false;
                        if (detail::body_gap(c, world_.bodies.front(), 0.3) < 0.3) return false;
                        return detail::clear_of(c, placed, 0.01);
                      });
      placed.push_back(b);
      world_.bodies.push_back(std::move(b));
    }
  }

  void reset_ship(const std::vector<Body>&) {
    const Pose pose{0.5 * spec_.arena_width, 1.0, wrap_angle(kPi / 2.0 + spec_.start_heading_offset)};
    world_.bodies.push_back(make_ship(kRobotId, pose, spec_.ship_mass));
    const Rect channel{0.0, spec_.ice_start, spec_.arena_width, spec_.arena_height};
    IceFieldParams params;
    params.density = spec_.ice_density;
    for (Body& f : generate_ice_field(channel, spec_.ice_concentration, world_.rng, 1, params))
      world_.bodies.push_back(std::move(f));
  }

  void reset_manipulation(const std::vector<Body>& walls) {
    const bool delivery = spec_.kind == EnvKind::BoxDelivery;
    const Rect goal_area = delivery ? std::get<Receptacle>(map_->goal).area : std::get<ClearanceArea>(map_->goal).area;
    const double half_diag = spec_.box_size * std::sqrt(0.5);
    const int wheeled = static_cast<int>(std::lround(spec_.wheeled_fraction * spec_.boxes));
    const Rect region = delivery ? map_->arena.inflated(-0.35) : goal_area.inflated(-(half_diag + 0.02));
    if (!(region.width() > 0.0 && region.height() > 0.0))
      throw Error(ErrorKind::PlacementFailure, "box placement region is empty");

    std::vector<Body> placed = walls;
    std::vector<Body> boxes;
    for (int i = 0; i < spec_.boxes; ++i) {
      const int id = 1 + i;
      const BodyRole role = i < wheeled ? BodyRole::WheeledBox : BodyRole::Box;
      Body b = sample("box", region, [&](Pose p) { return make_box(id, role, spec_.box_size, spec_.box_mass, p); },
                      [&](const Body& c) {
                        if (delivery && detail::body_touches(c, goal_area.inflated(0.1))) return false;
                        if (!delivery && !detail::body_inside(c, goal_area)) return false;
                        return detail::clear_of(c, placed, 0.01);
                      });
      placed.push_back(b);
      boxes.push_back(std::move(b));
    }
    const Body robot_body =
        sample("robot", map_->arena.inflated(-0.3), [&](Pose p) { return make_robot(kRobotId, p, spec_.bumper); },
               [&](const Body& c) {
                 if (goal_area.inflated(0.2).contains(c.pose.position())) return false;
                 return detail::clear_of(c, placed, 0.02);
               });
    world_.bodies.push_back(robot_body);
    for (Body& b : boxes) world_.bodies.push_back(std::move(b));
  }

  EnvSpec spec_;
  std::shared_ptr<const StaticMap> base_map_;
  std::shared_ptr<const StaticMap> map_;
  DistanceField goal_field_;
  double goal_field_max_ = 0.0;
  World world_;
  EpisodeTrace trace_;
  std::vector<bool> completed_;
  std::set<std::pair<int, int>> previous_contacts_;
  std::function<void(const World&)> observer_;
  int object_count_ = 0;
  int steps_ = 0;
  std::uint64_t seed_ = 0;
  bool active_ = false;
  bool terminated_ = false;
  bool truncated_ = false;
  bool render_ = true;
};

inline Environment make_env(const EnvSpec& spec) { return Environment(spec); }

}  // namespace benchpush
