#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "benchpush/body.hpp"
#include "benchpush/collision.hpp"

namespace benchpush {

struct PhysicsParams {
  double dt = 1.0 / 60.0;
  int solver_iterations = 10;
  double mu = 0.5;        // ground kinetic friction
  double gravity = 9.81;
  double baumgarte = 0.2;
  double contact_friction = 0.3;  // body-body Coulomb coefficient
  double wheeled_mu_multiplier = 0.1;
  bool drag_enabled = false;
  double drag_linear = 0.0;              // N*s/m
  double drag_quadratic = 0.0;           // N*s^2/m^2
  double drag_angular_linear = 0.0;      // N*m*s
  double drag_angular_quadratic = 0.0;   // N*m*s^2
  double max_speed = 50.0;
  double linear_slop = 1e-4;             // penetration left in place to keep contacts alive
  double penetration_tolerance = 2.5e-4;
  int max_projection_iterations = 200;
  double restitution_threshold = 0.2;    // m/s; slower impacts are treated as inelastic

  void validate() const {
    if (!(dt > 0.0)) throw Error(ErrorKind::InvalidSpec, "physics.dt must be > 0");
    if (!(mu >= 0.0)) throw Error(ErrorKind::InvalidSpec, "physics.mu must be >= 0");
    if (solver_iterations < 1) throw Error(ErrorKind::InvalidSpec, "physics.solver_iterations must be >= 1");
    if (!(gravity >= 0.0)) throw Error(ErrorKind::InvalidSpec, "physics.gravity must be >= 0");
    if (!(max_speed > 0.0)) throw Error(ErrorKind::InvalidSpec, "physics.max_speed must be > 0");
  }
};

/// Full simulation state. Single owner; copyable so that snapshots and
/// determinism checks are plain value comparisons.
struct World {
  std::vector<Body> bodies;
  PhysicsParams params;
  std::uint64_t tick = 0;
  std::vector<Contact> contacts;  // touching pairs at the end of the last step
  std::mt19937_64 rng;

  Body* find(int id) {
    for (Body& b : bodies) if (b.id == id) return &b;
    return nullptr;
  }
  const Body* find(int id) const {
    for (const Body& b : bodies) if (b.id == id) return &b;
    return nullptr;
  }
  double kinetic_energy() const {
    double e = 0.0;
    for (const Body& b : bodies) e += b.kinetic_energy();
    return e;
  }
};

namespace detail {

struct SolverPoint {
  Vec2 ra, rb;
  double normal_mass = 0.0;
  double tangent_mass = 0.0;
  double normal_impulse = 0.0;
  double tangent_impulse = 0.0;
  double pseudo_impulse = 0.0;
  double velocity_bias = 0.0;
  double position_bias = 0.0;
};

struct SolverContact {
  std::size_t a = 0, b = 0;
  Vec2 normal;
  double friction = 0.0;
  std::array<SolverPoint, 2> points{};
  int count = 0;
};

struct PairManifold {
  std::size_t a = 0, b = 0;
  Manifold manifold;
};

using Placement = std::vector<std::vector<PlacedShape>>;

inline Placement place_all(const World& w) {
  Placement out(w.bodies.size());
  for (std::size_t i = 0; i < w.bodies.size(); ++i) {
    out[i].reserve(w.bodies[i].parts.size());
    for (const Shape& s : w.bodies[i].parts) out[i].push_back(place(s, w.bodies[i].pose));
  }
  return out;
}

inline Aabb body_bounds(const std::vector<PlacedShape>& parts) {
  Aabb b = parts.front().bounds;
  for (const PlacedShape& p : parts) b = b.merged(p.bounds);
  return b;
}

// Sweep-and-prune on x. Pairs come out sorted by (a, b) with a < b.
inline std::vector<std::pair<std::size_t, std::size_t>> broadphase(const World& w, const Placement& placed) {
  const std::size_t n = w.bodies.size();
  std::vector<Aabb> boxes(n);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) {
    boxes[i] = body_bounds(placed[i]);
    order[i] = i;
  }
  std::sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
    return boxes[l].lo.x < boxes[r].lo.x || (boxes[l].lo.x == boxes[r].lo.x && l < r);
  });
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t oi = 0; oi < n; ++oi) {
    const std::size_t i = order[oi];
    for (std::size_t oj = oi + 1; oj < n; ++oj) {
      const std::size_t j = order[oj];
      if (boxes[j].lo.x > boxes[i].hi.x) break;
      if (w.bodies[i].is_static && w.bodies[j].is_static) continue;
      if (!boxes[i].overlaps(boxes[j])) continue;
      pairs.emplace_back(std::min(i, j), std::max(i, j));
    }
  }
  std::sort(pairs.begin(), pairs.end());
  return pairs;
}

inline std::vector<PairManifold> detect(const World& w, const Placement& placed) {
  std::vector<PairManifold> out;
  for (const auto& [i, j] : broadphase(w, placed)) {
    for (const PlacedShape& pa : placed[i]) {
      for (const PlacedShape& pb : placed[j]) {
        if (auto m = collide(pa, pb)) out.push_back({i, j, *m});
      }
    }
  }
  return out;
}

inline double ground_mu(const Body& b, const PhysicsParams& p) {
  if (b.friction.ground_mu) return *b.friction.ground_mu;
  return b.role == BodyRole::WheeledBox ? p.mu * p.wheeled_mu_multiplier : p.mu;
}

// Exact solution of x' = -(a x + b x|x|) over dt, for x of fixed sign.
inline double drag_decay(double x, double a, double b, double dt) {
  const double s = std::abs(x);
  if (s == 0.0) return 0.0;
  double next;
  if (a > 0.0) {
    const double e = std::exp(-a * dt);
    next = a * s * e / (a + b * s * (1.0 - e));
  } else {
    next = s / (1.0 + b * s * dt);
  }
  return std::copysign(next, x);
}

inline void apply_external_forces(World& w) {
  const PhysicsParams& p = w.params;
  const double dt = p.dt;
  for (Body& b : w.bodies) {
    if (b.is_static) continue;
    if (b.drive) {
      b.velocity = b.pose.heading() * b.drive->forward;
      b.angular_velocity = b.drive->omega;
      continue;
    }
    if (p.drag_enabled) {
      const double speed = length(b.velocity);
      if (speed > 0.0) {
        const double next = drag_decay(speed, p.drag_linear / b.mass, p.drag_quadratic / b.mass, dt);
        b.velocity *= next / speed;
      }
      if (b.inertia > 0.0) {
        b.angular_velocity = drag_decay(b.angular_velocity, p.drag_angular_linear / b.inertia,
                                        p.drag_angular_quadratic / b.inertia, dt);
      }
    }
    const double mu = ground_mu(b, p);
    const double dv = mu * p.gravity * dt;
    const double speed = length(b.velocity);
    if (speed <= dv) b.velocity = {};
    else b.velocity -= b.velocity * (dv / speed);
    // Rotational analog: uniform pressure gives a torque of roughly mu*m*g*r_g.
    if (b.inertia > 0.0 && b.mass > 0.0) {
      const double gyration = std::sqrt(b.inertia / b.mass);
      const double dw = mu * p.gravity / gyration * dt;
      const double w_abs = std::abs(b.angular_velocity);
      b.angular_velocity = w_abs <= dw ? 0.0 : b.angular_velocity - std::copysign(dw, b.angular_velocity);
    }
  }
}

inline std::vector<SolverContact> prepare(const World& w, const std::vector<PairManifold>& manifolds) {
  const PhysicsParams& p = w.params;
  std::vector<SolverContact> out;
  out.reserve(manifolds.size());
  for (const PairManifold& pm : manifolds) {
    const Body& a = w.bodies[pm.a];
    const Body& b = w.bodies[pm.b];
    SolverContact c;
    c.a = pm.a;
    c.b = pm.b;
    c.normal = pm.manifold.normal;
    c.friction = p.contact_friction;
    c.count = pm.manifold.count;
    const double ima = a.inv_mass(), imb = b.inv_mass(), iia = a.inv_inertia(), iib = b.inv_inertia();
    const double e = std::max(a.friction.restitution, b.friction.restitution);
    const Vec2 t{c.normal.y, -c.normal.x};
    for (int k = 0; k < c.count; ++k) {
      SolverPoint& sp = c.points[k];
      const ManifoldPoint& mp = pm.manifold.points[k];
      sp.ra = mp.point - a.pose.position();
      sp.rb = mp.point - b.pose.position();
      const double rna = cross(sp.ra, c.normal), rnb = cross(sp.rb, c.normal);
      const double kn = ima + imb + iia * rna * rna + iib * rnb * rnb;
      sp.normal_mass = kn > 0.0 ? 1.0 / kn : 0.0;
      const double rta = cross(sp.ra, t), rtb = cross(sp.rb, t);
      const double kt = ima + imb + iia * rta * rta + iib * rtb * rtb;
      sp.tangent_mass = kt > 0.0 ? 1.0 / kt : 0.0;
      const Vec2 dv = b.velocity + cross(b.angular_velocity, sp.rb) - a.velocity - cross(a.angular_velocity, sp.ra);
      const double vn = dot(dv, c.normal);
      sp.velocity_bias = vn < -p.restitution_threshold ? -e * vn : 0.0;
      sp.position_bias = p.baumgarte / p.dt * std::max(mp.penetration - p.linear_slop, 0.0);
    }
    out.push_back(c);
  }
  return out;
}

inline void solve_velocities(World& w, std::vector<SolverContact>& contacts) {
  for (int it = 0; it < w.params.solver_iterations; ++it) {
    for (SolverContact& c : contacts) {
      Body& a = w.bodies[c.a];
      Body& b = w.bodies[c.b];
      const double ima = a.inv_mass(), imb = b.inv_mass(), iia = a.inv_inertia(), iib = b.inv_inertia();
      const Vec2 t{c.normal.y, -c.normal.x};
      for (int k = 0; k < c.count; ++k) {
        SolverPoint& sp = c.points[k];
        auto apply = [&](Vec2 impulse) {
          a.velocity -= impulse * ima;
          a.angular_velocity -= iia * cross(sp.ra, impulse);
          b.velocity += impulse * imb;
          b.angular_velocity += iib * cross(sp.rb, impulse);
        };
        Vec2 dv = b.velocity + cross(b.angular_velocity, sp.rb) - a.velocity - cross(a.angular_velocity, sp.ra);
        const double max_f = c.friction * sp.normal_impulse;
        const double lt = -dot(dv, t) * sp.tangent_mass;
        const double new_t = std::clamp(sp.tangent_impulse + lt, -max_f, max_f);
        apply(t * (new_t - sp.tangent_impulse));
        sp.tangent_impulse = new_t;

        dv = b.velocity + cross(b.angular_velocity, sp.rb) - a.velocity - cross(a.angular_velocity, sp.ra);
        const double ln = -sp.normal_mass * (dot(dv, c.normal) - sp.velocity_bias);
        const double new_n = std::max(sp.normal_impulse + ln, 0.0);
        apply(c.normal * (new_n - sp.normal_impulse));
        sp.normal_impulse = new_n;
      }
    }
  }
}

// Split-impulse Baumgarte correction: acts on pseudo velocities only, so it
// moves bodies apart without injecting kinetic energy.
inline void solve_pseudo_velocities(const World& w, std::vector<SolverContact>& contacts,
                                    std::vector<Vec2>& pv, std::vector<double>& pw) {
  for (int it = 0; it < w.params.solver_iterations; ++it) {
    for (SolverContact& c : contacts) {
      const Body& a = w.bodies[c.a];
      const Body& b = w.bodies[c.b];
      const double ima = a.inv_mass(), imb = b.inv_mass(), iia = a.inv_inertia(), iib = b.inv_inertia();
      for (int k = 0; k < c.count; ++k) {
        SolverPoint& sp = c.points[k];
        if (sp.position_bias == 0.0 && sp.pseudo_impulse == 0.0) continue;
        const Vec2 dv = pv[c.b] + cross(pw[c.b], sp.rb) - pv[c.a] - cross(pw[c.a], sp.ra);
        const double l = -sp.normal_mass * (dot(dv, c.normal) - sp.position_bias);
        const double next = std::max(sp.pseudo_impulse + l, 0.0);
        const Vec2 impulse = c.normal * (next - sp.pseudo_impulse);
        sp.pseudo_impulse = next;
        pv[c.a] -= impulse * ima;
        pw[c.a] -= iia * cross(sp.ra, impulse);
        pv[c.b] += impulse * imb;
        pw[c.b] += iib * cross(sp.rb, impulse);
      }
    }
  }
}

inline double max_depth(const std::vector<PairManifold>& manifolds) {
  double d = 0.0;
  for (const PairManifold& m : manifolds) d = std::max(d, m.manifold.depth);
  return d;
}

// Nonlinear position projection; returns the final contact set.
inline std::vector<PairManifold> project_positions(World& w) {
  const PhysicsParams& p = w.params;
  std::vector<PairManifold> manifolds = detect(w, place_all(w));
  for (int it = 0; it < p.max_projection_iterations; ++it) {
    if (max_depth(manifolds) <= p.penetration_tolerance) break;
    for (const PairManifold& pm : manifolds) {
      Body& a = w.bodies[pm.a];
      Body& b = w.bodies[pm.b];
      const double ima = a.inv_mass(), imb = b.inv_mass(), iia = a.inv_inertia(), iib = b.inv_inertia();
      const Vec2 n = pm.manifold.normal;
      for (int k = 0; k < pm.manifold.count; ++k) {
        const ManifoldPoint& mp = pm.manifold.points[k];
        const double correction = (mp.penetration - p.linear_slop) / pm.manifold.count;
        if (correction <= 0.0) continue;
        const Vec2 ra = mp.point - a.pose.position(), rb = mp.point - b.pose.position();
        const double rna = cross(ra, n), rnb = cross(rb, n);
        const double k_eff = ima + imb + iia * rna * rna + iib * rnb * rnb;
        if (k_eff <= 0.0) continue;
        const Vec2 impulse = n * (correction / k_eff);
        a.pose.x -= impulse.x * ima;
        a.pose.y -= impulse.y * ima;
        a.pose.theta = wrap_angle(a.pose.theta - iia * cross(ra, impulse));
        b.pose.x += impulse.x * imb;
        b.pose.y += impulse.y * imb;
        b.pose.theta = wrap_angle(b.pose.theta + iib * cross(rb, impulse));
      }
    }
    manifolds = detect(w, place_all(w));
  }
  return manifolds;
}

}  // namespace detail

/// Advances the world by one fixed step of `world.params.dt`.
///
/// Order: commanded drives / drag / ground friction, contact detection,
/// sequential-impulse velocity solve, split-impulse Baumgarte, integration,
/// then position projection so no pair is left deeper than the tolerance.
inline void advance_in_place(World& w) {
  using namespace detail;
  const PhysicsParams& p = w.params;
  apply_external_forces(w);

  std::vector<SolverContact> contacts = prepare(w, detect(w, place_all(w)));
  solve_velocities(w, contacts);

  std::vector<Vec2> pv(w.bodies.size());
  std::vector<double> pw(w.bodies.size(), 0.0);
  solve_pseudo_velocities(w, contacts, pv, pw);

  for (std::size_t i = 0; i < w.bodies.size(); ++i) {
    Body& b = w.bodies[i];
    if (b.is_static) continue;
    const double speed = length(b.velocity);
    if (!(speed <= p.max_speed)) {
      throw Error(ErrorKind::SolverDivergence,
                  "body " + std::to_string(b.id) + " reached speed " + std::to_string(speed) + " m/s");
    }
    b.pose.x += (b.velocity.x + pv[i].x) * p.dt;
    b.pose.y += (b.velocity.y + pv[i].y) * p.dt;
    b.pose.theta = wrap_angle(b.pose.theta + (b.angular_velocity + pw[i]) * p.dt);
  }

  const std::vector<PairManifold> final_contacts = project_positions(w);
  w.contacts.clear();
  for (const PairManifold& pm : final_contacts) {
    Contact c;
    c.body_a = w.bodies[pm.a].id;
    c.body_b = w.bodies[pm.b].id;
    c.normal = pm.manifold.normal;
    c.penetration = pm.manifold.depth;
    for (int k = 0; k < pm.manifold.count; ++k) c.point += pm.manifold.points[k].point;
    c.point = c.point / static_cast<double>(pm.manifold.count);
    w.contacts.push_back(c);
  }
  ++w.tick;
}

/// Value-semantics wrapper: `dt` must equal the world's configured step.
inline World advance(World w, double dt) {
  if (dt != w.params.dt) {
    throw Error(ErrorKind::InvalidSpec, "advance: dt must equal the configured physics step");
  }
  advance_in_place(w);
  return w;
}

// Deepest overlap across all body pairs in the current configuration.
inline double max_penetration(const World& w) {
  return detail::max_depth(detail::detect(w, detail::place_all(w)));
}

}  // namespace benchpush
