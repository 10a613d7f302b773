#pragma once

#include <cmath>
#include <random>
#include <unordered_map>
#include <vector>

#include "benchpush/body.hpp"
#include "benchpush/collision.hpp"

namespace benchpush {

struct IceFieldParams {
  double median_radius = 0.3;  // characteristic floe radius (m), log-normal
  double radius_sigma = 0.35;  // log-space standard deviation
  double min_radius = 0.05;
  double max_radius = 0.6;
  double gap = 0.01;           // minimum spacing between floes and to the channel edge
  double density = 4.0;        // kg/m^2
  int max_attempts = 10000;    // per floe
};

namespace detail {

inline std::vector<Vec2> random_floe_outline(double radius, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> count(6, 10);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * kPi);
  std::uniform_real_distribution<double> scale(0.7, 1.0);
  const int n = count(rng);
  std::vector<Vec2> pts;
  for (int i = 0; i < n; ++i) {
    const double a = angle(rng);
    const double r = radius * scale(rng);
    pts.push_back({r * std::cos(a), r * std::sin(a)});
  }
  return convex_hull(std::move(pts));
}

// Lower bound on the distance between two convex polygons (SAT separation).
inline double polygon_separation(const PlacedShape& a, const PlacedShape& b) {
  return std::max(max_separation(a, b).separation, max_separation(b, a).separation);
}

class FloeIndex {
 public:
  explicit FloeIndex(double cell) : cell_(cell) {}

  void insert(std::size_t idx, const Aabb& box) {
    for (long long y = key(box.lo.y); y <= key(box.hi.y); ++y)
      for (long long x = key(box.lo.x); x <= key(box.hi.x); ++x) bins_[pack(x, y)].push_back(idx);
  }

  template <typename Fn>
  bool any_of(const Aabb& box, Fn&& fn) const {
    for (long long y = key(box.lo.y); y <= key(box.hi.y); ++y) {
      for (long long x = key(box.lo.x); x <= key(box.hi.x); ++x) {
        const auto it = bins_.find(pack(x, y));
        if (it == bins_.end()) continue;
        for (std::size_t idx : it->second) if (fn(idx)) return true;
      }
    }
    return false;
  }

 private:
  long long key(double v) const { return static_cast<long long>(std::floor(v / cell_)); }
  static long long pack(long long x, long long y) { return (x << 32) ^ (y & 0xffffffffLL); }

  double cell_;
  std::unordered_map<long long, std::vector<std::size_t>> bins_;
};

}  // namespace detail

/// Random non-overlapping convex floes filling `channel` to the requested area
/// fraction. Floes that cannot be placed are shrunk and retried; the last floe
/// is sized to the remaining deficit so the realized fraction lands on target.
inline std::vector<Body> generate_ice_field(const Rect& channel, double concentration, std::mt19937_64& rng,
                                            int first_id, const IceFieldParams& params = {}) {
  if (!(concentration >= 0.0 && concentration <= 0.5)) {
    throw Error(ErrorKind::PlacementFailure, "ice concentration must lie in [0, 0.5]");
  }
  std::vector<Body> floes;
  if (concentration == 0.0) return floes;

  const double channel_area = channel.area();
  const double target = concentration * channel_area;
  const double tolerance = 0.002 * channel_area;
  std::lognormal_distribution<double> radius_dist(std::log(params.median_radius), params.radius_sigma);
  std::uniform_real_distribution<double> ux(channel.x_min, channel.x_max);
  std::uniform_real_distribution<double> uy(channel.y_min, channel.y_max);
  std::uniform_real_distribution<double> ua(-kPi, kPi);
  const Rect inner = channel.inflated(-params.gap);

  std::vector<PlacedShape> placed;
  detail::FloeIndex index(2.0 * params.max_radius);
  double covered = 0.0;
  int dropped_in_row = 0;

  while (covered < target - tolerance) {
    const double radius = std::clamp(radius_dist(rng), params.min_radius, params.max_radius);
    std::vector<Vec2> outline = detail::random_floe_outline(radius, rng);
    if (outline.size() < 3) continue;
    double area = polygon_area(outline);
    const double remaining = target - covered;
    if (area > remaining) {
      const double k = std::sqrt(remaining / area);
      for (Vec2& p : outline) p *= k;
      area = remaining;
    }
    CenteredPolygon shape = centered_polygon(outline);
    int attempts = 0;
    bool done = false;
    while (!done) {
      for (int t = 0; t < 200 && !done; ++t, ++attempts) {
        if (attempts >= params.max_attempts) {
          throw Error(ErrorKind::PlacementFailure, "could not place ice floe after " +
                                                       std::to_string(params.max_attempts) + " attempts");
        }
        const Pose pose{ux(rng), uy(rng), ua(rng)};
        PlacedShape candidate = place(shape.shape, pose);
        bool inside = true;
        for (const Vec2& v : candidate.vertices) inside = inside && inner.contains(v);
        if (!inside) continue;
        const Aabb query{candidate.bounds.lo - Vec2{params.gap, params.gap},
                         candidate.bounds.hi + Vec2{params.gap, params.gap}};
        const bool blocked = index.any_of(query, [&](std::size_t i) {
          return placed[i].bounds.overlaps(query) && detail::polygon_separation(candidate, placed[i]) < params.gap;
        });
        if (blocked) continue;
        const std::size_t idx = placed.size();
        placed.push_back(candidate);
        index.insert(idx, candidate.bounds);
        const double mass = params.density * shape.shape.area();
        Body floe = make_dynamic_body(first_id + static_cast<int>(floes.size()), BodyRole::IceFloe,
                                      shape.shape, pose, mass);
        floes.push_back(std::move(floe));
        covered += shape.shape.area();
        dropped_in_row = 0;
        done = true;
      }
      if (!done) {
        // Shrink and retry; tiny floes are dropped rather than forced in.
        std::vector<Vec2> pts = shape.shape.vertices();
        for (Vec2& p : pts) p *= 0.85;
        if (std::sqrt(polygon_area(pts) / kPi) < params.min_radius * 0.5) {
          if (++dropped_in_row > 100) {
            throw Error(ErrorKind::PlacementFailure, "ice field saturated before reaching target concentration");
          }
          break;
        }
        shape = centered_polygon(pts);
      }
    }
  }
  return floes;
}

inline double ice_area(const std::vector<Body>& floes) {
  double a = 0.0;
  for (const Body& f : floes) for (const Shape& s : f.parts) a += s.area();
  return a;
}

}  // namespace benchpush
