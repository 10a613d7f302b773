#pragma once

// Independent reference implementations used to check the library. Kept
// deliberately naive: brute force over clarity of speed.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "benchpush/body.hpp"
#include "benchpush/grid.hpp"
#include "benchpush/metrics.hpp"

namespace oracle {

using benchpush::Vec2;

// Sutherland-Hodgman: clip `subject` by convex `clip` (both CCW).
inline std::vector<Vec2> clip_polygon(std::vector<Vec2> subject, const std::vector<Vec2>& clip) {
  for (std::size_t i = 0; i < clip.size() && !subject.empty(); ++i) {
    const Vec2 a = clip[i], b = clip[(i + 1) % clip.size()];
    auto inside = [&](Vec2 p) { return (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x) >= 0.0; };
    auto cut = [&](Vec2 p, Vec2 q) {
      const double d1 = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
      const double d2 = (b.x - a.x) * (q.y - a.y) - (b.y - a.y) * (q.x - a.x);
      const double t = d1 / (d1 - d2);
      return Vec2{p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)};
    };
    std::vector<Vec2> out;
    for (std::size_t j = 0; j < subject.size(); ++j) {
      const Vec2 p = subject[j], q = subject[(j + 1) % subject.size()];
      const bool pin = inside(p), qin = inside(q);
      if (pin) out.push_back(p);
      if (pin != qin) out.push_back(cut(p, q));
    }
    subject = std::move(out);
  }
  return subject;
}

inline double shoelace(const std::vector<Vec2>& p) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const Vec2 a = p[i], b = p[(i + 1) % p.size()];
    s += a.x * b.y - b.x * a.y;
  }
  return 0.5 * std::abs(s);
}

inline double intersection_area(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
  const std::vector<Vec2> c = clip_polygon(a, b);
  return c.size() < 3 ? 0.0 : shoelace(c);
}

// Random convex polygon: hull of `n` points in a disc of radius r, centered at the origin.
inline std::vector<Vec2> random_convex(std::mt19937_64& rng, double r, int n) {
  std::uniform_real_distribution<double> ang(0.0, 2.0 * benchpush::kPi), rad(0.3, 1.0);
  std::vector<Vec2> pts;
  for (int i = 0; i < n; ++i) {
    const double t = ang(rng), s = r * rad(rng);
    pts.push_back({s * std::cos(t), s * std::sin(t)});
  }
  std::vector<Vec2> hull = benchpush::convex_hull(pts);
  const Vec2 c = benchpush::polygon_centroid(hull);
  for (Vec2& p : hull) p -= c;
  return hull;
}

inline std::vector<Vec2> transformed(const std::vector<Vec2>& poly, const benchpush::Pose& pose) {
  std::vector<Vec2> out;
  for (const Vec2& v : poly) out.push_back(pose.to_world(v));
  return out;
}

// Bellman-Ford relaxation over the 8-connected grid with the no-corner-cutting rule.
inline std::vector<double> bellman_ford(const benchpush::OccupancyGrid& g, const std::vector<benchpush::Cell>& sources) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> d(g.size(), inf);
  for (const auto& s : sources) if (!g.occupied(s)) d[g.index(s)] = 0.0;
  const int dirs[8][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {-1, 1}, {1, -1}, {-1, -1}};
  for (std::size_t round = 0; round < g.size(); ++round) {
    bool changed = false;
    for (int y = 0; y < g.height(); ++y) {
      for (int x = 0; x < g.width(); ++x) {
        if (g.occupied({x, y}) || d[g.index({x, y})] == inf) continue;
        for (const auto& dir : dirs) {
          const int nx = x + dir[0], ny = y + dir[1];
          if (g.occupied({nx, ny})) continue;
          const bool diag = dir[0] != 0 && dir[1] != 0;
          if (diag && (g.occupied({nx, y}) || g.occupied({x, ny}))) continue;
          const double w = diag ? std::sqrt(2.0) * g.resolution() : g.resolution();
          double& t = d[g.index({nx, ny})];
          if (d[g.index({x, y})] + w < t) {
            t = d[g.index({x, y})] + w;
            changed = true;
          }
        }
      }
    }
    if (!changed) break;
  }
  return d;
}

// Minimum spanning-tree weight by enumerating every (n-1)-edge subset.
inline double brute_force_mst(int n, const std::vector<benchpush::WeightedEdge>& edges) {
  if (n <= 1) return 0.0;
  const int m = static_cast<int>(edges.size());
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> pick;
  std::function<void(int)> rec = [&](int start) {
    if (static_cast<int>(pick.size()) == n - 1) {
      std::vector<int> comp(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) comp[static_cast<std::size_t>(i)] = i;
      std::function<int(int)> find = [&](int x) { return comp[static_cast<std::size_t>(x)] == x ? x : comp[static_cast<std::size_t>(x)] = find(comp[static_cast<std::size_t>(x)]); };
      double w = 0.0;
      for (int e : pick) {
        const auto& ed = edges[static_cast<std::size_t>(e)];
        const int a = find(ed.u), b = find(ed.v);
        if (a == b) return;
        comp[static_cast<std::size_t>(a)] = b;
        w += ed.w;
      }
      best = std::min(best, w);
      return;
    }
    for (int e = start; e < m; ++e) {
      pick.push_back(e);
      rec(e + 1);
      pick.pop_back();
    }
  };
  rec(0);
  return best;
}

// v' = -(a v + b v^2) by classical RK4 with a fine step.
inline double drag_speed(double v0, double a, double b, double t, int steps = 20000) {
  auto f = [&](double v) { return -(a * v + b * v * v); };
  double v = v0;
  const double h = t / steps;
  for (int i = 0; i < steps; ++i) {
    const double k1 = f(v), k2 = f(v + 0.5 * h * k1), k3 = f(v + 0.5 * h * k2), k4 = f(v + h * k3);
    v += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return v;
}

}  // namespace oracle
