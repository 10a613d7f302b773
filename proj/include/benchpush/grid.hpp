#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <span>
#include <vector>

#include "benchpush/error.hpp"
#include "benchpush/geometry.hpp"

namespace benchpush {

inline constexpr double kUnreachable = std::numeric_limits<double>::infinity();

struct Cell {
  int x = 0;
  int y = 0;
  friend bool operator==(Cell, Cell) = default;
};

/// Occupancy of static obstacles only. Cell (x, y) covers
/// [origin + (x, y) * resolution, origin + (x + 1, y + 1) * resolution).
class OccupancyGrid {
 public:
  OccupancyGrid() = default;
  OccupancyGrid(int width, int height, double resolution, Vec2 origin)
      : width_(width), height_(height), resolution_(resolution), origin_(origin),
        cells_(static_cast<std::size_t>(width) * height, 0) {
    if (width <= 0 || height <= 0) throw Error(ErrorKind::InvalidSpec, "grid dimensions must be positive");
    if (!(resolution > 0.0)) throw Error(ErrorKind::InvalidSpec, "grid resolution must be > 0");
  }

  // Grid exactly covering `area` (rounded up to whole cells).
  static OccupancyGrid covering(const Rect& area, double resolution) {
    const int w = static_cast<int>(std::ceil(area.width() / resolution - 1e-9));
    const int h = static_cast<int>(std::ceil(area.height() / resolution - 1e-9));
    return OccupancyGrid(w, h, resolution, {area.x_min, area.y_min});
  }

  int width() const { return width_; }
  int height() const { return height_; }
  double resolution() const { return resolution_; }
  Vec2 origin() const { return origin_; }
  std::size_t size() const { return cells_.size(); }

  bool in_bounds(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }
  std::size_t index(Cell c) const { return static_cast<std::size_t>(c.y) * width_ + c.x; }
  Cell cell_at(std::size_t index) const {
    return {static_cast<int>(index % width_), static_cast<int>(index / width_)};
  }

  // Out-of-bounds cells count as occupied.
  bool occupied(Cell c) const { return !in_bounds(c) || cells_[index(c)] != 0; }
  bool free(Cell c) const { return !occupied(c); }
  void set(Cell c, bool occ) { cells_.at(index(c)) = occ ? 1 : 0; }

  Cell cell_of(Vec2 p) const {
    return {static_cast<int>(std::floor((p.x - origin_.x) / resolution_)),
            static_cast<int>(std::floor((p.y - origin_.y) / resolution_))};
  }
  Vec2 center(Cell c) const {
    return {origin_.x + (c.x + 0.5) * resolution_, origin_.y + (c.y + 0.5) * resolution_};
  }
  bool occupied_at(Vec2 p) const { return occupied(cell_of(p)); }

  // Marks every cell whose center lies inside `r`.
  void fill_rect(const Rect& r, bool occ = true) {
    const Cell lo = cell_of({r.x_min, r.y_min});
    const Cell hi = cell_of({r.x_max, r.y_max});
    for (int y = std::max(lo.y, 0); y <= std::min(hi.y, height_ - 1); ++y) {
      for (int x = std::max(lo.x, 0); x <= std::min(hi.x, width_ - 1); ++x) {
        if (r.contains(center({x, y}))) set({x, y}, occ);
      }
    }
  }

  // Cells within `radius` of any occupied cell (or the grid edge) become occupied.
  OccupancyGrid inflated(double radius) const {
    OccupancyGrid out = *this;
    const int k = static_cast<int>(std::ceil(radius / resolution_));
    std::vector<Cell> kernel;
    for (int dy = -k; dy <= k; ++dy)
      for (int dx = -k; dx <= k; ++dx)
        if ((dx * dx + dy * dy) * resolution_ * resolution_ <= radius * radius) kernel.push_back({dx, dy});
    for (int y = -k; y < height_ + k; ++y) {
      for (int x = -k; x < width_ + k; ++x) {
        const Cell c{x, y};
        if (!occupied(c)) continue;
        // Interior obstacle cells cannot affect free space beyond their boundary neighbours.
        if (in_bounds(c) && occupied({x + 1, y}) && occupied({x - 1, y}) && occupied({x, y + 1}) &&
            occupied({x, y - 1}))
          continue;
        for (const Cell& d : kernel) {
          const Cell n{x + d.x, y + d.y};
          if (out.in_bounds(n)) out.set(n, true);
        }
      }
    }
    return out;
  }

  const std::vector<std::uint8_t>& data() const { return cells_; }

 private:
  int width_ = 0;
  int height_ = 0;
  double resolution_ = 1.0;
  Vec2 origin_;
  std::vector<std::uint8_t> cells_;
};

/// Per-cell geodesic distances (meters) on the same lattice as an OccupancyGrid.
class DistanceField {
 public:
  DistanceField() = default;
  explicit DistanceField(const OccupancyGrid& g)
      : width_(g.width()), height_(g.height()), resolution_(g.resolution()), origin_(g.origin()),
        values_(g.size(), kUnreachable) {}

  int width() const { return width_; }
  int height() const { return height_; }
  double resolution() const { return resolution_; }
  Vec2 origin() const { return origin_; }
  bool in_bounds(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }
  std::size_t index(Cell c) const { return static_cast<std::size_t>(c.y) * width_ + c.x; }
  double at(Cell c) const { return in_bounds(c) ? values_[index(c)] : kUnreachable; }
  double& mutable_at(Cell c) { return values_.at(index(c)); }
  const std::vector<double>& values() const { return values_; }

  Cell cell_of(Vec2 p) const {
    return {static_cast<int>(std::floor((p.x - origin_.x) / resolution_)),
            static_cast<int>(std::floor((p.y - origin_.y) / resolution_))};
  }
  Vec2 center(Cell c) const {
    return {origin_.x + (c.x + 0.5) * resolution_, origin_.y + (c.y + 0.5) * resolution_};
  }

  double nearest(Vec2 p) const { return at(cell_of(p)); }

  // Bilinear interpolation over the finite corner values; +inf if none are finite.
  double bilinear(Vec2 p) const {
    const double u = (p.x - origin_.x) / resolution_ - 0.5;
    const double v = (p.y - origin_.y) / resolution_ - 0.5;
    const int x0 = static_cast<int>(std::floor(u)), y0 = static_cast<int>(std::floor(v));
    const double fx = u - x0, fy = v - y0;
    const double w[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
    const Cell c[4] = {{x0, y0}, {x0 + 1, y0}, {x0, y0 + 1}, {x0 + 1, y0 + 1}};
    double sum = 0.0, wsum = 0.0;
    for (int i = 0; i < 4; ++i) {
      const double d = at(c[i]);
      if (std::isfinite(d) && w[i] > 0.0) {
        sum += w[i] * d;
        wsum += w[i];
      }
    }
    if (wsum > 0.0) return sum / wsum;
    return nearest(p);
  }

  double max_finite() const {
    double m = 0.0;
    for (double d : values_) if (std::isfinite(d)) m = std::max(m, d);
    return m;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  double resolution_ = 1.0;
  Vec2 origin_;
  std::vector<double> values_;
};

struct GridStep {
  int dx;
  int dy;
  bool diagonal;
};

// Straight moves first so that descent prefers axis-aligned steps on ties.
inline constexpr GridStep kNeighbours[8] = {{1, 0, false},  {-1, 0, false}, {0, 1, false},  {0, -1, false},
                                            {1, 1, true},   {-1, 1, true},  {1, -1, true}, {-1, -1, true}};

// A diagonal move may not cut the corner of an occupied cell.
inline bool can_move(const OccupancyGrid& g, Cell from, const GridStep& s) {
  const Cell to{from.x + s.dx, from.y + s.dy};
  if (g.occupied(to)) return false;
  if (s.diagonal && (g.occupied({from.x + s.dx, from.y}) || g.occupied({from.x, from.y + s.dy}))) return false;
  return true;
}

inline double step_cost(const OccupancyGrid& g, const GridStep& s) {
  return s.diagonal ? std::sqrt(2.0) * g.resolution() : g.resolution();
}

/// 8-connected Dijkstra from a set of source cells over free space. Occupied
/// or out-of-bounds sources are ignored; unreachable cells stay +inf.
inline DistanceField geodesic_distance_field(const OccupancyGrid& g, std::span<const Cell> sources) {
  DistanceField field(g);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  for (const Cell& c : sources) {
    if (g.occupied(c)) continue;
    field.mutable_at(c) = 0.0;
    open.push({0.0, g.index(c)});
  }
  const double straight = g.resolution(), diagonal = std::sqrt(2.0) * g.resolution();
  while (!open.empty()) {
    const auto [d, idx] = open.top();
    open.pop();
    const Cell c = g.cell_at(idx);
    if (d > field.at(c)) continue;
    for (const GridStep& s : kNeighbours) {
      if (!can_move(g, c, s)) continue;
      const Cell n{c.x + s.dx, c.y + s.dy};
      const double nd = d + (s.diagonal ? diagonal : straight);
      double& cur = field.mutable_at(n);
      if (nd < cur) {
        cur = nd;
        open.push({nd, g.index(n)});
      }
    }
  }
  return field;
}

inline DistanceField geodesic_distance_field(const OccupancyGrid& g, Cell source) {
  const Cell one[1] = {source};
  return geodesic_distance_field(g, std::span<const Cell>(one));
}

/// Shortest static-obstacle-avoiding path length from `start` to the nearest
/// goal cell; +inf if unreachable.
inline double shortest_path_length(const OccupancyGrid& g, Vec2 start, std::span<const Cell> goals) {
  const Cell s = g.cell_of(start);
  if (g.occupied(s)) throw Error(ErrorKind::StartInObstacle, "start point lies in a static obstacle");
  return geodesic_distance_field(g, goals).at(s);
}

// Walks downhill from `start` to a zero cell; returns cell centers (start first).
inline std::vector<Vec2> descent_path(const OccupancyGrid& g, const DistanceField& field, Cell start,
                                      std::size_t max_cells = 1u << 20) {
  std::vector<Vec2> out;
  if (!std::isfinite(field.at(start))) return out;
  Cell c = start;
  out.push_back(g.center(c));
  while (field.at(c) > 0.0 && out.size() < max_cells) {
    double best = field.at(c);
    std::optional<Cell> next;
    for (const GridStep& s : kNeighbours) {
      if (!can_move(g, c, s)) continue;
      const Cell n{c.x + s.dx, c.y + s.dy};
      if (field.at(n) < best) {
        best = field.at(n);
        next = n;
      }
    }
    if (!next) break;
    c = *next;
    out.push_back(g.center(c));
  }
  return out;
}

// True when the straight segment stays on free cells (sampled at half-cell spacing).
inline bool line_of_sight(const OccupancyGrid& g, Vec2 a, Vec2 b) {
  const double len = length(b - a);
  const int n = std::max(1, static_cast<int>(std::ceil(len / (0.5 * g.resolution()))));
  for (int i = 0; i <= n; ++i) {
    if (g.occupied_at(a + (b - a) * (static_cast<double>(i) / n))) return false;
  }
  return true;
}

}  // namespace benchpush
