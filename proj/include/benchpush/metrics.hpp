#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "benchpush/grid.hpp"
#include "benchpush/static_map.hpp"
#include "benchpush/trace.hpp"

namespace benchpush {

struct MetricsReport {
  std::optional<double> e_nav;
  std::optional<double> i_nav;
  std::optional<double> s_manip;
  std::optional<double> e_manip;
  std::optional<double> i_manip;
  std::vector<std::string> warnings;
  std::optional<std::string> error;
};

struct WeightedEdge {
  int u = 0;
  int v = 0;
  double w = 0.0;
};

struct SpanningTree {
  double weight = 0.0;
  std::vector<WeightedEdge> edges;
};

namespace detail {

class DisjointSets {
 public:
  explicit DisjointSets(int n) : parent_(static_cast<std::size_t>(n)), rank_(static_cast<std::size_t>(n), 0) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }
  int find(int x) {
    while (parent_[static_cast<std::size_t>(x)] != x) {
      parent_[static_cast<std::size_t>(x)] = parent_[static_cast<std::size_t>(parent_[static_cast<std::size_t>(x)])];
      x = parent_[static_cast<std::size_t>(x)];
    }
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (rank_[static_cast<std::size_t>(a)] < rank_[static_cast<std::size_t>(b)]) std::swap(a, b);
    parent_[static_cast<std::size_t>(b)] = a;
    if (rank_[static_cast<std::size_t>(a)] == rank_[static_cast<std::size_t>(b)]) ++rank_[static_cast<std::size_t>(a)];
    return true;
  }

 private:
  std::vector<int> parent_;
  std::vector<int> rank_;
};

}  // namespace detail

/// Kruskal's algorithm. Ties are broken by (u, v) so the tree is deterministic.
/// Infinite edges are ignored; a disconnected graph raises `Unreachable`.
inline SpanningTree minimum_spanning_tree(int n, std::vector<WeightedEdge> edges) {
  SpanningTree tree;
  if (n <= 1) return tree;
  for (WeightedEdge& e : edges) if (e.u > e.v) std::swap(e.u, e.v);
  std::sort(edges.begin(), edges.end(), [](const WeightedEdge& a, const WeightedEdge& b) {
    return std::tie(a.w, a.u, a.v) < std::tie(b.w, b.u, b.v);
  });
  detail::DisjointSets sets(n);
  for (const WeightedEdge& e : edges) {
    if (!std::isfinite(e.w)) break;
    if (sets.unite(e.u, e.v)) {
      tree.weight += e.w;
      tree.edges.push_back(e);
      if (static_cast<int>(tree.edges.size()) == n - 1) return tree;
    }
  }
  throw Error(ErrorKind::Unreachable, "graph is disconnected; some vertex is unreachable");
}

/// Vertex sequence of a depth-first walk over the doubled tree starting at
/// `root`; consecutive entries are tree neighbours, so its length is 2 * weight.
inline std::vector<int> euler_tour(int n, const std::vector<WeightedEdge>& edges, int root = 0) {
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  for (const WeightedEdge& e : edges) {
    adj[static_cast<std::size_t>(e.u)].push_back(e.v);
    adj[static_cast<std::size_t>(e.v)].push_back(e.u);
  }
  for (auto& a : adj) std::sort(a.begin(), a.end());
  std::vector<int> tour;
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  std::function<void(int)> visit = [&](int v) {
    seen[static_cast<std::size_t>(v)] = true;
    tour.push_back(v);
    for (int w : adj[static_cast<std::size_t>(v)]) {
      if (seen[static_cast<std::size_t>(w)]) continue;
      visit(w);
      tour.push_back(v);
    }
  };
  if (n > 0) visit(root);
  return tour;
}

/// Graph G over the robot start, each completed object's initial centroid and
/// the goal point nearest to it, with geodesic edge weights.
struct ManipulationGraph {
  std::vector<Vec2> vertices;  // 0 = robot start, then (object, goal) pairs
  std::vector<WeightedEdge> edges;
  std::vector<double> object_to_goal;  // l_i* for each completed object, in order
};

namespace detail {

struct GoalQuery {
  DistanceField field;
  double to_goal = kUnreachable;
  Cell nearest_goal;
};

// Single-source field from `p` plus its geodesically nearest goal cell.
inline GoalQuery query_from(const OccupancyGrid& grid, Vec2 p, const std::vector<Cell>& goals) {
  const Cell src = grid.cell_of(p);
  if (grid.occupied(src)) throw Error(ErrorKind::StartInObstacle, "object centroid lies in a static obstacle");
  GoalQuery q;
  q.field = geodesic_distance_field(grid, src);
  for (const Cell& g : goals) {
    const double d = q.field.at(g);
    if (d < q.to_goal) {
      q.to_goal = d;
      q.nearest_goal = g;
    }
  }
  return q;
}

}  // namespace detail

inline ManipulationGraph build_manipulation_graph(const EpisodeTrace& trace) {
  const StaticMap& map = *trace.map;
  const OccupancyGrid& grid = map.grid;
  const std::vector<Cell> goals = goal_cells(map);
  ManipulationGraph g;
  g.vertices.push_back(trace.robot_start);
  std::vector<detail::GoalQuery> queries;
  std::vector<Cell> object_cells;
  for (const ObjectRecord& o : trace.objects) {
    if (!o.success) continue;
    detail::GoalQuery q = detail::query_from(grid, o.initial_centroid, goals);
    if (!std::isfinite(q.to_goal)) throw Error(ErrorKind::Unreachable, "goal unreachable from object " + std::to_string(o.id));
    object_cells.push_back(grid.cell_of(o.initial_centroid));
    g.vertices.push_back(o.initial_centroid);
    g.vertices.push_back(grid.center(q.nearest_goal));
    g.object_to_goal.push_back(q.to_goal);
    queries.push_back(std::move(q));
  }
  const Cell robot_cell = grid.cell_of(trace.robot_start);
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const int oi = 1 + 2 * static_cast<int>(i);
    g.edges.push_back({0, oi, queries[i].field.at(robot_cell)});
    g.edges.push_back({oi, oi + 1, queries[i].to_goal});
    for (std::size_t j = i + 1; j < queries.size(); ++j) {
      g.edges.push_back({oi, 1 + 2 * static_cast<int>(j), queries[i].field.at(object_cells[j])});
    }
  }
  return g;
}

/// L*(O'): weight of the minimum spanning tree of graph G (0 when no sub-task
/// was completed).
inline double mst_lower_bound(const EpisodeTrace& trace) {
  if (trace.completed_objects() == 0) return 0.0;
  const ManipulationGraph g = build_manipulation_graph(trace);
  return minimum_spanning_tree(static_cast<int>(g.vertices.size()), g.edges).weight;
}

/// Shortest static-obstacle-avoiding distance from the robot start to the goal.
inline double optimal_robot_path(const EpisodeTrace& trace) {
  const std::vector<Cell> goals = goal_cells(*trace.map);
  return shortest_path_length(trace.map->grid, trace.robot_start, goals);
}

/// (E_nav, I_nav). A robot that never moved gets E = 0 and I = 1.
inline MetricsReport nav_scores(const EpisodeTrace& trace, std::optional<double> optimal = std::nullopt) {
  MetricsReport r;
  const double l0 = trace.robot_path_length;
  const double robot_work = trace.robot_mass * l0;
  if (l0 <= 0.0) {
    r.e_nav = 0.0;
    r.i_nav = 1.0;
    return r;
  }
  if (trace.success) {
    const double l_star = optimal ? *optimal : optimal_robot_path(trace);
    r.e_nav = std::isfinite(l_star) ? l_star / l0 : 0.0;
  } else {
    r.e_nav = 0.0;
  }
  r.i_nav = robot_work / (robot_work + trace.object_work());
  return r;
}

inline constexpr double kClampTolerance = 1e-9;

/// (S_manip, E_manip, I_manip).
inline MetricsReport manip_scores(const EpisodeTrace& trace) {
  MetricsReport r;
  const int k = trace.total_objects();
  const int k_done = trace.completed_objects();
  if (k < 1) throw Error(ErrorKind::CorruptTrace, "manipulation trace has no objects");
  r.s_manip = static_cast<double>(k_done) / k;
  const double l0 = trace.robot_path_length;
  if (l0 <= 0.0) {
    if (k_done > 0 && trace.object_work() > 0.0) {
      throw Error(ErrorKind::CorruptTrace, "objects were moved and completed but the robot never moved");
    }
    r.e_manip = 0.0;
    r.i_manip = 1.0;
    return r;
  }
  double ideal = trace.robot_mass * l0;
  if (k_done > 0) {
    const ManipulationGraph g = build_manipulation_graph(trace);
    r.e_manip = minimum_spanning_tree(static_cast<int>(g.vertices.size()), g.edges).weight / l0;
    std::size_t j = 0;
    for (const ObjectRecord& o : trace.objects) {
      if (o.success) ideal += o.mass * g.object_to_goal[j++];
    }
  } else {
    r.e_manip = 0.0;
  }
  double i = ideal / (trace.robot_mass * l0 + trace.object_work());
  if (i > 1.0) {
    if (i - 1.0 < kClampTolerance) {
      i = 1.0;
    } else {
      r.warnings.push_back("I_manip exceeds 1 (" + std::to_string(i) + "): geodesic estimate longer than realized path");
    }
  }
  r.i_manip = i;
  return r;
}

/// Scores for the trace's task class; failures are reported in `error`.
inline MetricsReport compute_metrics(const EpisodeTrace& trace) {
  try {
    return task_class(trace.kind) == TaskClass::Navigation ? nav_scores(trace) : manip_scores(trace);
  } catch (const Error& e) {
    MetricsReport r;
    r.error = e.what();
    return r;
  }
}

// ---------------------------------------------------------------------------
// Report table

struct EpisodeRow {
  std::string env;
  std::string variant;
  std::string policy;
  std::uint64_t seed = 0;
  MetricsReport metrics;
  int steps = 0;
  double wall_time = 0.0;  // seconds
  bool failed = false;
};

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // population
  int count = 0;
};

inline Summary summarize(const std::vector<double>& xs) {
  Summary s;
  s.count = static_cast<int>(xs.size());
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(var / static_cast<double>(xs.size()));
  return s;
}

namespace detail {

inline std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

inline std::string fmt(const Summary& s) {
  if (s.count == 0) return {};
  return fmt(s.mean) + "±" + fmt(s.std);
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace detail

inline const char* kCsvHeader = "env,variant,policy,seed,E_nav,I_nav,S_manip,E_manip,I_manip,steps,wall_time";

/// Per-episode rows grouped by (env, variant, policy) in first-appearance
/// order, each group sorted by seed and followed by one "mean±std" row.
inline std::string metrics_csv(const std::vector<EpisodeRow>& rows) {
  std::vector<std::tuple<std::string, std::string, std::string>> order;
  std::map<std::tuple<std::string, std::string, std::string>, std::vector<const EpisodeRow*>> groups;
  for (const EpisodeRow& r : rows) {
    auto key = std::make_tuple(r.env, r.variant, r.policy);
    if (!groups.count(key)) order.push_back(key);
    groups[key].push_back(&r);
  }
  std::ostringstream out;
  out << kCsvHeader << "\n";
  for (const auto& key : order) {
    std::vector<const EpisodeRow*>& g = groups[key];
    std::stable_sort(g.begin(), g.end(), [](const EpisodeRow* a, const EpisodeRow* b) { return a->seed < b->seed; });
    std::vector<double> cols[7];
    const std::string prefix = detail::csv_field(std::get<0>(key)) + "," + detail::csv_field(std::get<1>(key)) + "," +
                               detail::csv_field(std::get<2>(key)) + ",";
    for (const EpisodeRow* r : g) {
      const MetricsReport& m = r->metrics;
      out << prefix << r->seed << "," << detail::fmt(m.e_nav) << "," << detail::fmt(m.i_nav) << ","
          << detail::fmt(m.s_manip) << "," << detail::fmt(m.e_manip) << "," << detail::fmt(m.i_manip) << ","
          << r->steps << "," << detail::fmt(r->wall_time) << "\n";
      const std::optional<double> vals[5] = {m.e_nav, m.i_nav, m.s_manip, m.e_manip, m.i_manip};
      for (int c = 0; c < 5; ++c) if (vals[c]) cols[c].push_back(*vals[c]);
      cols[5].push_back(r->steps);
      cols[6].push_back(r->wall_time);
    }
    out << prefix << "mean±std";
    for (auto& c : cols) out << "," << detail::fmt(summarize(c));
    out << "\n";
  }
  return out.str();
}

}  // namespace benchpush
