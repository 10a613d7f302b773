#pragma once

#include <memory>
#include <vector>

#include "benchpush/static_map.hpp"

namespace benchpush {

struct ObjectRecord {
  int id = 0;
  double mass = 0.0;
  double path_length = 0.0;  // centroid arc length, jitter-filtered
  Vec2 initial_centroid;
  bool success = false;      // final-state sub-task completion
};

/// Everything the metrics need from one episode.
struct EpisodeTrace {
  EnvKind kind = EnvKind::Maze;
  double robot_mass = 0.0;
  double robot_path_length = 0.0;
  Vec2 robot_start;
  bool success = false;
  std::vector<ObjectRecord> objects;
  std::shared_ptr<const StaticMap> map;

  int total_objects() const { return static_cast<int>(objects.size()); }
  int completed_objects() const {
    int k = 0;
    for (const ObjectRecord& o : objects) k += o.success ? 1 : 0;
    return k;
  }
  // Sum of m_i * l_i over movable objects only.
  double object_work() const {
    double w = 0.0;
    for (const ObjectRecord& o : objects) w += o.mass * o.path_length;
    return w;
  }
};

}  // namespace benchpush
