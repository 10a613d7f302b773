// Acceptance suite. Each criterion prints one PASS/FAIL line; with an id
// argument only that criterion runs (one ctest per criterion).

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include "benchpush/harness.hpp"
#include "oracles.hpp"

using namespace benchpush;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fixed(double v, int digits = 6) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(digits);
  s << v;
  return s.str();
}

EnvSpec spec_of(EnvKind k, const std::string& variant = "") {
  EnvSpec s = EnvSpec::defaults(k);
  if (!variant.empty()) apply_variant(s, variant);
  return s;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Greedy pushing until `target` boxes are out, then rocking in place until truncation.
class StopAfter : public GreedyPushPolicy {
 public:
  explicit StopAfter(int target) : target_(target) {}
  Action act(const Observation& o, const Environment& env) override {
    int done = 0;
    for (int i = 0; i < env.object_count(); ++i) done += env.object_completed(i) ? 1 : 0;
    if (done < target_) return GreedyPushPolicy::act(o, env);
    if (!parked_) parked_ = env.robot().pose.theta;
    flip_ = !flip_;
    return Action::heading_to(wrap_angle(*parked_ + (flip_ ? kPi : 0.0)));
  }

 private:
  int target_;
  std::optional<double> parked_;
  bool flip_ = false;
};

Verdict s_manip_exact() {
  const auto t0 = std::chrono::steady_clock::now();
  EnvSpec s = spec_of(EnvKind::AreaClearing, "boxes=3");
  s.max_steps = 250;
  StopAfter p(2);
  const EpisodeResult r = run_episode(s, p, 0);
  const int completed = r.log.footer.at("outcome").at("completed").get<int>();
  const double secs = seconds_since(t0);
  const bool ok = !r.row.failed && completed == 2 && r.row.metrics.s_manip && *r.row.metrics.s_manip == 2.0 / 3.0 &&
                  secs < 10.0;
  return {ok, "completed " + std::to_string(completed) + "/3, S_manip = " +
                  (r.row.metrics.s_manip ? fixed(*r.row.metrics.s_manip, 17) : std::string("none")) + ", " +
                  fixed(secs, 2) + " s"};
}

Verdict i_nav_contact_free() {
  int ok = 0;
  std::string worst;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const EpisodeResult r = run_episode(spec_of(EnvKind::Maze, "layout=Corridor,obs=0"), "dt_follower", seed);
    const bool success = r.log.footer.at("outcome").at("success").get<bool>();
    if (success && r.row.metrics.i_nav && *r.row.metrics.i_nav == 1.0) ++ok;
    else worst = "seed " + std::to_string(seed) + " I_nav " + fixed(r.row.metrics.i_nav.value_or(-1.0));
  }
  return {ok == 10, std::to_string(ok) + "/10 successful corridor episodes with I_nav = 1.000000" +
                        (worst.empty() ? "" : " (" + worst + ")")};
}

// Weights are multiples of 1/1024, so every spanning-tree sum is exact in
// double precision regardless of summation order; small integers force ties.
std::vector<WeightedEdge> random_graph(std::mt19937_64& rng, int n) {
  std::uniform_int_distribution<int> w(0, 10240);
  std::uniform_int_distribution<int> extra(0, n * (n - 1) / 2);
  std::vector<WeightedEdge> e;
  for (int v = 1; v < n; ++v) e.push_back({std::uniform_int_distribution<int>(0, v - 1)(rng), v, w(rng) / 1024.0});
  const int k = extra(rng);
  for (int i = 0; i < k; ++i) {
    const int a = std::uniform_int_distribution<int>(0, n - 1)(rng), b = std::uniform_int_distribution<int>(0, n - 1)(rng);
    if (a != b) e.push_back({a, b, static_cast<double>(w(rng) / 1024)});
  }
  return e;
}

Verdict metric_oracles() {
  std::mt19937_64 rng(2024);
  int mst_ok = 0;
  for (int i = 0; i < 200; ++i) {
    const int n = 1 + i % 6;
    const auto edges = random_graph(rng, n);
    if (minimum_spanning_tree(n, edges).weight == oracle::brute_force_mst(n, edges)) ++mst_ok;
  }
  int grid_ok = 0;
  std::bernoulli_distribution wall(0.3);
  std::uniform_int_distribution<int> cell(0, 7);
  for (int i = 0; i < 50; ++i) {
    OccupancyGrid g(8, 8, 0.1, {0, 0});
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x) g.set({x, y}, wall(rng));
    const std::vector<Cell> src = {{cell(rng), cell(rng)}};
    if (geodesic_distance_field(g, src).values() == oracle::bellman_ford(g, src)) ++grid_ok;
  }
  return {mst_ok == 200 && grid_ok == 50,
          "MST " + std::to_string(mst_ok) + "/200 exact, Dijkstra " + std::to_string(grid_ok) + "/50 exact"};
}

Verdict e_nav_bound() {
  double lo = 1e9, hi = 0.0;
  int successes = 0;
  for (std::uint64_t seed = 0; successes < 100 && seed < 200; ++seed) {
    const EpisodeResult r = run_episode(spec_of(EnvKind::Maze, "layout=Open,obs=0"), "dt_follower", seed);
    if (!r.log.footer.at("outcome").at("success").get<bool>()) continue;
    ++successes;
    lo = std::min(lo, *r.row.metrics.e_nav);
    hi = std::max(hi, *r.row.metrics.e_nav);
  }
  double corridor = 1e9;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const EpisodeResult r = run_episode(spec_of(EnvKind::Maze, "layout=Corridor,obs=0"), "dt_follower", seed);
    corridor = std::min(corridor, r.row.metrics.e_nav.value_or(0.0));
  }
  const bool ok = successes == 100 && lo > 0.0 && hi <= 1.083 && corridor >= 0.95;
  return {ok, std::to_string(successes) + " open episodes, E_nav in [" + fixed(lo, 4) + ", " + fixed(hi, 4) +
                  "], corridor min " + fixed(corridor, 4)};
}

Verdict physics() {
  // Friction stop time: v0 / (mu g).
  World w;
  w.bodies.push_back(make_dynamic_body(1, BodyRole::Box, Shape::box(0.25, 0.25), Pose{}, 0.5));
  w.bodies[0].velocity = {1.0, 0.0};
  const double t_star = 1.0 / (w.params.mu * w.params.gravity);
  int n = 0;
  while (w.bodies[0].velocity.x > 0.0 && n < 1000) {
    advance_in_place(w);
    ++n;
  }
  const double stop_err = std::abs(n * w.params.dt - t_star);

  // Momentum along the normal, frictionless.
  PhysicsParams fp;
  fp.mu = 0.0;
  fp.contact_friction = 0.0;
  World m;
  m.params = fp;
  m.bodies.push_back(make_dynamic_body(1, BodyRole::Box, Shape::box(0.25, 0.25), Pose{0, 0, 0}, 1.0));
  m.bodies.push_back(make_dynamic_body(2, BodyRole::Box, Shape::box(0.25, 0.25), Pose{0.26, 0.05, 0}, 0.5));
  m.bodies[0].velocity = {1.2, 0.0};
  const double p0 = m.bodies[0].mass * m.bodies[0].velocity.x + m.bodies[1].mass * m.bodies[1].velocity.x;
  double drift = 0.0;
  bool touched = false;
  for (int i = 0; i < 30; ++i) {
    advance_in_place(m);
    touched = touched || m.bodies[1].velocity.x > 0.0;
    drift = std::max(drift, std::abs(m.bodies[0].mass * m.bodies[0].velocity.x + m.bodies[1].mass * m.bodies[1].velocity.x - p0));
  }

  // Penetration under random driving among boxes in a walled arena.
  World a;
  const double size = 2.5, t = 0.2;
  a.bodies.push_back(make_robot(0, Pose{0.4, 0.4, 0.7}, Bumper::Pusher));
  std::mt19937_64 rng(8);
  for (int i = 0; i < 10; ++i)
    a.bodies.push_back(make_dynamic_body(i + 1, i % 3 ? BodyRole::Box : BodyRole::WheeledBox, Shape::box(0.25, 0.25),
                                         Pose{0.35 + 0.2 * i, 0.9 + 0.12 * (i % 4), 0.3 * i}, 0.5));
  a.bodies.push_back(make_wall(1000, Rect{-t, -t, size + t, 0.0}));
  a.bodies.push_back(make_wall(1001, Rect{-t, size, size + t, size + t}));
  a.bodies.push_back(make_wall(1002, Rect{-t, 0.0, 0.0, size}));
  a.bodies.push_back(make_wall(1003, Rect{size, 0.0, size + t, size}));
  std::uniform_real_distribution<double> om(-2.0, 2.0), v(-0.1, 0.3);
  for (int i = 0; i < 60; ++i) advance_in_place(a);  // settle the initial placement
  double pen = 0.0;
  for (int i = 0; i < 10000; ++i) {
    if (i % 15 == 0) a.bodies[0].drive = Drive{v(rng), om(rng)};
    advance_in_place(a);
    pen = std::max(pen, max_penetration(a));
  }
  const bool ok = stop_err <= w.params.dt && touched && drift <= 1e-6 && pen <= 5e-4;
  return {ok, "stop-time error " + fixed(stop_err, 4) + " s (dt " + fixed(w.params.dt, 4) + "), momentum drift " +
                  fixed(drift, 9) + ", max penetration " + fixed(pen * 1000.0, 3) + " mm over 10000 steps"};
}

Verdict ice_concentration() {
  double worst = 0.0;
  int fields = 0;
  for (double c : {0.1, 0.2, 0.3, 0.4, 0.5}) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      EnvSpec s = spec_of(EnvKind::ShipIce);
      s.ice_concentration = c;
      Environment env(s);
      env.reset(seed);
      double area = 0.0;
      for (int i = 0; i < env.object_count(); ++i) area += oracle::shoelace(world_vertices(env.object(i)));
      const double channel = s.arena_width * (s.arena_height - s.ice_start);
      worst = std::max(worst, std::abs(area / channel - c));
      ++fields;
    }
  }
  return {worst <= 0.02, std::to_string(fields) + " fields, worst |realized - target| = " + fixed(worst, 5)};
}

Verdict determinism() {
  const std::pair<EnvSpec, std::string> cases[] = {
      {spec_of(EnvKind::Maze, "layout=U,obs=6"), "rrt"},
      {spec_of(EnvKind::ShipIce, "ice=0.3"), "dt_follower"},
      {spec_of(EnvKind::BoxDelivery, "boxes=3"), "greedy_push"},
  };
  int identical = 0, replays = 0, total = 0;
  for (const auto& [spec, policy] : cases) {
    RunConfig cfg;
    cfg.spec = spec;
    cfg.spec.max_steps = 200;
    cfg.policy = policy;
    cfg.episodes = 8;
    cfg.parallelism = 1;
    const SuiteResult one = run_suite(cfg);
    const SuiteResult again = run_suite(cfg);
    cfg.parallelism = 8;
    const SuiteResult eight = run_suite(cfg);
    for (std::size_t i = 0; i < one.episodes.size(); ++i) {
      const std::string a = one.episodes[i].log.to_jsonl();
      ++total;
      if (a == again.episodes[i].log.to_jsonl() && a == eight.episodes[i].log.to_jsonl()) ++identical;
      if (replay(one.episodes[i].log).to_jsonl() == a) ++replays;
    }
  }
  return {identical == total && replays == total,
          std::to_string(identical) + "/" + std::to_string(total) + " logs identical across runs and parallelism 1/8, " +
              std::to_string(replays) + "/" + std::to_string(total) + " replays identical"};
}

double mean_i_nav(int obstacles, int seeds) {
  RunConfig cfg;
  cfg.spec = spec_of(EnvKind::Maze, "layout=U,obs=" + std::to_string(obstacles));
  cfg.policy = "rrt";
  cfg.episodes = seeds;
  double sum = 0.0;
  for (const EpisodeResult& e : run_suite(cfg).episodes) sum += e.row.metrics.i_nav.value_or(0.0);
  return sum / seeds;
}

Verdict rrt_trend() {
  const double m3 = mean_i_nav(3, 20), m6 = mean_i_nav(6, 20), m10 = mean_i_nav(10, 20);
  return {m3 >= m6 && m6 >= m10, "mean I_nav 3 obs " + fixed(m3, 4) + ", 6 obs " + fixed(m6, 4) + ", 10 obs " + fixed(m10, 4)};
}

Verdict baseline_competence() {
  RunConfig rrt;
  rrt.spec = spec_of(EnvKind::Maze, "layout=U,obs=3");
  rrt.policy = "rrt";
  rrt.episodes = 40;
  int reached = 0;
  for (const EpisodeResult& e : run_suite(rrt).episodes) reached += e.log.footer.at("outcome").at("success").get<bool>();
  RunConfig greedy;
  greedy.spec = spec_of(EnvKind::BoxDelivery, "boxes=1");
  greedy.policy = "greedy_push";
  greedy.episodes = 20;
  int delivered = 0;
  for (const EpisodeResult& e : run_suite(greedy).episodes) delivered += e.row.metrics.s_manip.value_or(0.0) == 1.0;
  return {reached >= 38 && delivered >= 18, "RRT reached goal " + std::to_string(reached) + "/40, greedy S_manip = 1 on " +
                                                std::to_string(delivered) + "/20"};
}

Verdict throughput() {
  World w;
  const double size = 6.0, t = 0.2;
  w.bodies.push_back(make_robot(0, Pose{0.5, 0.5, 0.7}, Bumper::Pusher));
  int id = 1;
  for (int r = 0; r < 5 && id < 46; ++r)
    for (int c = 0; c < 9 && id < 46; ++c)
      w.bodies.push_back(make_dynamic_body(id++, BodyRole::Box, Shape::box(0.3, 0.3), Pose{1.0 + 0.55 * c, 1.2 + 0.9 * r, 0.2 * c}, 0.5));
  w.bodies.push_back(make_wall(1000, Rect{-t, -t, size + t, 0.0}));
  w.bodies.push_back(make_wall(1001, Rect{-t, size, size + t, size + t}));
  w.bodies.push_back(make_wall(1002, Rect{-t, 0.0, 0.0, size}));
  w.bodies.push_back(make_wall(1003, Rect{size, 0.0, size + t, size}));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> om(-2.0, 2.0);
  const int steps = 6000;
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < steps; ++i) {
    if (i % 15 == 0) w.bodies[0].drive = Drive{0.3, om(rng)};
    advance_in_place(w);
  }
  const double rate = steps / seconds_since(t0);
  return {rate >= 5000.0, std::to_string(w.bodies.size()) + " bodies, " + fixed(rate, 0) + " steps/s"};
}

const std::vector<std::pair<std::string, std::function<Verdict()>>>& criteria() {
  static const std::vector<std::pair<std::string, std::function<Verdict()>>> all = {
      {"s_manip_exact", s_manip_exact},
      {"i_nav_contact_free", i_nav_contact_free},
      {"metric_oracles", metric_oracles},
      {"e_nav_bound", e_nav_bound},
      {"physics", physics},
      {"ice_concentration", ice_concentration},
      {"determinism", determinism},
      {"rrt_trend", rrt_trend},
      {"baseline_competence", baseline_competence},
      {"throughput", throughput},
  };
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string only = argc > 1 ? argv[1] : "";
  if (only == "--list") {
    for (const auto& [id, fn] : criteria()) std::cout << id << "\n";
    return 0;
  }
  int failed = 0, ran = 0;
  for (const auto& [id, fn] : criteria()) {
    if (!only.empty() && id != only) continue;
    ++ran;
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (v.pass ? "PASS " : "FAIL ") << id << ": " << v.detail << std::endl;
    failed += v.pass ? 0 : 1;
  }
  if (ran == 0) {
    std::cerr << "unknown criterion '" << only << "'\n";
    return 2;
  }
  return failed == 0 ? 0 : 1;
}
