#pragma once

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "benchpush/metrics.hpp"
#include "benchpush/policies.hpp"

namespace benchpush {

inline constexpr const char* kVersion = "benchpush 0.3.0";
inline constexpr double kPoseSampleInterval = 0.1;  // s of simulated time between object pose records

/// FNV-1a over the canonical spec JSON, as 16 hex digits.
inline std::string spec_hash(const EnvSpec& spec) {
  const std::string text = spec_to_json(spec).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline nlohmann::json pose_json(const Pose& p) { return nlohmann::json::array({p.x, p.y, p.theta}); }

inline nlohmann::json metrics_to_json(const MetricsReport& m) {
  nlohmann::json j = nlohmann::json::object();
  auto put = [&](const char* k, const std::optional<double>& v) { j[k] = v ? nlohmann::json(*v) : nlohmann::json(); };
  put("E_nav", m.e_nav);
  put("I_nav", m.i_nav);
  put("S_manip", m.s_manip);
  put("E_manip", m.e_manip);
  put("I_manip", m.i_manip);
  j["warnings"] = m.warnings;
  if (m.error) j["error"] = *m.error;
  return j;
}

inline MetricsReport metrics_from_json(const nlohmann::json& j) {
  MetricsReport m;
  auto get = [&](const char* k) -> std::optional<double> {
    if (!j.contains(k) || j.at(k).is_null()) return std::nullopt;
    return j.at(k).get<double>();
  };
  m.e_nav = get("E_nav");
  m.i_nav = get("I_nav");
  m.s_manip = get("S_manip");
  m.e_manip = get("E_manip");
  m.i_manip = get("I_manip");
  if (j.contains("warnings")) m.warnings = j.at("warnings").get<std::vector<std::string>>();
  if (j.contains("error")) m.error = j.at("error").get<std::string>();
  return m;
}

inline nlohmann::json trace_to_json(const EpisodeTrace& t) {
  nlohmann::json objects = nlohmann::json::array();
  for (const ObjectRecord& o : t.objects) {
    objects.push_back({{"id", o.id},
                       {"mass", o.mass},
                       {"path_length", o.path_length},
                       {"initial_centroid", {o.initial_centroid.x, o.initial_centroid.y}},
                       {"success", o.success}});
  }
  return {{"robot_mass", t.robot_mass},
          {"robot_path_length", t.robot_path_length},
          {"robot_start", {t.robot_start.x, t.robot_start.y}},
          {"success", t.success},
          {"objects", objects}};
}

/// Line-delimited episode record: header, one line per env step, footer.
struct EpisodeLog {
  nlohmann::json header;
  std::vector<nlohmann::json> steps;
  nlohmann::json footer;

  std::string to_jsonl() const {
    std::string out = header.dump() + "\n";
    for (const nlohmann::json& s : steps) out += s.dump() + "\n";
    out += footer.dump() + "\n";
    return out;
  }

  EnvSpec spec() const { return spec_from_canonical_json(header.at("spec")); }
  std::uint64_t seed() const { return header.at("seed").get<std::uint64_t>(); }
  std::string policy() const { return header.at("policy").get<std::string>(); }
  MetricsReport metrics() const { return metrics_from_json(footer.at("metrics")); }
  bool failed() const { return footer.value("failed", false); }

  std::vector<Action> actions() const {
    std::vector<Action> out;
    for (const nlohmann::json& s : steps) out.push_back(action_from_json(s.at("action")));
    return out;
  }
};

inline EpisodeLog parse_log(const std::string& text) {
  EpisodeLog log;
  std::istringstream in(text);
  std::string line;
  std::vector<nlohmann::json> records;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      records.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::InvalidLog, "episode log line " + std::to_string(n) + ": " + e.what());
    }
  }
  if (records.size() < 2 || records.front().value("type", "") != "header" || records.back().value("type", "") != "footer")
    throw Error(ErrorKind::InvalidLog, "episode log must start with a header and end with a footer");
  log.header = records.front();
  log.footer = records.back();
  log.steps.assign(records.begin() + 1, records.end() - 1);
  return log;
}

inline void write_log(const EpisodeLog& log, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::Io, "cannot write episode log '" + path + "'");
  f << log.to_jsonl();
}

inline EpisodeLog read_log(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::Io, "cannot read episode log '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_log(ss.str());
}

/// Builds an EpisodeLog while an environment runs. Shared by the harness and
/// the teleop service so both produce the same schema.
class EpisodeRecorder {
 public:
  void begin(const Environment& env, const std::string& policy) {
    log_ = {};
    tick_ = 0;
    last_sample_ = -1;
    log_.header = {{"type", "header"},
                   {"version", kVersion},
                   {"spec_hash", spec_hash(env.spec())},
                   {"seed", env.seed()},
                   {"policy", policy},
                   {"spec", spec_to_json(env.spec())}};
  }

  void record(const Environment& env, const Action& action, const Transition& t) {
    tick_ += t.info.substeps;
    nlohmann::json s = {{"type", "step"},
                        {"step", env.steps()},
                        {"tick", tick_},
                        {"pose", pose_json(env.robot().pose)},
                        {"action", action_to_json(action)},
                        {"reward", t.reward}};
    nlohmann::json contacts = nlohmann::json::array();
    for (const auto& [a, b] : t.info.contact_onsets) contacts.push_back({a, b});
    s["contacts"] = contacts;
    const long long slot = static_cast<long long>(std::floor(tick_ * env.spec().physics.dt / kPoseSampleInterval + 1e-9));
    if (slot > last_sample_ || !env.active()) {
      last_sample_ = slot;
      nlohmann::json objects = nlohmann::json::array();
      for (int i = 0; i < env.object_count(); ++i) {
        const Body& b = env.object(i);
        objects.push_back({b.id, b.pose.x, b.pose.y, b.pose.theta});
      }
      s["objects"] = objects;
    }
    if (t.terminated) s["terminated"] = true;
    if (t.truncated) s["truncated"] = true;
    log_.steps.push_back(std::move(s));
  }

  EpisodeLog finish(const Environment& env, const MetricsReport& m, bool failed, const std::string& error = {}) {
    const EpisodeOutcome o = env.outcome();
    log_.footer = {{"type", "footer"},
                   {"steps", env.steps()},
                   {"tick", tick_},
                   {"terminated", env.terminated()},
                   {"truncated", env.truncated()},
                   {"outcome",
                    {{"success", o.success}, {"completed", o.completed}, {"total", o.total}, {"object_success", o.object_success}}},
                   {"trace", trace_to_json(env.trace())},
                   {"metrics", metrics_to_json(m)},
                   {"failed", failed}};
    if (!error.empty()) log_.footer["error"] = error;
    return log_;
  }

  long long tick() const { return tick_; }

 private:
  EpisodeLog log_;
  long long tick_ = 0;
  long long last_sample_ = -1;
};

struct EpisodeResult {
  EpisodeLog log;
  EpisodeRow row;
};

inline EpisodeRow make_row(const EnvSpec& spec, const std::string& policy, std::uint64_t seed, const EpisodeLog& log,
                           double wall_time) {
  EpisodeRow row;
  row.env = std::string(to_string(spec.kind));
  row.variant = spec.variant;
  row.policy = policy;
  row.seed = seed;
  row.metrics = log.metrics();
  row.steps = log.footer.value("steps", 0);
  row.wall_time = wall_time;
  row.failed = log.failed();
  return row;
}

/// Runs one episode to termination or truncation. A throwing policy marks the
/// log failed instead of propagating.
inline EpisodeResult run_episode(const EnvSpec& spec, Policy& policy, std::uint64_t seed) {
  if (!policy.supports(spec.action_mode)) {
    throw Error(ErrorKind::WrongActionMode, "policy '" + policy.name() + "' does not support action mode '" +
                                                std::string(to_string(spec.action_mode)) + "'");
  }
  const auto t0 = std::chrono::steady_clock::now();
  Environment env(spec);
  env.set_render(policy.needs_observation());
  EpisodeRecorder rec;
  Observation obs = env.reset(seed);
  rec.begin(env, policy.name());
  std::string error;
  try {
    policy.reset(env, seed);
    while (env.active()) {
      const Action a = policy.act(obs, env);
      Transition t = env.step(a);
      rec.record(env, a, t);
      obs = std::move(t.observation);
    }
  } catch (const std::exception& e) {
    error = e.what();
  }
  const MetricsReport m = compute_metrics(env.trace());
  EpisodeResult r;
  r.log = rec.finish(env, m, !error.empty(), error);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.row = make_row(spec, policy.name(), seed, r.log, wall);
  return r;
}

inline EpisodeResult run_episode(const EnvSpec& spec, const std::string& policy, std::uint64_t seed) {
  const std::unique_ptr<Policy> p = make_policy(policy);
  return run_episode(spec, *p, seed);
}

/// Re-simulates a log from its header and recorded actions.
inline EpisodeLog replay(const EpisodeLog& log) {
  const EnvSpec spec = log.spec();
  Environment env(spec);
  env.set_render(false);
  env.reset(log.seed());
  EpisodeRecorder rec;
  rec.begin(env, log.policy());
  std::string error;
  for (const Action& a : log.actions()) {
    if (!env.active()) throw Error(ErrorKind::InvalidLog, "episode log has actions after the episode ended");
    const Transition t = env.step(a);
    rec.record(env, a, t);
  }
  if (log.failed()) error = log.footer.value("error", "");
  return rec.finish(env, compute_metrics(env.trace()), log.failed(), error);
}

/// True when re-simulation reproduces the recorded steps and footer exactly.
inline bool replay_matches(const EpisodeLog& log) {
  const EpisodeLog again = replay(log);
  return again.header == log.header && again.steps == log.steps && again.footer == log.footer;
}

struct RunConfig {
  EnvSpec spec;
  std::string policy = "rrt";
  int episodes = 20;
  std::uint64_t base_seed = 0;
  std::string out_dir;  // empty: keep logs in memory only
  int parallelism = 1;

  void validate() const {
    if (episodes < 1) throw Error(ErrorKind::InvalidSpec, "episodes must be >= 1");
    if (parallelism < 1) throw Error(ErrorKind::InvalidSpec, "parallelism must be >= 1");
    spec.validate();
  }
};

struct SuiteResult {
  std::vector<EpisodeResult> episodes;  // ordered by seed
  std::string csv;
  int failed = 0;

  std::vector<EpisodeRow> rows() const {
    std::vector<EpisodeRow> out;
    for (const EpisodeResult& e : episodes) out.push_back(e.row);
    return out;
  }
};

inline std::string log_file_name(const EnvSpec& spec, const std::string& policy, std::uint64_t seed) {
  return std::string(to_string(spec.kind)) + "_" + policy + "_seed" + std::to_string(seed) + ".jsonl";
}

/// Runs `episodes` seeds (base + i) on `parallelism` worker threads, each with
/// its own environment and policy.
inline SuiteResult run_suite(const RunConfig& cfg) {
  cfg.validate();
  {
    const std::unique_ptr<Policy> probe = make_policy(cfg.policy);
    if (!probe->supports(cfg.spec.action_mode)) {
      throw Error(ErrorKind::WrongActionMode, "policy '" + cfg.policy + "' does not support action mode '" +
                                                  std::string(to_string(cfg.spec.action_mode)) + "'");
    }
  }
  SuiteResult result;
  result.episodes.resize(static_cast<std::size_t>(cfg.episodes));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < cfg.episodes; i = next++) {
      const std::uint64_t seed = cfg.base_seed + static_cast<std::uint64_t>(i);
      const std::unique_ptr<Policy> p = make_policy(cfg.policy);
      result.episodes[static_cast<std::size_t>(i)] = run_episode(cfg.spec, *p, seed);
    }
  };
  const int n = std::min(cfg.parallelism, cfg.episodes);
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < n; ++k) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  for (const EpisodeResult& e : result.episodes) result.failed += e.row.failed ? 1 : 0;
  result.csv = metrics_csv(result.rows());
  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    for (const EpisodeResult& e : result.episodes)
      write_log(e.log, (std::filesystem::path(cfg.out_dir) / log_file_name(cfg.spec, cfg.policy, e.row.seed)).string());
    std::ofstream f(std::filesystem::path(cfg.out_dir) / "report.csv", std::ios::binary);
    f << result.csv;
  }
  return result;
}

}  // namespace benchpush
