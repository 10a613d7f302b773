#pragma once

#include <cmath>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "benchpush/harness.hpp"

namespace benchpush {

inline constexpr int kStateEverySubsteps = 3;  // 60 Hz physics, 20 Hz snapshots
inline constexpr std::size_t kMaxStateBytes = 64 * 1024;

namespace wire {

inline double round4(double v) { return std::round(v * 1e4) / 1e4; }

inline nlohmann::json busy() { return {{"type", "busy"}, {"reason", "another operator is connected"}}; }

inline nlohmann::json error(const std::string& msg) { return {{"type", "error"}, {"reason", msg}}; }

/// `cmd` payload: {"keys": bitmask} or one analog field ("omega", "heading", "wheels": [l, r]).
inline TeleopCommand command_from_json(const nlohmann::json& j) {
  TeleopCommand c;
  if (!j.is_object()) throw Error(ErrorKind::WrongActionMode, "cmd must be an object");
  if (j.contains("keys")) c.keys = j.at("keys").get<int>() & (kKeyUp | kKeyDown | kKeyLeft | kKeyRight);
  if (j.contains("omega")) c.omega = j.at("omega").get<double>();
  if (j.contains("heading")) c.heading = j.at("heading").get<double>();
  if (j.contains("wheels")) {
    const auto& w = j.at("wheels");
    c.wheels = std::make_pair(w.at(0).get<double>(), w.at(1).get<double>());
  }
  return c;
}

inline nlohmann::json command_to_json(const TeleopCommand& c) {
  nlohmann::json j = {{"keys", c.keys}};
  if (c.omega) j["omega"] = *c.omega;
  if (c.heading) j["heading"] = *c.heading;
  if (c.wheels) j["wheels"] = {c.wheels->first, c.wheels->second};
  return j;
}

inline nlohmann::json cmd_message(const TeleopCommand& c) { return {{"type", "cmd"}, {"cmd", command_to_json(c)}}; }

inline nlohmann::json reset_message(std::uint64_t seed, const nlohmann::json& overrides = nlohmann::json::object()) {
  return {{"type", "reset"}, {"seed", seed}, {"spec", overrides}};
}

inline nlohmann::json bodies_json(const World& world) {
  nlohmann::json out = nlohmann::json::array();
  for (const Body& b : world.bodies) {
    nlohmann::json parts = nlohmann::json::array();
    for (std::size_t k = 0; k < b.parts.size(); ++k) {
      nlohmann::json poly = nlohmann::json::array();
      for (const Vec2& v : world_vertices(b, k)) poly.push_back({round4(v.x), round4(v.y)});
      parts.push_back(std::move(poly));
    }
    out.push_back({{"id", b.id}, {"kind", to_string(b.role)}, {"vertices", std::move(parts)}});
  }
  return out;
}

}  // namespace wire

/// One live teleoperated environment. Commands are latched at env-step
/// boundaries; the most recent command before a step wins.
class TeleopSession {
 public:
  explicit TeleopSession(EnvSpec base, std::string log_dir = {}) : base_(std::move(base)), log_dir_(std::move(log_dir)) {
    reset(base_.seed);
  }

  /// Starts a new episode. `overrides` holds dotted or nested spec keys; an
  /// `env` key starts from that environment's defaults instead of the base spec.
  void reset(std::uint64_t seed, const nlohmann::json& overrides = nlohmann::json::object()) {
    EnvSpec spec = base_;
    if (overrides.is_object() && overrides.contains("env")) {
      spec = spec_from_json(overrides);
    } else if (overrides.is_object() && !overrides.empty()) {
      std::vector<std::pair<std::string, nlohmann::json>> flat;
      detail::flatten(overrides, "", flat);
      for (const auto& [k, v] : flat) set_key(spec, k, v);
      spec.validate();
    }
    env_ = std::make_unique<Environment>(spec);
    env_->set_render(false);
    env_->set_substep_observer([this](const World& w) { on_substep(w); });
    env_->reset(seed);
    recorder_.begin(*env_, "teleop");
    reward_ = 0.0;
    cmd_ = {};
    ended_ = false;
    last_log_.reset();
    optimal_ = task_class(spec.kind) == TaskClass::Navigation ? optimal_robot_path(env_->trace()) : 0.0;
  }

  void set_command(const TeleopCommand& c) { cmd_ = c; }
  const TeleopCommand& command() const { return cmd_; }

  /// Runs one env step with the latched command. `emit` receives 20 Hz state
  /// snapshots during the step and the episode_end message; `pace` runs after
  /// every physics substep. Returns false when nothing was simulated.
  bool advance(const std::function<void(const nlohmann::json&)>& emit, const std::function<void()>& pace = {}) {
    if (ended_) return false;
    const std::optional<Action> a = teleop_action(cmd_, env_->spec());
    if (!a) return false;
    emit_ = &emit;
    pace_ = &pace;
    Transition t;
    try {
      t = env_->step(*a);
    } catch (...) {
      emit_ = nullptr;
      pace_ = nullptr;
      throw;
    }
    emit_ = nullptr;
    pace_ = nullptr;
    reward_ += t.reward;
    recorder_.record(*env_, *a, t);
    if (!env_->active()) finish(emit);
    return true;
  }

  nlohmann::json state() const {
    const Pose p = env_->robot().pose;
    return {{"type", "state"},
            {"tick", tick_},
            {"seed", env_->seed()},
            {"bodies", wire::bodies_json(env_->world())},
            {"pose", {p.x, p.y, p.theta}},
            {"metrics", live_metrics()}};
  }

  /// Running accumulators plus the projected E_nav (l0* / l0, success not yet known).
  nlohmann::json live_metrics() const {
    const EpisodeTrace& tr = env_->trace();
    nlohmann::json m = {{"l0", tr.robot_path_length},
                        {"object_work", tr.object_work()},
                        {"reward", reward_},
                        {"steps", env_->steps()}};
    if (task_class(env_->kind()) == TaskClass::Navigation) {
      const double l0 = tr.robot_path_length;
      m["E_nav_projected"] = l0 > 0.0 && std::isfinite(optimal_) ? std::min(1.0, optimal_ / l0) : 0.0;
      const double rw = tr.robot_mass * l0;
      m["I_nav"] = rw > 0.0 ? rw / (rw + tr.object_work()) : 1.0;
    } else {
      m["S_manip"] = static_cast<double>(tr.completed_objects()) / std::max(1, tr.total_objects());
    }
    return m;
  }

  bool episode_over() const { return ended_; }
  long long tick() const { return tick_; }
  const Environment& env() const { return *env_; }
  const std::optional<EpisodeLog>& last_log() const { return last_log_; }
  const std::optional<std::string>& last_log_path() const { return last_log_path_; }

 private:
  void on_substep(const World&) {
    ++tick_;
    if (emit_ && tick_ % kStateEverySubsteps == 0) (*emit_)(state());
    if (pace_ && *pace_) (*pace_)();
  }

  void finish(const std::function<void(const nlohmann::json&)>& emit) {
    ended_ = true;
    const MetricsReport m = compute_metrics(env_->trace());
    last_log_ = recorder_.finish(*env_, m, false);
    last_log_path_.reset();
    if (!log_dir_.empty()) {
      std::filesystem::create_directories(log_dir_);
      const std::string path =
          (std::filesystem::path(log_dir_) / ("teleop_" + std::to_string(env_->seed()) + "_" + std::to_string(tick_) + ".jsonl"))
              .string();
      write_log(*last_log_, path);
      last_log_path_ = path;
    }
    nlohmann::json msg = {{"type", "episode_end"},
                          {"tick", tick_},
                          {"seed", env_->seed()},
                          {"metrics", metrics_to_json(m)},
                          {"outcome", last_log_->footer.at("outcome")},
                          {"steps", env_->steps()},
                          {"truncated", env_->truncated()}};
    if (last_log_path_) msg["log"] = *last_log_path_;
    emit(msg);
  }

  EnvSpec base_;
  std::string log_dir_;
  std::unique_ptr<Environment> env_;
  EpisodeRecorder recorder_;
  TeleopCommand cmd_;
  double reward_ = 0.0;
  double optimal_ = 0.0;
  long long tick_ = 0;  // physics substeps since the session started
  bool ended_ = false;
  std::optional<EpisodeLog> last_log_;
  std::optional<std::string> last_log_path_;
  const std::function<void(const nlohmann::json&)>* emit_ = nullptr;
  const std::function<void()>* pace_ = nullptr;
};

}  // namespace benchpush
