// benchpush command line: batch runs, log replay, teleop server.

#include <iostream>
#include <map>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "benchpush/harness.hpp"
#include "benchpush/teleop_server.hpp"

using namespace benchpush;

namespace {

// Spec options shared by every subcommand that builds an environment.
struct SpecFlags {
  std::string config;
  std::string env;
  std::string variant;
  std::map<std::string, std::string> keys;  // dotted key -> raw value

  void add_to(CLI::App& app) {
    app.add_option("--config", config, "JSON configuration file");
    app.add_option("--env", env, "maze | ship_ice | box_delivery | area_clearing");
    app.add_option("--variant", variant, "shorthand such as layout=U,obs=10 or boxes=5,static=1");
    std::vector<std::pair<std::string, nlohmann::json>> flat;
    detail::flatten(spec_to_json(EnvSpec{}), "", flat);
    for (const auto& [k, v] : flat) {
      if (k == "env" || k == "variant_label" || k == "seed") continue;
      app.add_option_function<std::string>("--" + k, [this, k = k](const std::string& s) { keys[k] = s; },
                                           "override " + k);
    }
  }

  EnvSpec build() const {
    nlohmann::json j = nlohmann::json::object();
    if (!config.empty()) {
      std::ifstream in(config);
      if (!in) throw Error(ErrorKind::Io, "cannot open configuration file '" + config + "'");
      try {
        in >> j;
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::InvalidSpec, "configuration file '" + config + "': " + e.what());
      }
    }
    if (!env.empty()) j["env"] = env;
    if (!j.contains("env")) j["env"] = "maze";
    if (!variant.empty()) j["variant"] = variant;
    EnvSpec spec = spec_from_json(j);
    for (const auto& [k, v] : keys) set_key(spec, k, v);
    spec.validate();
    return spec;
  }
};

void print_metrics(const MetricsReport& m) {
  std::cout << metrics_to_json(m).dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pushing-benchmark simulator: batch evaluation, replay and teleoperation"};
  app.require_subcommand(1);

  SpecFlags run_flags;
  RunConfig run_cfg;
  std::optional<std::uint64_t> run_seed;
  CLI::App* run = app.add_subcommand("run", "run a batch of episodes and write a CSV report");
  run_flags.add_to(*run);
  run->add_option("--policy", run_cfg.policy, "idle | dt_follower | rrt | greedy_push");
  run->add_option("--episodes", run_cfg.episodes, "number of episodes (seeds base .. base+n-1)");
  run->add_option("--seed", run_seed, "base seed");
  run->add_option("--out", run_cfg.out_dir, "directory for episode logs and report.csv");
  run->add_option("-j,--parallel", run_cfg.parallelism, "worker threads");

  std::string log_path, replay_out;
  CLI::App* rep = app.add_subcommand("replay", "re-simulate an episode log and check it reproduces");
  rep->add_option("log", log_path, "episode log (.jsonl)")->required();
  rep->add_option("--out", replay_out, "write the re-simulated log here");

  SpecFlags serve_flags;
  ServerOptions serve_opt;
  CLI::App* serve = app.add_subcommand("teleop-serve", "serve a live environment over WebSocket");
  serve_flags.add_to(*serve);
  serve->add_option("--port", serve_opt.port, "listen port");
  serve->add_option("--address", serve_opt.address, "listen address");
  serve->add_option("--log-dir", serve_opt.log_dir, "directory for finished episode logs");
  serve->add_option("--speed", serve_opt.speed, "real-time factor (<= 0: unpaced)");

  CLI::App* list = app.add_subcommand("list-envs", "list environments, default variants and policies");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      run_cfg.spec = run_flags.build();
      run_cfg.base_seed = run_seed ? *run_seed : run_cfg.spec.seed;
      const SuiteResult r = run_suite(run_cfg);
      std::cout << r.csv;
      if (r.failed > 0) std::cerr << r.failed << " of " << run_cfg.episodes << " episodes failed\n";
      return r.failed > 0 ? 2 : 0;
    }
    if (*rep) {
      const EpisodeLog log = read_log(log_path);
      const EpisodeLog again = replay(log);
      if (!replay_out.empty()) write_log(again, replay_out);
      print_metrics(again.metrics());
      const bool same = again.header == log.header && again.steps == log.steps && again.footer == log.footer;
      std::cout << (same ? "replay: identical\n" : "replay: MISMATCH\n");
      return same ? 0 : 1;
    }
    if (*serve) {
      const EnvSpec spec = serve_flags.build();
      TeleopServer server(spec, serve_opt);
      server.start();
      std::cout << "teleop: " << to_string(spec.kind) << " on port " << server.port() << std::endl;
      for (;;) std::this_thread::sleep_for(std::chrono::seconds(1));
    }
    if (*list) {
      for (EnvKind k : {EnvKind::Maze, EnvKind::ShipIce, EnvKind::BoxDelivery, EnvKind::AreaClearing}) {
        const EnvSpec s = EnvSpec::defaults(k);
        std::cout << to_string(k) << "  variant=" << s.variant << "  action_mode=" << to_string(s.action_mode) << "\n";
      }
      std::cout << "policies:";
      for (const std::string& p : policy_names()) std::cout << " " << p;
      std::cout << "\n";
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
