#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "benchpush/harness.hpp"

using namespace benchpush;

namespace {

EnvSpec spec_of(EnvKind k, const std::string& variant = "") {
  EnvSpec s = EnvSpec::defaults(k);
  if (!variant.empty()) apply_variant(s, variant);
  return s;
}

// Drops the trailing wall_time field from every CSV line.
std::string without_wall_time(const std::string& csv) {
  std::istringstream in(csv);
  std::string out;
  for (std::string l; std::getline(in, l);) out += l.substr(0, l.rfind(',')) + "\n";
  return out;
}

class ThrowingPolicy : public IdlePolicy {
 public:
  Action act(const Observation& o, const Environment& env) override {
    if (env.steps() == 3) throw std::runtime_error("boom");
    return IdlePolicy::act(o, env);
  }
};

}  // namespace

TEST(Harness, TruncatesAtMaxSteps) {
  EnvSpec s = spec_of(EnvKind::Maze);
  s.max_steps = 10;
  const EpisodeResult r = run_episode(s, "idle", 0);
  EXPECT_EQ(r.row.steps, 10);
  EXPECT_EQ(r.log.steps.size(), 10u);
  EXPECT_TRUE(r.log.footer.at("truncated").get<bool>());
  EXPECT_FALSE(r.log.footer.at("terminated").get<bool>());
  EXPECT_FALSE(r.row.failed);
  EXPECT_EQ(*r.row.metrics.e_nav, 0.0);
}

TEST(Harness, RrtMazeSeedZero) {
  const EpisodeResult r = run_episode(spec_of(EnvKind::Maze), "rrt", 0);
  EXPECT_TRUE(r.log.footer.at("terminated").get<bool>());
  EXPECT_GT(*r.row.metrics.e_nav, 0.0);
}

TEST(Harness, LogRecordLayout) {
  const EpisodeResult r = run_episode(spec_of(EnvKind::BoxDelivery, "boxes=2"), "greedy_push", 1);
  const EpisodeLog& log = r.log;
  EXPECT_EQ(log.header.at("type"), "header");
  EXPECT_EQ(log.header.at("spec_hash"), spec_hash(log.spec()));
  EXPECT_EQ(log.seed(), 1u);
  EXPECT_EQ(log.policy(), "greedy_push");
  long long tick = 0;
  for (std::size_t i = 0; i < log.steps.size(); ++i) {
    const nlohmann::json& s = log.steps[i];
    EXPECT_EQ(s.at("step").get<std::size_t>(), i + 1);
    EXPECT_GT(s.at("tick").get<long long>(), tick);
    tick = s.at("tick").get<long long>();
  }
  EXPECT_TRUE(log.steps.back().contains("objects"));
  EXPECT_EQ(log.footer.at("tick").get<long long>(), tick);
  // The JSONL text round-trips.
  const EpisodeLog again = parse_log(log.to_jsonl());
  EXPECT_EQ(again.header, log.header);
  EXPECT_EQ(again.steps, log.steps);
  EXPECT_EQ(again.footer, log.footer);
}

TEST(Harness, ReplayReproducesEveryEnv) {
  const std::pair<EnvSpec, std::string> cases[] = {
      {spec_of(EnvKind::Maze, "layout=U,obs=3"), "rrt"},
      {spec_of(EnvKind::ShipIce, "ice=0.2"), "dt_follower"},
      {spec_of(EnvKind::BoxDelivery), "greedy_push"},
      {spec_of(EnvKind::AreaClearing, "boxes=2"), "greedy_push"},
  };
  for (const auto& [spec, policy] : cases) {
    EnvSpec s = spec;
    s.max_steps = 120;
    const EpisodeResult r = run_episode(s, policy, 7);
    EXPECT_TRUE(replay_matches(r.log)) << to_string(s.kind);
  }
}

TEST(Harness, TamperedLogDoesNotMatch) {
  EnvSpec s = spec_of(EnvKind::Maze);
  s.max_steps = 20;
  EpisodeLog log = run_episode(s, "dt_follower", 2).log;
  log.steps[5]["action"]["omega"] = 1.234;
  EXPECT_FALSE(replay_matches(log));
}

TEST(Harness, PolicyExceptionMarksEpisodeFailed) {
  ThrowingPolicy p;
  const EpisodeResult r = run_episode(spec_of(EnvKind::Maze), p, 0);
  EXPECT_TRUE(r.row.failed);
  EXPECT_EQ(r.log.footer.at("error"), "boom");
  EXPECT_EQ(r.row.steps, 3);
}

TEST(Harness, MalformedLogs) {
  EXPECT_THROW(parse_log(""), Error);
  EXPECT_THROW(parse_log("{\"type\":\"header\"}\nnot json\n"), Error);
  try {
    read_log("/nonexistent/dir/x.jsonl");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Io);
  }
}

TEST(Harness, SuiteIndependentOfParallelism) {
  RunConfig cfg;
  cfg.spec = spec_of(EnvKind::Maze, "layout=U,obs=3");
  cfg.spec.max_steps = 150;
  cfg.policy = "dt_follower";
  cfg.episodes = 6;
  cfg.base_seed = 10;
  const SuiteResult one = run_suite(cfg);
  cfg.parallelism = 3;
  const SuiteResult three = run_suite(cfg);
  EXPECT_EQ(without_wall_time(one.csv), without_wall_time(three.csv));
  for (std::size_t i = 0; i < one.episodes.size(); ++i) {
    EXPECT_EQ(one.episodes[i].row.seed, 10 + i);
    EXPECT_EQ(one.episodes[i].log.to_jsonl(), three.episodes[i].log.to_jsonl());
  }
  // 6 episodes, one summary row, one header.
  EXPECT_EQ(std::count(one.csv.begin(), one.csv.end(), '\n'), 8);
}

TEST(Harness, SuiteWritesLogsAndReport) {
  const std::filesystem::path dir = std::filesystem::temp_directory_path() / "benchpush_suite_test";
  std::filesystem::remove_all(dir);
  RunConfig cfg;
  cfg.spec = spec_of(EnvKind::BoxDelivery);
  cfg.spec.max_steps = 30;
  cfg.policy = "greedy_push";
  cfg.episodes = 2;
  cfg.out_dir = dir.string();
  const SuiteResult r = run_suite(cfg);
  EXPECT_TRUE(std::filesystem::exists(dir / "report.csv"));
  const EpisodeLog log = read_log((dir / log_file_name(cfg.spec, "greedy_push", 1)).string());
  EXPECT_EQ(log.to_jsonl(), r.episodes[1].log.to_jsonl());
  std::filesystem::remove_all(dir);
}

TEST(Harness, SuiteRejectsUnsupportedPolicy) {
  RunConfig cfg;
  cfg.spec = spec_of(EnvKind::BoxDelivery);
  cfg.policy = "dt_follower";
  EXPECT_THROW(run_suite(cfg), Error);
  cfg.policy = "idle";
  cfg.episodes = 0;
  EXPECT_THROW(run_suite(cfg), Error);
}
