#include <gtest/gtest.h>

#include <filesystem>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "benchpush/harness.hpp"
#include "benchpush/teleop_server.hpp"

using namespace benchpush;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = boost::asio::ip::tcp;

namespace {

EnvSpec spec_of(EnvKind k, const std::string& variant = "") {
  EnvSpec s = EnvSpec::defaults(k);
  if (!variant.empty()) apply_variant(s, variant);
  return s;
}

class Client {
 public:
  explicit Client(unsigned short port) : ws_(ioc_) {
    tcp::resolver resolver(ioc_);
    boost::asio::connect(ws_.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
    ws_.handshake("127.0.0.1", "/");
  }
  void send(const nlohmann::json& j) { ws_.write(boost::asio::buffer(j.dump())); }
  nlohmann::json read() {
    beast::flat_buffer buf;
    ws_.read(buf);
    return nlohmann::json::parse(beast::buffers_to_string(buf.data()));
  }
  // Reads until a message of `type` arrives (or `limit` messages pass).
  nlohmann::json read_until(const std::string& type, int limit = 100000) {
    for (int i = 0; i < limit; ++i) {
      nlohmann::json j = read();
      if (j.at("type") == type) return j;
    }
    return {};
  }
  websocket::stream<tcp::socket>& ws() { return ws_; }

 private:
  boost::asio::io_context ioc_;
  websocket::stream<tcp::socket> ws_;
};

template <class Pred>
bool wait_for(Pred pred, int ms = 3000) {
  for (int i = 0; i < ms / 5; ++i) {
    if (pred()) return true;
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  return pred();
}

}  // namespace

// ---------------------------------------------------------------------------
// Wire format

TEST(Wire, CommandRoundTrip) {
  TeleopCommand c;
  c.keys = kKeyUp | kKeyRight;
  c.omega = 0.5;
  c.wheels = std::make_pair(0.1, -0.2);
  const TeleopCommand back = wire::command_from_json(wire::command_to_json(c));
  EXPECT_EQ(back.keys, c.keys);
  EXPECT_EQ(back.omega, c.omega);
  EXPECT_FALSE(back.heading.has_value());
  EXPECT_EQ(back.wheels, c.wheels);
  EXPECT_EQ(wire::cmd_message(c).at("type"), "cmd");
  EXPECT_EQ(wire::reset_message(4).at("seed"), 4);
}

TEST(Wire, BodiesArePerPartPolygons) {
  Environment env(spec_of(EnvKind::BoxDelivery));
  env.reset(0);
  const nlohmann::json bodies = wire::bodies_json(env.world());
  ASSERT_EQ(bodies.size(), env.world().bodies.size());
  EXPECT_EQ(bodies[0].at("id"), 0);
  EXPECT_EQ(bodies[0].at("kind"), "robot");
  EXPECT_EQ(bodies[0].at("vertices").size(), env.robot().parts.size());
  for (const auto& part : bodies[0].at("vertices")) EXPECT_GE(part.size(), 3u);
}

// ---------------------------------------------------------------------------
// Session without the network

TEST(Session, StatesEveryThirdSubstepAndUnderSizeCap) {
  TeleopSession s(spec_of(EnvKind::ShipIce, "ice=0.4"));
  std::vector<nlohmann::json> out;
  const auto emit = [&](const nlohmann::json& j) { out.push_back(j); };
  TeleopCommand c;
  c.keys = kKeyLeft;
  s.set_command(c);
  for (int i = 0; i < 4; ++i) ASSERT_TRUE(s.advance(emit));
  const int substeps = s.env().spec().physics_substeps();
  EXPECT_EQ(s.tick(), 4 * substeps);
  EXPECT_EQ(static_cast<int>(out.size()), 4 * substeps / kStateEverySubsteps);
  for (const auto& j : out) {
    EXPECT_EQ(j.at("type"), "state");
    EXPECT_LT(j.dump().size(), kMaxStateBytes);
  }
  EXPECT_GT(out.back().at("bodies").size(), 20u);
}

TEST(Session, HeadingModeWaitsForInput) {
  TeleopSession s(spec_of(EnvKind::BoxDelivery));
  const auto emit = [](const nlohmann::json&) {};
  EXPECT_FALSE(s.advance(emit));
  EXPECT_EQ(s.tick(), 0);
  TeleopCommand c;
  c.keys = kKeyUp;
  s.set_command(c);
  EXPECT_TRUE(s.advance(emit));
  EXPECT_GT(s.tick(), 0);
}

TEST(Session, AccumulatorsNeverDecrease) {
  TeleopSession s(spec_of(EnvKind::Maze, "layout=U,obs=6"));
  double l0 = 0.0, work = 0.0;
  const auto emit = [&](const nlohmann::json& j) {
    if (j.at("type") != "state") return;
    const double nl = j.at("metrics").at("l0"), nw = j.at("metrics").at("object_work");
    EXPECT_GE(nl, l0);
    EXPECT_GE(nw, work);
    l0 = nl;
    work = nw;
  };
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> keys(0, 15);
  for (int i = 0; i < 150 && !s.episode_over(); ++i) {
    TeleopCommand c;
    c.keys = keys(rng);
    s.set_command(c);
    s.advance(emit);
  }
  EXPECT_GT(l0, 0.0);
}

TEST(Session, ResetOverrides) {
  TeleopSession s(spec_of(EnvKind::Maze));
  s.reset(3, {{"obstacles", 1}});
  EXPECT_EQ(s.env().object_count(), 1);
  EXPECT_EQ(s.env().seed(), 3u);
  s.reset(0, {{"env", "area_clearing"}, {"boxes", 2}});
  EXPECT_EQ(s.env().kind(), EnvKind::AreaClearing);
  EXPECT_EQ(s.env().object_count(), 2);
  EXPECT_THROW(s.reset(0, {{"ice_concentration", 0.9}}), Error);
}

// ---------------------------------------------------------------------------
// Server over loopback

TEST(Server, SingleOperatorAndFrozenWorld) {
  ServerOptions opt;
  opt.address = "127.0.0.1";
  opt.port = 0;
  opt.speed = 0.0;
  TeleopServer server(spec_of(EnvKind::Maze), opt);
  server.start();
  std::this_thread::sleep_for(std::chrono::milliseconds(150));
  EXPECT_EQ(server.tick(), 0);  // nobody connected: nothing simulates

  Client first(server.port());
  const nlohmann::json hello = first.read();
  EXPECT_EQ(hello.at("type"), "state");
  ASSERT_TRUE(wait_for([&] { return server.connected(); }));

  Client second(server.port());
  EXPECT_EQ(second.read().at("type"), "busy");
  beast::flat_buffer buf;
  beast::error_code ec;
  second.ws().read(buf, ec);
  EXPECT_EQ(ec, websocket::error::closed);
  EXPECT_EQ(second.ws().reason().code, websocket::close_code::try_again_later);

  first.send({{"type", "bogus"}});
  EXPECT_EQ(first.read_until("error").at("type"), "error");
  EXPECT_TRUE(wait_for([&] { return server.tick() > 0; }));
  server.stop();
}

namespace {

// Drives a full episode over the socket with a constant command and returns
// the streamed episode_end message with the log the server wrote.
std::pair<nlohmann::json, EpisodeLog> loopback(const EnvSpec& spec, std::uint64_t seed, const std::string& dir) {
  ServerOptions opt;
  opt.address = "127.0.0.1";
  opt.port = 0;
  opt.speed = 0.0;
  opt.log_dir = dir;
  TeleopServer server(spec, opt);
  server.start();
  Client c(server.port());
  c.read_until("state");
  c.send(wire::reset_message(seed));
  c.send(wire::cmd_message(TeleopCommand{}));
  nlohmann::json end = c.read_until("episode_end");
  server.stop();
  if (end.is_null() || !end.contains("log")) return {end, {}};
  return {end, read_log(end.at("log").get<std::string>())};
}

}  // namespace

TEST(Server, LoopbackMazeMatchesHarness) {
  const std::filesystem::path dir = std::filesystem::temp_directory_path() / "benchpush_teleop_maze";
  std::filesystem::remove_all(dir);
  const EnvSpec spec = spec_of(EnvKind::Maze, "layout=Corridor,obs=0");
  const auto [end, log] = loopback(spec, 0, dir.string());
  ASSERT_FALSE(end.is_null());
  EXPECT_TRUE(end.at("outcome").at("success").get<bool>());
  // Same action sequence through the batch harness.
  Environment env(spec);
  env.reset(0);
  for (const Action& a : log.actions()) env.step(a);
  const MetricsReport harness = compute_metrics(env.trace());
  EXPECT_EQ(metrics_from_json(end.at("metrics")).e_nav, harness.e_nav);
  EXPECT_GT(*harness.e_nav, 0.9);
  std::filesystem::remove_all(dir);
}

TEST(Server, LoopbackShipReplaysToStreamedScore) {
  const std::filesystem::path dir = std::filesystem::temp_directory_path() / "benchpush_teleop_ship";
  std::filesystem::remove_all(dir);
  const auto [end, log] = loopback(spec_of(EnvKind::ShipIce, "ice=0.1"), 5, dir.string());
  ASSERT_FALSE(end.is_null());
  EXPECT_EQ(end.at("seed"), 5);
  ASSERT_FALSE(log.steps.empty());
  const EpisodeLog again = replay(log);
  EXPECT_TRUE(again.steps == log.steps && again.footer == log.footer);
  const MetricsReport live = metrics_from_json(end.at("metrics"));
  const MetricsReport offline = again.metrics();
  ASSERT_TRUE(live.e_nav && offline.e_nav);
  EXPECT_EQ(*live.e_nav, *offline.e_nav);
  EXPECT_EQ(*live.i_nav, *offline.i_nav);
  EXPECT_GT(*live.e_nav, 0.0);
  std::filesystem::remove_all(dir);
}
