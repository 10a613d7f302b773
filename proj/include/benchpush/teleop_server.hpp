#pragma once

#include <atomic>
#include <chrono>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "benchpush/teleop.hpp"

namespace benchpush {

struct ServerOptions {
  std::string address = "0.0.0.0";
  unsigned short port = 8765;  // 0 picks a free port
  std::string log_dir;         // where finished teleop episodes are written
  double speed = 1.0;          // simulated seconds per wall second; <= 0 runs unpaced
};

/// WebSocket front end for a TeleopSession. One io thread handles the single
/// operator connection; a simulation thread owns the session. They exchange
/// the latest command and outgoing text frames only.
class TeleopServer {
 public:
  TeleopServer(EnvSpec spec, ServerOptions opt) : opt_(std::move(opt)), session_(std::move(spec), opt_.log_dir) {}
  TeleopServer(const TeleopServer&) = delete;
  TeleopServer& operator=(const TeleopServer&) = delete;
  ~TeleopServer() { stop(); }

  void start() {
    namespace net = boost::asio;
    using tcp = net::ip::tcp;
    const tcp::endpoint ep(net::ip::make_address(opt_.address), opt_.port);
    boost::system::error_code ec;
    acceptor_.open(ep.protocol(), ec);
    if (!ec) acceptor_.set_option(net::socket_base::reuse_address(true), ec);
    if (!ec) acceptor_.bind(ep, ec);
    if (!ec) acceptor_.listen(net::socket_base::max_listen_connections, ec);
    if (ec) throw Error(ErrorKind::Io, "teleop server: cannot listen on port " + std::to_string(opt_.port) + ": " + ec.message());
    port_ = acceptor_.local_endpoint().port();
    do_accept();
    io_thread_ = std::thread([this] { ioc_.run(); });
    sim_thread_ = std::thread([this] { sim_loop(); });
  }

  /// Blocks until `stop` is called from another thread.
  void run() {
    start();
    while (!stopping_) std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }

  void stop() {
    if (stopping_.exchange(true)) return;
    boost::asio::post(ioc_, [this] {
      boost::system::error_code ec;
      acceptor_.close(ec);
      ioc_.stop();
    });
    if (io_thread_.joinable()) io_thread_.join();
    if (sim_thread_.joinable()) sim_thread_.join();
  }

  unsigned short port() const { return port_; }
  long long tick() const { return tick_.load(); }
  bool connected() const {
    std::lock_guard<std::mutex> lock(mu_);
    return active_ != nullptr;
  }

 private:
  class Connection : public std::enable_shared_from_this<Connection> {
   public:
    Connection(boost::asio::ip::tcp::socket socket, TeleopServer& server) : ws_(std::move(socket)), server_(server) {}

    void start() {
      ws_.set_option(boost::beast::websocket::stream_base::timeout::suggested(boost::beast::role_type::server));
      ws_.async_accept([self = shared_from_this()](boost::beast::error_code ec) { self->on_accept(ec); });
    }

    void send(std::string text) {
      if (closed_) return;
      // A slow client loses snapshots, never control messages.
      if (outbox_.size() > 64 && text.find("\"type\":\"state\"") != std::string::npos) return;
      outbox_.push_back(std::move(text));
      if (outbox_.size() == 1) do_write();
    }

   private:
    void on_accept(boost::beast::error_code ec) {
      if (ec) return;
      if (!server_.claim(shared_from_this())) {
        rejected_ = true;
        send(wire::busy().dump());
        return;
      }
      do_read();
    }

    void do_read() {
      ws_.async_read(buffer_, [self = shared_from_this()](boost::beast::error_code ec, std::size_t) { self->on_read(ec); });
    }

    void on_read(boost::beast::error_code ec) {
      if (ec) {
        closed_ = true;
        server_.release(this);
        return;
      }
      const std::string text = boost::beast::buffers_to_string(buffer_.data());
      buffer_.consume(buffer_.size());
      if (auto reply = server_.on_message(text)) send(*reply);
      do_read();
    }

    void do_write() {
      ws_.text(true);
      ws_.async_write(boost::asio::buffer(outbox_.front()),
                      [self = shared_from_this()](boost::beast::error_code ec, std::size_t) { self->on_write(ec); });
    }

    void on_write(boost::beast::error_code ec) {
      if (ec) {
        closed_ = true;
        outbox_.clear();
        return;
      }
      outbox_.pop_front();
      if (!outbox_.empty()) {
        do_write();
      } else if (rejected_) {
        closed_ = true;
        ws_.async_close(boost::beast::websocket::close_code::try_again_later,
                        [self = shared_from_this()](boost::beast::error_code) {});
      }
    }

    boost::beast::websocket::stream<boost::beast::tcp_stream> ws_;
    boost::beast::flat_buffer buffer_;
    std::deque<std::string> outbox_;
    TeleopServer& server_;
    bool rejected_ = false;
    bool closed_ = false;
  };

  void do_accept() {
    acceptor_.async_accept([this](boost::beast::error_code ec, boost::asio::ip::tcp::socket socket) {
      if (ec) return;
      std::make_shared<Connection>(std::move(socket), *this)->start();
      if (!stopping_) do_accept();
    });
  }

  bool claim(const std::shared_ptr<Connection>& c) {
    std::lock_guard<std::mutex> lock(mu_);
    if (active_) return false;
    active_ = c;
    command_ = {};
    greet_ = true;
    return true;
  }

  void release(const Connection* c) {
    std::lock_guard<std::mutex> lock(mu_);
    if (active_.get() != c) return;
    active_.reset();
    command_ = {};
  }

  // Runs on the io thread. Returns an immediate reply for malformed input.
  std::optional<std::string> on_message(const std::string& text) {
    try {
      const nlohmann::json j = nlohmann::json::parse(text);
      const std::string type = j.at("type").get<std::string>();
      std::lock_guard<std::mutex> lock(mu_);
      if (type == "cmd") {
        command_ = wire::command_from_json(j.at("cmd"));
      } else if (type == "reset") {
        pending_reset_ = j;
      } else {
        return wire::error("unknown message type '" + type + "'").dump();
      }
    } catch (const std::exception& e) {
      return wire::error(e.what()).dump();
    }
    return std::nullopt;
  }

  void sim_loop() {
    using clock = std::chrono::steady_clock;
    const double dt = session_.env().spec().physics.dt;
    clock::time_point deadline = clock::now();
    std::shared_ptr<Connection> conn;
    const std::function<void(const nlohmann::json&)> emit = [&](const nlohmann::json& msg) {
      boost::asio::post(ioc_, [c = conn, text = msg.dump()]() mutable { c->send(std::move(text)); });
    };
    const std::function<void()> pace = [&] {
      tick_ = session_.tick();
      if (opt_.speed <= 0.0) return;
      deadline += std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(dt / opt_.speed));
      std::this_thread::sleep_until(deadline);
    };

    while (!stopping_) {
      TeleopCommand cmd;
      std::optional<nlohmann::json> reset;
      bool greet = false;
      {
        std::lock_guard<std::mutex> lock(mu_);
        conn = active_;
        cmd = command_;
        reset.swap(pending_reset_);
        greet = std::exchange(greet_, false);
      }
      if (!conn) {
        // No operator: the world holds.
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
        continue;
      }
      if (reset) {
        try {
          session_.reset(reset->value("seed", std::uint64_t{0}), reset->value("spec", nlohmann::json::object()));
        } catch (const std::exception& e) {
          emit(wire::error(e.what()));
        }
        greet = true;
      }
      if (greet) emit(session_.state());
      session_.set_command(cmd);
      if (clock::now() - deadline > std::chrono::milliseconds(100)) deadline = clock::now();
      bool stepped = false;
      try {
        stepped = session_.advance(emit, pace);
      } catch (const std::exception& e) {
        emit(wire::error(e.what()));
      }
      if (!stepped) std::this_thread::sleep_for(std::chrono::milliseconds(16));
    }
  }

  ServerOptions opt_;
  TeleopSession session_;  // sim thread only after start()
  boost::asio::io_context ioc_{1};
  boost::asio::ip::tcp::acceptor acceptor_{ioc_};
  std::thread io_thread_;
  std::thread sim_thread_;
  std::atomic<bool> stopping_{false};
  std::atomic<long long> tick_{0};
  unsigned short port_ = 0;

  mutable std::mutex mu_;
  std::shared_ptr<Connection> active_;
  TeleopCommand command_;
  std::optional<nlohmann::json> pending_reset_;
  bool greet_ = false;
};

}  // namespace benchpush
