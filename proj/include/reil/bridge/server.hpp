#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "reil/bridge/session.hpp"

namespace reil::bridge {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace http = boost::beast::http;
namespace websocket = boost::beast::websocket;
using tcp = boost::asio::ip::tcp;

inline SessionMessage busy_message() {
  return {MessageKind::Error, 1, {{"code", "BUSY"}, {"message", "another client is attached"}, {"in_reply_to", nullptr}}};
}

/// Serves one LiveSession on ws://<address>:<port>/session.
///
/// The network runs on its own thread; the session loop runs on the caller
/// of run(). They exchange an inbound event queue and outbound writes
/// posted to the network thread, so message handling never blocks stepping.
class SessionServer {
 public:
  SessionServer(LiveSession& session, unsigned short port, const std::string& address = "127.0.0.1")
      : session_(session), acceptor_(ioc_) {
    const tcp::endpoint ep(net::ip::make_address(address), port);
    acceptor_.open(ep.protocol());
    acceptor_.set_option(net::socket_base::reuse_address(true));
    acceptor_.bind(ep);
    acceptor_.listen();
  }

  ~SessionServer() {
    stop();
    if (io_thread_.joinable()) io_thread_.join();
  }

  unsigned short port() const { return acceptor_.local_endpoint().port(); }

  /// Runs until the session finishes or stop() is called.
  void run() {
    do_accept();
    io_thread_ = std::thread([this] { ioc_.run(); });
    session_loop();
    net::post(ioc_, [this] {
      if (auto c = active_.lock()) c->close();
      beast::error_code ec;
      acceptor_.close(ec);
    });
    // Let the final messages and the close frame drain.
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
    ioc_.stop();
    io_thread_.join();
  }

  void stop() {
    stopping_ = true;
    events_cv_.notify_all();
  }

 private:
  struct Event {
    enum Type { Connect, Line, Disconnect } type;
    std::uint64_t conn = 0;
    std::string text;
  };

  class Connection : public std::enable_shared_from_this<Connection> {
   public:
    Connection(tcp::socket socket, SessionServer& server, std::uint64_t id)
        : ws_(std::move(socket)), server_(server), id_(id) {}

    std::uint64_t id() const { return id_; }

    void start() {
      http::async_read(ws_.next_layer(), buffer_, request_,
                       [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_request(ec); });
    }

    void send(std::string line) {
      queue_.push_back(std::move(line));
      if (queue_.size() == 1) write_next();
    }

    void close() {
      closing_ = true;
      if (queue_.empty()) do_close();
    }

   private:
    void on_request(beast::error_code ec) {
      if (ec) return;
      if (!websocket::is_upgrade(request_) || request_.target() != "/session") {
        auto res = std::make_shared<http::response<http::string_body>>(http::status::not_found, request_.version());
        res->set(http::field::content_type, "text/plain");
        res->body() = "websocket endpoint is /session\n";
        res->prepare_payload();
        http::async_write(ws_.next_layer(), *res, [self = shared_from_this(), res](beast::error_code, std::size_t) {
          beast::error_code ignored;
          self->ws_.next_layer().shutdown(tcp::socket::shutdown_both, ignored);
        });
        return;
      }
      ws_.text(true);
      ws_.async_accept(request_, [self = shared_from_this()](beast::error_code ec2) { self->on_accept(ec2); });
    }

    void on_accept(beast::error_code ec) {
      if (ec) return;
      if (server_.active_.lock()) {
        send(to_line(busy_message()));
        close();
        return;
      }
      server_.active_ = weak_from_this();
      attached_ = true;
      server_.push({Event::Connect, id_, {}});
      read_next();
    }

    void read_next() {
      ws_.async_read(inbound_, [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
    }

    void on_read(beast::error_code ec) {
      if (ec) {
        detach();
        return;
      }
      const std::string frame = beast::buffers_to_string(inbound_.data());
      inbound_.consume(inbound_.size());
      std::size_t start = 0;
      while (start < frame.size()) {
        auto end = frame.find('\n', start);
        if (end == std::string::npos) end = frame.size();
        if (end > start) server_.push({Event::Line, id_, frame.substr(start, end - start)});
        start = end + 1;
      }
      read_next();
    }

    void write_next() {
      ws_.async_write(net::buffer(queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
        self->queue_.pop_front();
        if (ec) {
          self->detach();
          return;
        }
        if (!self->queue_.empty()) {
          self->write_next();
        } else if (self->closing_) {
          self->do_close();
        }
      });
    }

    void do_close() {
      ws_.async_close(websocket::close_code::normal, [self = shared_from_this()](beast::error_code) { self->detach(); });
    }

    void detach() {
      if (!attached_) return;
      attached_ = false;
      if (server_.active_.lock().get() == this) server_.active_.reset();
      server_.push({Event::Disconnect, id_, {}});
    }

    websocket::stream<tcp::socket> ws_;
    SessionServer& server_;
    std::uint64_t id_;
    beast::flat_buffer buffer_;
    beast::flat_buffer inbound_;
    http::request<http::string_body> request_;
    std::deque<std::string> queue_;
    bool attached_ = false;
    bool closing_ = false;
  };

  void do_accept() {
    acceptor_.async_accept([this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      std::make_shared<Connection>(std::move(socket), *this, ++next_id_)->start();
      do_accept();
    });
  }

  void push(Event e) {
    {
      std::lock_guard lock(events_mu_);
      events_.push_back(std::move(e));
    }
    events_cv_.notify_all();
  }

  void deliver(std::uint64_t conn, const std::vector<SessionMessage>& msgs) {
    if (msgs.empty()) return;
    std::vector<std::string> lines;
    for (const auto& m : msgs) lines.push_back(to_line(m));
    net::post(ioc_, [this, conn, lines = std::move(lines)]() mutable {
      auto c = active_.lock();
      if (!c || c->id() != conn) return;
      for (auto& l : lines) c->send(std::move(l));
    });
  }

  void session_loop() {
    using clock = std::chrono::steady_clock;
    const auto period = std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(session_.period_s()));
    auto next_tick = clock::now() + period;
    std::uint64_t current = 0;
    while (!stopping_ && !session_.finished()) {
      std::deque<Event> batch;
      {
        std::unique_lock lock(events_mu_);
        events_cv_.wait_until(lock, next_tick, [this] { return stopping_.load() || !events_.empty(); });
        batch.swap(events_);
      }
      for (auto& e : batch) {
        switch (e.type) {
          case Event::Connect:
            current = e.conn;
            deliver(current, session_.connect());
            break;
          case Event::Line:
            if (e.conn == current && session_.connected()) deliver(current, session_.handle_line(e.text));
            break;
          case Event::Disconnect:
            if (e.conn == current && session_.connected()) session_.disconnect();
            break;
        }
      }
      const auto now = clock::now();
      if (now >= next_tick) {
        deliver(current, session_.tick());
        next_tick += period;
        if (next_tick < now) next_tick = now + period;
      }
    }
  }

  LiveSession& session_;
  net::io_context ioc_;
  tcp::acceptor acceptor_;
  std::thread io_thread_;
  std::weak_ptr<Connection> active_;
  std::uint64_t next_id_ = 0;
  std::mutex events_mu_;
  std::condition_variable events_cv_;
  std::deque<Event> events_;
  std::atomic<bool> stopping_{false};
};

}  // namespace reil::bridge
