#pragma once

// HTTP binding of the session protocol (see docs/protocol.md).
//
//   POST /v1/sessions                      create, body = session config
//   GET  /v1/sessions/{id}/state           snapshot
//   POST /v1/sessions/{id}/commands        command -> acknowledgment
//   GET  /v1/sessions/{id}/events?since=N&wait=MS   long-poll, JSON array
//   GET  /v1/sessions/{id}/stream?since=N  server-sent events, one per event
//
// With `tick` > 0 a background thread advances every session's simulated
// clock in real time, so announce windows close on their own.

#include <httplib.h>

#include <atomic>
#include <chrono>
#include <string>
#include <thread>

#include "session.hpp"

namespace ownnorm {

class HttpService {
 public:
  explicit HttpService(std::chrono::milliseconds tick = std::chrono::milliseconds(50)) : tick_(tick) { routes(); }

  ~HttpService() { stop(); }

  SessionManager& sessions() { return sessions_; }

  // Binds and serves on a background thread; returns the bound port.
  int start(const std::string& host = "127.0.0.1", int port = 0) {
    int bound = port == 0 ? server_.bind_to_any_port(host) : (server_.bind_to_port(host, port) ? port : -1);
    if (bound < 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
    listener_ = std::jthread([this] { server_.listen_after_bind(); });
    if (tick_.count() > 0)
      ticker_ = std::jthread([this](std::stop_token st) {
        auto last = std::chrono::steady_clock::now();
        while (!st.stop_requested()) {
          std::this_thread::sleep_for(tick_);
          auto now = std::chrono::steady_clock::now();
          sessions_.advance_all(std::chrono::duration<double>(now - last).count());
          last = now;
        }
      });
    server_.wait_until_ready();
    return bound;
  }

  // Blocks serving until stop().
  void listen(const std::string& host, int port) {
    start(host, port);
    if (listener_.joinable()) listener_.join();
  }

  void stop() {
    stopping_ = true;
    server_.stop();
    if (ticker_.joinable()) {
      ticker_.request_stop();
      ticker_.join();
    }
    if (listener_.joinable()) listener_.join();
  }

 private:
  static void reply(httplib::Response& res, const json& body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static void error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
    reply(res, {{"version", kProtocolVersion}, {"ok", false}, {"error", {{"code", code}, {"message", message}}}}, status);
  }

  template <typename Fn>
  static void guarded(httplib::Response& res, Fn&& fn) {
    try {
      fn();
    } catch (const ProtocolError& e) {
      error(res, e.code() == "unknownSession" ? 404 : 400, e.code(), e.what());
    } catch (const json::exception& e) {
      error(res, 400, "malformed", e.what());
    } catch (const std::exception& e) {
      error(res, 400, "invalidArgument", e.what());
    }
  }

  static std::uint64_t since_param(const httplib::Request& req) {
    return req.has_param("since") ? std::stoull(req.get_param_value("since")) : 0;
  }

  void routes() {
    server_.Post("/v1/sessions", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        json config = req.body.empty() ? json::object() : json::parse(req.body);
        reply(res, sessions_.create(config), 201);
      });
    });
    server_.Get(R"(/v1/sessions/([^/]+)/state)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { reply(res, sessions_.query_state(req.matches[1])); });
    });
    server_.Post(R"(/v1/sessions/([^/]+)/commands)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        auto session = sessions_.get(req.matches[1]);
        auto ack = session->submit(json::parse(req.body));
        reply(res, ack, ack.at("ok").get<bool>() ? 200 : 400);
      });
    });
    server_.Get(R"(/v1/sessions/([^/]+)/events)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        auto session = sessions_.get(req.matches[1]);
        auto wait = req.has_param("wait") ? std::stoll(req.get_param_value("wait")) : 0;
        json out = json::array();
        for (const auto& e : session->events_since(since_param(req), std::chrono::milliseconds(wait)))
          out.push_back(event_to_json(e));
        reply(res, out);
      });
    });
    server_.Get(R"(/v1/sessions/([^/]+)/stream)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        auto session = sessions_.get(req.matches[1]);
        auto cursor = std::make_shared<std::uint64_t>(since_param(req));
        res.set_chunked_content_provider("text/event-stream", [this, session, cursor](size_t, httplib::DataSink& sink) {
          if (stopping_) return false;
          for (const auto& e : session->events_since(*cursor, std::chrono::milliseconds(250))) {
            auto line = "id: " + std::to_string(e.seq) + "\nevent: " + e.kind + "\ndata: " + event_to_json(e).dump() + "\n\n";
            if (!sink.write(line.data(), line.size())) return false;
            *cursor = e.seq;
          }
          return true;
        });
      });
    });
  }

  std::chrono::milliseconds tick_;
  SessionManager sessions_;
  httplib::Server server_;
  std::atomic<bool> stopping_{false};
  std::jthread listener_;
  std::jthread ticker_;
};

}  // namespace ownnorm
