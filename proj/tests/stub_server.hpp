#pragma once

#include <atomic>
#include <chrono>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"

namespace dfa_icl::testing {

/// Local OpenAI-style endpoint. The responder maps a request body to
/// (status, completion text); requests are recorded for inspection.
class StubServer {
 public:
  using Responder = std::function<std::pair<int, std::string>(const nlohmann::json& body)>;

  explicit StubServer(Responder responder, int delay_ms = 0) : responder_(std::move(responder)), delay_ms_(delay_ms) {
    auto handler = [this](const httplib::Request& req, httplib::Response& res) {
      const int now = in_flight_.fetch_add(1) + 1;
      for (int seen = max_in_flight_.load(); now > seen && !max_in_flight_.compare_exchange_weak(seen, now);) {
      }
      const auto body = nlohmann::json::parse(req.body);
      {
        std::lock_guard guard(mutex_);
        bodies_.push_back(body);
        auth_.push_back(req.get_header_value("Authorization"));
        paths_.push_back(req.path);
      }
      if (delay_ms_ > 0) std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms_));
      const auto [status, text] = responder_(body);
      res.status = status;
      const bool chat = body.contains("messages");
      nlohmann::json choice = chat ? nlohmann::json{{"message", {{"role", "assistant"}, {"content", text}}}}
                                   : nlohmann::json{{"text", text}};
      res.set_content(status == 200 ? nlohmann::json{{"choices", {choice}}}.dump() : std::string("{\"error\":\"stub\"}"),
                      "application/json");
      in_flight_.fetch_sub(1);
    };
    server_.Post("/v1/chat/completions", handler);
    server_.Post("/v1/completions", handler);
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~StubServer() {
    server_.stop();
    thread_.join();
  }

  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }
  std::size_t request_count() const {
    std::lock_guard guard(mutex_);
    return bodies_.size();
  }
  std::vector<nlohmann::json> bodies() const {
    std::lock_guard guard(mutex_);
    return bodies_;
  }
  std::vector<std::string> auth_headers() const {
    std::lock_guard guard(mutex_);
    return auth_;
  }
  std::vector<std::string> paths() const {
    std::lock_guard guard(mutex_);
    return paths_;
  }
  int max_in_flight() const { return max_in_flight_.load(); }

  /// Prompt text of a chat or completion body.
  static std::string prompt_of(const nlohmann::json& body) {
    if (body.contains("messages")) return body.at("messages").at(0).at("content").get<std::string>();
    return body.at("prompt").get<std::string>();
  }

 private:
  Responder responder_;
  int delay_ms_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  mutable std::mutex mutex_;
  std::vector<nlohmann::json> bodies_;
  std::vector<std::string> auth_;
  std::vector<std::string> paths_;
  std::atomic<int> in_flight_{0};
  std::atomic<int> max_in_flight_{0};
};

}  // namespace dfa_icl::testing
