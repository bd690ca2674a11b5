#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <semaphore>
#include <string>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "dfa_icl/errors.hpp"
#include "dfa_icl/persistence.hpp"
#include "dfa_icl/serialization.hpp"

namespace dfa_icl {

/// Endpoint settings. Only the *name* of the API-key variable is stored;
/// the key itself is read from the environment per request.
struct EndpointConfig {
  std::string base_url = "http://127.0.0.1:8000/v1";
  std::string model_name;
  double temperature = 0.0;
  int max_output_tokens = 1024;
  std::string api_key_env;  // empty: no Authorization header
  int request_timeout_s = 120;
  int max_parallel_requests = 4;
  bool chat = true;        // chat-completions vs plain completions
  bool reasoning = false;  // reasoning-class models get no temperature field
  int max_retries = 5;
  int backoff_initial_ms = 500;
  int backoff_max_ms = 30'000;
};

inline json endpoint_to_json(const EndpointConfig& c) {
  return json{{"base_url", c.base_url},
              {"model_name", c.model_name},
              {"temperature", round_sig10(c.temperature)},
              {"max_output_tokens", c.max_output_tokens},
              {"api_key_env", c.api_key_env},
              {"request_timeout", c.request_timeout_s},
              {"max_parallel_requests", c.max_parallel_requests},
              {"chat", c.chat},
              {"reasoning", c.reasoning},
              {"max_retries", c.max_retries},
              {"backoff_initial_ms", c.backoff_initial_ms},
              {"backoff_max_ms", c.backoff_max_ms}};
}

inline EndpointConfig endpoint_from_json(const json& j) {
  EndpointConfig c;
  c.base_url = j.at("base_url").get<std::string>();
  c.model_name = j.at("model_name").get<std::string>();
  c.temperature = j.value("temperature", 0.0);
  c.max_output_tokens = j.value("max_output_tokens", c.max_output_tokens);
  c.api_key_env = j.value("api_key_env", std::string{});
  c.request_timeout_s = j.value("request_timeout", c.request_timeout_s);
  c.max_parallel_requests = std::max(1, j.value("max_parallel_requests", c.max_parallel_requests));
  c.chat = j.value("chat", true);
  c.reasoning = j.value("reasoning", false);
  c.max_retries = j.value("max_retries", c.max_retries);
  c.backoff_initial_ms = j.value("backoff_initial_ms", c.backoff_initial_ms);
  c.backoff_max_ms = j.value("backoff_max_ms", c.backoff_max_ms);
  if (c.temperature < 0) throw std::invalid_argument("temperature must be >= 0");
  return c;
}

/// Request body in the chat-completions (or completions) schema.
inline json build_request_body(const EndpointConfig& c, const std::string& prompt) {
  json body{{"model", c.model_name}, {"max_tokens", c.max_output_tokens}};
  if (c.chat)
    body["messages"] = json::array({json{{"role", "user"}, {"content", prompt}}});
  else
    body["prompt"] = prompt;
  if (!c.reasoning) body["temperature"] = c.temperature;
  return body;
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// HTTP client for one endpoint. Thread-safe; at most
/// max_parallel_requests requests are in flight at once.
class ModelClient {
 public:
  explicit ModelClient(EndpointConfig config)
      : config_(std::move(config)), slots_(std::max(1, config_.max_parallel_requests)) {
    const auto scheme = config_.base_url.find("://");
    if (scheme == std::string::npos) throw std::invalid_argument("base_url needs a scheme: " + config_.base_url);
    const auto path = config_.base_url.find('/', scheme + 3);
    host_ = config_.base_url.substr(0, path);
    prefix_ = path == std::string::npos ? "" : config_.base_url.substr(path);
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
  }

  const EndpointConfig& config() const { return config_; }

  /// One completion. Retries 429, 5xx and transport failures with
  /// exponential backoff; throws AuthError on 401/403 and EndpointError
  /// once retries are exhausted or on any other failure.
  std::string complete(const std::string& prompt) {
    std::string auth;
    if (!config_.api_key_env.empty()) {
      const char* key = std::getenv(config_.api_key_env.c_str());
      if (key == nullptr || *key == '\0') throw AuthError("environment variable " + config_.api_key_env + " is not set");
      auth = std::string("Bearer ") + key;
    }
    const std::string path = prefix_ + (config_.chat ? "/chat/completions" : "/completions");
    const std::string body = build_request_body(config_, prompt).dump();

    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
      if (attempt > 0) {
        retries_.fetch_add(1);
        const long long delay = std::min<long long>(config_.backoff_max_ms,
                                                    static_cast<long long>(config_.backoff_initial_ms) << std::min(attempt - 1, 20));
        std::this_thread::sleep_for(std::chrono::milliseconds(delay));
      }
      httplib::Result res = send(path, body, auth);
      if (!res) {
        last_error = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status == 401 || res->status == 403) throw AuthError("endpoint rejected credentials (HTTP " + std::to_string(res->status) + ")");
      if (res->status == 429 || res->status >= 500) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200) throw EndpointError("HTTP " + std::to_string(res->status) + ": " + res->body);
      return extract_text(res->body);
    }
    throw EndpointError("giving up after " + std::to_string(config_.max_retries) + " retries: " + last_error);
  }

  long long requests_sent() const { return requests_.load(); }
  long long retries() const { return retries_.load(); }
  int max_in_flight() const { return max_in_flight_.load(); }

 private:
  httplib::Result send(const std::string& path, const std::string& body, const std::string& auth) {
    slots_.acquire();
    const int now = in_flight_.fetch_add(1) + 1;
    for (int seen = max_in_flight_.load(); now > seen && !max_in_flight_.compare_exchange_weak(seen, now);) {
    }
    requests_.fetch_add(1);
    httplib::Client client(host_);
    client.set_connection_timeout(config_.request_timeout_s);
    client.set_read_timeout(config_.request_timeout_s);
    client.set_write_timeout(config_.request_timeout_s);
    httplib::Headers headers;
    if (!auth.empty()) headers.emplace("Authorization", auth);
    httplib::Result res = client.Post(path, headers, body, "application/json");
    in_flight_.fetch_sub(1);
    slots_.release();
    return res;
  }

  std::string extract_text(const std::string& body) const {
    try {
      const json j = json::parse(body);
      const json& choice = j.at("choices").at(0);
      const json& text = config_.chat ? choice.at("message").at("content") : choice.at("text");
      return text.is_null() ? std::string{} : text.get<std::string>();
    } catch (const json::exception& e) {
      throw EndpointError(std::string("malformed completion response: ") + e.what());
    }
  }

  EndpointConfig config_;
  std::string host_;
  std::string prefix_;
  std::counting_semaphore<> slots_;
  std::atomic<long long> requests_{0};
  std::atomic<long long> retries_{0};
  std::atomic<int> in_flight_{0};
  std::atomic<int> max_in_flight_{0};
};

struct CachedResponse {
  std::string text;
  bool cache_hit = false;
  double latency_ms = 0;
  std::string timestamp;  // when the response was first obtained
};

/// Content-addressed response cache: <dir>/<sha256>.json per request.
/// Entries are written once via rename. Concurrent misses on the same key
/// are serialized so only one request is issued.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) { std::filesystem::create_directories(dir_); }

  static std::string key(const EndpointConfig& c, const std::string& prompt) {
    const json k{{"model_name", c.model_name},
                 {"temperature", round_sig10(c.temperature)},
                 {"max_output_tokens", c.max_output_tokens},
                 {"prompt", prompt}};
    return sha256_hex(k.dump());
  }

  CachedResponse cached_complete(ModelClient& client, const std::string& prompt) {
    const std::string k = key(client.config(), prompt);
    std::shared_ptr<std::mutex> lock = lock_for(k);
    std::lock_guard guard(*lock);
    const auto path = dir_ / (k + ".json");
    if (std::filesystem::exists(path)) {
      try {
        const json entry = json::parse(read_file(path));
        CachedResponse hit{entry.at("response").at("text").get<std::string>(), true,
                           entry.at("meta").value("latency_ms", 0.0), entry.at("meta").value("timestamp", std::string{})};
        return hit;
      } catch (const std::exception& e) {
        std::cerr << "cache: ignoring corrupt entry " << path << ": " << e.what() << '\n';
      }
    }
    const auto start = std::chrono::steady_clock::now();
    std::string text = client.complete(prompt);
    const double latency =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    CachedResponse miss{std::move(text), false, round_sig10(latency), utc_timestamp()};
    const json entry{{"request", {{"endpoint", endpoint_to_json(client.config())}, {"body", build_request_body(client.config(), prompt)}}},
                     {"response", {{"text", miss.text}}},
                     {"meta", {{"latency_ms", miss.latency_ms}, {"timestamp", miss.timestamp}, {"key", k}}}};
    write_file_atomic(path, entry.dump(2) + "\n");
    return miss;
  }

  std::size_t entry_count() const {
    std::size_t n = 0;
    for (const auto& e : std::filesystem::directory_iterator(dir_))
      if (e.path().extension() == ".json") ++n;
    return n;
  }

 private:
  std::shared_ptr<std::mutex> lock_for(const std::string& k) {
    std::lock_guard guard(map_mutex_);
    auto& slot = key_locks_[k];
    if (!slot) slot = std::make_shared<std::mutex>();
    return slot;
  }

  std::filesystem::path dir_;
  std::mutex map_mutex_;
  std::map<std::string, std::shared_ptr<std::mutex>> key_locks_;
};

struct Transcript {
  int dfa_id = 0;
  int instance_idx = 0;
  std::string predictor;
  std::string prompt;
  std::string response;
  json endpoint;
  std::string timestamp;
  bool cache_hit = false;
};

inline json transcript_to_json(const Transcript& t) {
  return json{{"dfa_id", t.dfa_id},     {"instance_idx", t.instance_idx}, {"predictor", t.predictor},
              {"prompt", t.prompt},     {"response", t.response},         {"endpoint", t.endpoint},
              {"timestamp", t.timestamp}, {"cache_hit", t.cache_hit}};
}

}  // namespace dfa_icl
