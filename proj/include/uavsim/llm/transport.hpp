#pragma once

// Endpoint configuration, the transport interface, a scripted transcript
// replayer, and the retrying query loop.

#include <json.hpp>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdint>
#include <deque>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>

#include "uavsim/llm/prompts.hpp"

namespace uavsim::llm {

struct LlmEndpointConfig {
  std::string base_url = "http://127.0.0.1:11434";
  std::string model_name = "llama3";
  int timeout_ms = 30000;
  int max_retries = 2;
  double temperature = 0.0;
  int backoff_ms = 250;  // first retry delay, doubled per attempt

  void validate() const {
    if (timeout_ms <= 0) throw std::invalid_argument("llm.timeout_ms must be > 0");
    if (max_retries < 0) throw std::invalid_argument("llm.max_retries must be >= 0");
    if (backoff_ms < 0) throw std::invalid_argument("llm.backoff_ms must be >= 0");
    if (!(temperature >= 0.0)) throw std::invalid_argument("llm.temperature must be >= 0");
    if (base_url.empty()) throw std::invalid_argument("llm.base_url must not be empty");
  }
};

enum class TransportErrorKind { kTimeout, kServer, kClient, kConnection, kProtocol };

inline constexpr std::string_view to_string(TransportErrorKind k) {
  switch (k) {
    case TransportErrorKind::kTimeout: return "timeout";
    case TransportErrorKind::kServer: return "server";
    case TransportErrorKind::kClient: return "client";
    case TransportErrorKind::kConnection: return "connection";
    case TransportErrorKind::kProtocol: return "protocol";
  }
  return "protocol";
}

class TransportError : public std::runtime_error {
 public:
  TransportError(TransportErrorKind kind, const std::string& what, int status = 0)
      : std::runtime_error(what), kind_(kind), status_(status) {}
  [[nodiscard]] TransportErrorKind kind() const { return kind_; }
  [[nodiscard]] int status() const { return status_; }
  /// Timeouts, 5xx and dropped connections are worth another attempt.
  [[nodiscard]] bool retryable() const {
    return kind_ == TransportErrorKind::kTimeout || kind_ == TransportErrorKind::kServer ||
           kind_ == TransportErrorKind::kConnection;
  }

 private:
  TransportErrorKind kind_;
  int status_;
};

class EndpointUnavailable : public std::runtime_error {
 public:
  EndpointUnavailable(const std::string& what, int attempts) : std::runtime_error(what), attempts_(attempts) {}
  [[nodiscard]] int attempts() const { return attempts_; }

 private:
  int attempts_;
};

class LlmTransport {
 public:
  virtual ~LlmTransport() = default;
  /// One attempt. Throws TransportError on failure.
  virtual std::string complete(const PromptBundle& prompt, const LlmEndpointConfig& cfg) = 0;
};

/// FNV-1a 64 over system text, a unit separator, and user text; 16 hex digits.
inline std::string request_hash(const PromptBundle& p) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  };
  mix(p.system_text);
  mix("\x1f");
  mix(p.user_text);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = kHex[h & 0xF];
  return out;
}

/// Replays a transcript. Lines are {"request_hash": ..., "reply": ...} with an optional
/// "role" ("meta"/"edge"). Lookup order: exact hash, then "*" for the prompt's role,
/// then "*" without a role. Several lines with one key are served in order; the last repeats.
class ScriptedTransport final : public LlmTransport {
 public:
  ScriptedTransport() = default;
  ScriptedTransport(ScriptedTransport&& other) noexcept {
    std::lock_guard lock(other.mu_);
    replies_ = std::move(other.replies_);
    pending_failures_ = other.pending_failures_;
    failure_kind_ = other.failure_kind_;
    calls_ = other.calls_;
  }

  static ScriptedTransport from_jsonl(std::istream& in) {
    ScriptedTransport t;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        const auto j = nlohmann::json::parse(line);
        t.add(j.at("request_hash").get<std::string>(), j.at("reply").get<std::string>(), j.value("role", ""));
      } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("transcript line " + std::to_string(lineno) + ": " + e.what());
      }
    }
    return t;
  }

  static ScriptedTransport from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open transcript " + path);
    return from_jsonl(in);
  }

  void add(const std::string& hash, std::string reply, const std::string& role = "") {
    std::lock_guard lock(mu_);
    replies_[key(hash, role)].push_back(std::move(reply));
  }

  /// The next n calls fail with `kind` before consulting the transcript.
  void fail_next(int n, TransportErrorKind kind = TransportErrorKind::kTimeout) {
    std::lock_guard lock(mu_);
    pending_failures_ = n;
    failure_kind_ = kind;
  }

  std::string complete(const PromptBundle& prompt, const LlmEndpointConfig&) override {
    std::lock_guard lock(mu_);
    ++calls_;
    if (pending_failures_ > 0) {
      --pending_failures_;
      throw TransportError(failure_kind_, "scripted " + std::string(to_string(failure_kind_)),
                           failure_kind_ == TransportErrorKind::kServer ? 503 : 0);
    }
    const std::string hash = request_hash(prompt);
    for (const auto& k : {key(hash, ""), key("*", prompt.metadata.role), key("*", "")}) {
      auto it = replies_.find(k);
      if (it == replies_.end()) continue;
      auto& q = it->second;
      std::string reply = q.front();
      if (q.size() > 1) q.pop_front();
      return reply;
    }
    throw TransportError(TransportErrorKind::kClient, "transcript has no reply for request " + hash, 404);
  }

  [[nodiscard]] long calls() const {
    std::lock_guard lock(mu_);
    return calls_;
  }

 private:
  static std::string key(const std::string& hash, const std::string& role) {
    return hash == "*" ? "*|" + role : hash;
  }

  mutable std::mutex mu_;
  std::map<std::string, std::deque<std::string>> replies_;
  int pending_failures_ = 0;
  TransportErrorKind failure_kind_ = TransportErrorKind::kTimeout;
  long calls_ = 0;
};

/// Forwards to another transport and appends each successful exchange as a transcript line.
class RecordingTransport final : public LlmTransport {
 public:
  RecordingTransport(LlmTransport& inner, std::ostream& out) : inner_(inner), out_(out) {}

  std::string complete(const PromptBundle& prompt, const LlmEndpointConfig& cfg) override {
    std::string reply = inner_.complete(prompt, cfg);
    std::lock_guard lock(mu_);
    out_ << nlohmann::json{{"request_hash", request_hash(prompt)}, {"role", prompt.metadata.role}, {"reply", reply}}
                .dump()
         << '\n';
    return reply;
  }

 private:
  LlmTransport& inner_;
  std::ostream& out_;
  std::mutex mu_;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

inline void real_sleep(std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }

/// Up to 1 + max_retries attempts; retryable failures back off exponentially.
/// Non-retryable failures and exhaustion both end in EndpointUnavailable.
inline std::string query_llm(const PromptBundle& prompt, const LlmEndpointConfig& cfg, LlmTransport& transport,
                             const Sleeper& sleep = real_sleep) {
  cfg.validate();
  int attempt = 0;
  for (;;) {
    ++attempt;
    try {
      return transport.complete(prompt, cfg);
    } catch (const TransportError& e) {
      if (!e.retryable()) {
        throw EndpointUnavailable("llm request failed (" + std::string(to_string(e.kind())) + "): " + e.what(),
                                  attempt);
      }
      if (attempt > cfg.max_retries) {
        throw EndpointUnavailable("llm endpoint unavailable after " + std::to_string(attempt) + " attempts: " + e.what(),
                                  attempt);
      }
      const auto delay = std::chrono::milliseconds(static_cast<long>(cfg.backoff_ms) << (attempt - 1));
      spdlog::debug("llm attempt {} failed ({}); retrying in {} ms", attempt, e.what(), delay.count());
      if (sleep) sleep(delay);
    }
  }
}

}  // namespace uavsim::llm
