#pragma once

// Chat-completions client over plain HTTP (cpp-httplib).

#include <httplib.h>
#include <json.hpp>

#include <string>
#include <utility>

#include "uavsim/llm/transport.hpp"

namespace uavsim::llm {

struct ParsedUrl {
  std::string scheme_host_port;  // http://host:port
  std::string path_prefix;       // "" or "/something", no trailing slash
};

inline ParsedUrl parse_base_url(const std::string& url) {
  if (url.rfind("https://", 0) == 0) {
    throw std::invalid_argument("llm.base_url: https is not supported by this build; use an http:// endpoint");
  }
  if (url.rfind("http://", 0) != 0) throw std::invalid_argument("llm.base_url must start with http://");
  const auto slash = url.find('/', 7);
  ParsedUrl p{url.substr(0, slash), slash == std::string::npos ? "" : url.substr(slash)};
  while (!p.path_prefix.empty() && p.path_prefix.back() == '/') p.path_prefix.pop_back();
  return p;
}

/// Request path for a base URL; a base ending in /v1 is used as is.
inline std::string chat_completions_path(const ParsedUrl& u) {
  const bool has_v1 = u.path_prefix.size() >= 3 && u.path_prefix.compare(u.path_prefix.size() - 3, 3, "/v1") == 0;
  return u.path_prefix + (has_v1 ? "" : "/v1") + "/chat/completions";
}

inline nlohmann::json chat_request_body(const PromptBundle& p, const LlmEndpointConfig& cfg) {
  return {{"model", cfg.model_name},
          {"temperature", cfg.temperature},
          {"stream", false},
          {"messages",
           nlohmann::json::array({{{"role", "system"}, {"content", p.system_text}},
                                  {{"role", "user"}, {"content", p.user_text}}})}};
}

/// choices[0].message.content of a chat-completions response.
inline std::string chat_reply_content(const std::string& body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw TransportError(TransportErrorKind::kProtocol, std::string("malformed chat-completions response: ") + e.what());
  }
}

class HttpTransport final : public LlmTransport {
 public:
  explicit HttpTransport(const LlmEndpointConfig& cfg) : url_(parse_base_url(cfg.base_url)) {}

  std::string complete(const PromptBundle& prompt, const LlmEndpointConfig& cfg) override {
    httplib::Client cli(url_.scheme_host_port);
    const auto timeout = std::chrono::milliseconds(cfg.timeout_ms);
    cli.set_connection_timeout(timeout);
    cli.set_read_timeout(timeout);
    cli.set_write_timeout(timeout);
    const auto res =
        cli.Post(chat_completions_path(url_), chat_request_body(prompt, cfg).dump(), "application/json");
    if (!res) {
      const auto err = res.error();
      const auto kind = err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout
                            ? TransportErrorKind::kTimeout
                            : TransportErrorKind::kConnection;
      throw TransportError(kind, url_.scheme_host_port + ": " + httplib::to_string(err));
    }
    if (res->status >= 500) {
      throw TransportError(TransportErrorKind::kServer, "HTTP " + std::to_string(res->status), res->status);
    }
    if (res->status >= 400) {
      throw TransportError(TransportErrorKind::kClient, "HTTP " + std::to_string(res->status) + ": " + res->body,
                           res->status);
    }
    return chat_reply_content(res->body);
  }

 private:
  ParsedUrl url_;
};

}  // namespace uavsim::llm
