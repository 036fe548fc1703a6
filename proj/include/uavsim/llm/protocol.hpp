#pragma once

// Tagged reply grammar: <tran_action>, <tele_action> and <meta_action>.

#include <algorithm>
#include <cctype>
#include <optional>
#include <regex>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "uavsim/edge_env.hpp"
#include "uavsim/meta_controller.hpp"

namespace uavsim::llm {

inline const std::string kTranTag = "tran_action";
inline const std::string kTeleTag = "tele_action";
inline const std::string kMetaTag = "meta_action";
inline const std::vector<std::string> kEdgeTags{kTranTag, kTeleTag};
inline const std::vector<std::string> kMetaTags{kMetaTag};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::vector<std::string> tags, const std::string& detail)
      : std::runtime_error(detail), tags_(std::move(tags)) {}
  [[nodiscard]] const std::vector<std::string>& tags() const { return tags_; }

 private:
  std::vector<std::string> tags_;
};

namespace detail {

inline std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

inline std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n\f\v";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

}  // namespace detail

/// Body of the first well-formed <tag>...</tag>, trimmed; nullopt if there is none.
inline std::optional<std::string> extract_tag(std::string_view text, const std::string& tag) {
  const std::string hay = detail::lower(text);
  const std::string open = "<" + detail::lower(tag) + ">";
  const std::string close = "</" + detail::lower(tag) + ">";
  std::size_t pos = hay.find(open);
  while (pos != std::string::npos) {
    const std::size_t body = pos + open.size();
    const std::size_t end = hay.find(close, body);
    if (end == std::string::npos) return std::nullopt;
    const std::size_t next_open = hay.find(open, body);
    if (next_open == std::string::npos || next_open > end) {
      return std::string(detail::trim(text.substr(body, end - body)));
    }
    pos = next_open;  // an unterminated opener; retry from the next one
  }
  return std::nullopt;
}

inline std::optional<TransportAction> parse_transport_action(std::string_view s) {
  const auto t = detail::lower(detail::trim(s));
  for (auto a : kAllTransportActions) {
    if (t == detail::lower(to_string(a))) return a;
  }
  return std::nullopt;
}

inline std::optional<TelecomAction> parse_telecom_action(std::string_view s) {
  const auto t = detail::lower(detail::trim(s));
  for (auto a : kAllTelecomActions) {
    if (t == detail::lower(to_string(a))) return a;
  }
  return std::nullopt;
}

/// Offload{1,2} / Recall{3} / Idle, case-insensitive, whitespace-tolerant.
inline std::optional<MetaAction> parse_meta_action(std::string_view s) {
  static const std::regex idle(R"(^\s*idle\s*$)", std::regex::icase);
  static const std::regex set(R"(^\s*(offload|recall)\s*\{\s*(\d+(?:\s*,\s*\d+)*)\s*\}\s*$)", std::regex::icase);
  const std::string text(s);
  if (std::regex_match(text, idle)) return MetaAction::idle();
  std::smatch m;
  if (!std::regex_match(text, m, set)) return std::nullopt;
  std::vector<int> ids;
  static const std::regex number(R"(\d+)");
  const std::string list = m[2].str();
  for (auto it = std::sregex_iterator(list.begin(), list.end(), number); it != std::sregex_iterator(); ++it) {
    try {
      ids.push_back(std::stoi(it->str()));
    } catch (const std::out_of_range&) {
      return std::nullopt;
    }
  }
  return detail::lower(m[1].str()) == "offload" ? MetaAction::offload(ids) : MetaAction::recall(ids);
}

struct TaggedResponse {
  std::optional<TransportAction> tran;
  std::optional<TelecomAction> tele;
  std::optional<MetaAction> meta;
};

/// Parses every expected tag with its grammar. All problems are reported together.
inline TaggedResponse parse_tagged_response(std::string_view text, std::span<const std::string> expected_tags) {
  TaggedResponse out;
  std::vector<std::string> bad;
  std::string detail;
  for (const auto& tag : expected_tags) {
    if (tag != kTranTag && tag != kTeleTag && tag != kMetaTag) throw std::invalid_argument("unknown tag " + tag);
    const auto body = extract_tag(text, tag);
    std::string problem;
    if (!body) {
      problem = "missing";
    } else if (body->empty()) {
      problem = "empty";
    } else if (tag == kTranTag) {
      out.tran = parse_transport_action(*body);
      if (!out.tran) problem = "unknown transport action '" + *body + "'";
    } else if (tag == kTeleTag) {
      out.tele = parse_telecom_action(*body);
      if (!out.tele) problem = "unknown telecom action '" + *body + "'";
    } else {
      out.meta = parse_meta_action(*body);
      if (!out.meta) problem = "unparseable meta action '" + *body + "'";
    }
    if (!problem.empty()) {
      bad.push_back(tag);
      detail += (detail.empty() ? "" : "; ") + ("<" + tag + ">: " + problem);
    }
  }
  if (!bad.empty()) throw ParseError(std::move(bad), "reply rejected: " + detail);
  return out;
}

inline JointAction parse_edge_reply(std::string_view text) {
  const auto r = parse_tagged_response(text, kEdgeTags);
  return {*r.tran, *r.tele};
}

inline MetaAction parse_meta_reply(std::string_view text) { return *parse_tagged_response(text, kMetaTags).meta; }

inline std::string render_edge_reply(JointAction a) {
  return "<" + kTranTag + ">" + std::string(to_string(a.transport)) + "</" + kTranTag + ">\n<" + kTeleTag + ">" +
         std::string(to_string(a.telecom)) + "</" + kTeleTag + ">";
}

inline std::string render_meta_reply(const MetaAction& a) {
  return "<" + kMetaTag + ">" + to_string(a) + "</" + kMetaTag + ">";
}

/// Compact joint-action label used in experience lists, e.g. {FASTER, T1}.
inline std::string joint_action_label(JointAction a) {
  return "{" + std::string(to_string(a.transport)) + ", " + std::string(to_string(a.telecom)) + "}";
}

}  // namespace uavsim::llm
