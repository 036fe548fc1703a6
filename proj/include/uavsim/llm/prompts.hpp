#pragma once

// Prompt rendering for the meta and edge agents. Pure functions of their inputs.

#include <fmt/format.h>

#include <optional>
#include <string>
#include <vector>

#include "uavsim/llm/experience.hpp"
#include "uavsim/llm/protocol.hpp"
#include "uavsim/meta_controller.hpp"
#include "uavsim/policies.hpp"

namespace uavsim::llm {

struct PromptMetadata {
  std::string role;  // "meta" or "edge"
  std::optional<int> uav_id;
  int step = 0;
};

struct PromptBundle {
  std::string system_text;
  std::string user_text;
  std::vector<std::string> expected_tags;
  PromptMetadata metadata;
};

inline constexpr std::size_t kDefaultExperienceK = 5;

/// Retrieval key for meta experiences: [B_t, C, #HAPS-attached, #offloaded].
inline std::vector<double> meta_experience_vector(const MetaState& s) {
  double on_haps = 0, offloaded = 0;
  for (const auto& e : s.per_uav) {
    if (e.link == LinkKind::kHaps) ++on_haps;
    if (e.offloaded) ++offloaded;
  }
  return {s.haps_load_mbps, s.haps_capacity_mbps, on_haps, offloaded};
}

inline std::vector<double> edge_experience_vector(const ObservationMatrix& obs, int num_bins) {
  return to_vector(discretize(obs, num_bins));
}

namespace detail {

inline std::string format_vector(const std::vector<double>& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) out += fmt::format("{}{:g}", i ? ", " : "", v[i]);
  return out + "]";
}

inline std::string render_experiences(const RetrievedExperiences& ex) {
  if (ex.good.empty() && ex.bad.empty()) return "No past experiences are available yet.\n";
  std::string out;
  auto list = [&out](const char* heading, const std::vector<Experience>& items) {
    out += fmt::format("{} ({}):\n", heading, items.size());
    if (items.empty()) out += "  (none)\n";
    for (const auto& e : items) {
      out += fmt::format("  - state {} | action {} | reward {:+.2f}\n", format_vector(e.state), e.action, e.reward);
    }
  };
  list("Good precedents, most similar first", ex.good);
  list("Bad precedents, most similar first", ex.bad);
  return out;
}

}  // namespace detail

inline PromptBundle build_meta_prompt(const MetaState& s, const RetrievedExperiences& experiences, int step = 0) {
  PromptBundle b;
  b.system_text =
      "You control UAV associations for one HAPS in a network that also has terrestrial base stations (TBS). "
      "Reply with exactly one meta action inside the requested tag.";

  std::string u;
  u += "## Task Description\n";
  u += "Decide which UAVs should use the HAPS and which should be moved to a terrestrial station.\n\n";
  u += "## Task Goal\n";
  u += "- Keep the total HAPS load B_t at or below the capacity C.\n";
  u += "- When B_t > C, move the weakest HAPS users to a TBS; when there is headroom, bring them back.\n";
  u += "- Avoid handovers that do not pay for themselves.\n\n";
  u += "## Environment Features\n";
  u += "- ID: UAV identifier.\n";
  u += "- Link: HAPS or TBS.\n";
  u += "- Rate: current throughput in Mbps.\n";
  u += "- Priority: 1 (mission critical) to 5 (delay tolerant).\n";
  u += fmt::format("HAPS capacity: {:g} Mbps\n\n", s.haps_capacity_mbps);
  u += "## Observations\n";
  u += fmt::format("{:>4} | {:<4} | {:>10} | {:>8} | {}\n", "ID", "Link", "Rate(Mbps)", "Priority", "Offloaded");
  for (const auto& e : s.per_uav) {
    u += fmt::format("{:>4} | {:<4} | {:>10.2f} | {:>8} | {}\n", e.uav_id, to_string(e.link), e.rate_mbps, e.priority,
                     e.offloaded ? "yes" : "no");
  }
  std::string terms;
  for (const auto& e : s.per_uav) {
    if (e.link != LinkKind::kHaps) continue;
    terms += fmt::format("{}{:.2f}", terms.empty() ? "" : " + ", e.rate_mbps);
  }
  u += terms.empty() ? fmt::format("Total HAPS load: B_t = {:.2f} Mbps\n\n", s.haps_load_mbps)
                     : fmt::format("Total HAPS load: B_t = {} = {:.2f} Mbps\n\n", terms, s.haps_load_mbps);
  u += "## Experience Replay\n";
  u += "State vectors are [B_t, C, HAPS users, offloaded UAVs].\n";
  u += detail::render_experiences(experiences);
  u += "\n## Rules\n";
  u += "Pick exactly one of:\n";
  u += "- Offload{id1,id2,...}: move the listed HAPS users to terrestrial stations.\n";
  u += "- Recall{id1,id2,...}: move the listed terrestrial UAVs back to the HAPS.\n";
  u += "- Idle: change nothing.\n";
  u += fmt::format("Put the action inside <{0}></{0}>. A short justification may precede it.\n", kMetaTag);

  b.user_text = std::move(u);
  b.expected_tags = kMetaTags;
  b.metadata = {"meta", std::nullopt, step};
  return b;
}

inline PromptBundle build_edge_prompt(const DecisionContext& ctx, const RetrievedExperiences& experiences,
                                      int num_bins = 8) {
  PromptBundle b;
  b.system_text =
      "You pilot one UAV on a multi-lane aerial highway and choose its connectivity policy. "
      "Reply with one transport action and one telecom action inside the requested tags.";

  const auto d = discretize(ctx.obs, num_bins);
  std::string u;
  u += "## Task Description\n";
  u += fmt::format("Choose the next manoeuvre of UAV {} and the station-selection policy it follows.\n\n", ctx.uav_id);
  u += "## Task Goal\n";
  u += "- Transport: fly fast, never collide, change lanes only when useful.\n";
  u += "- Telecom: high weighted data rate, few handovers, balanced station load.\n\n";
  u += "## Environment Features\n";
  u += "Each row holds four bins: x, y, vx, vy.\n";
  u += "- x: position along the highway (ego) or distance to the ego (others).\n";
  u += "- y: lateral offset.\n";
  u += "- vx: forward speed.\n";
  u += "- vy: lateral speed; non-zero while changing lanes.\n";
  u += fmt::format("Bins 0..{} normalise against bounds [{:g}, {:g}, {:g}, {:g}]; {} marks an absent row.\n",
                   num_bins - 1, kDiscretizationBounds[0], kDiscretizationBounds[1], kDiscretizationBounds[2],
                   kDiscretizationBounds[3], kPaddingBin);
  u += "gbs_cnt counts usable terrestrial stations, haps_cnt usable HAPS channels.\n\n";
  u += fmt::format("## Observations\nStep {}. Row 1 is the ego UAV.\n", ctx.step);
  for (std::size_t r = 0; r * 4 < d.bins.size() - 2; ++r) {
    const bool absent = r >= ctx.obs.rows.size() || !ctx.obs.rows[r].valid;
    u += fmt::format("row {}: [{}, {}, {}, {}]{}\n", r + 1, d.bins[4 * r], d.bins[4 * r + 1], d.bins[4 * r + 2],
                     d.bins[4 * r + 3], absent ? " absent" : "");
  }
  u += fmt::format("[gbs_cnt={}, haps_cnt={}]\n\n", ctx.telecom.gbs_cnt, ctx.telecom.haps_cnt);
  u += "## Experience Replay\n";
  u += detail::render_experiences(experiences);
  u += "\n## Rules\n";
  u += "- Transport action: one of FASTER, SLOWER, LANE_LEFT, LANE_RIGHT, IDLE.\n";
  u += "- Telecom action: one of T1, T2, T3.\n";
  u += fmt::format("- The reply must contain <{0}>...</{0}> and <{1}>...</{1}>.\n", kTranTag, kTeleTag);

  b.user_text = std::move(u);
  b.expected_tags = kEdgeTags;
  b.metadata = {"edge", ctx.uav_id, ctx.step};
  return b;
}

}  // namespace uavsim::llm
