#pragma once

// HAPS meta level: load bookkeeping, the Offload/Recall/Idle rule, the meta
// reward, and a driver that interleaves meta decisions with edge steps.

#include <spdlog/spdlog.h>

#include <algorithm>
#include <concepts>
#include <cstdint>
#include <functional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace uavsim {

class MetaActionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class LinkKind { kHaps, kTbs };

inline constexpr std::string_view to_string(LinkKind k) { return k == LinkKind::kHaps ? "HAPS" : "TBS"; }

struct MetaUavEntry {
  int uav_id = 0;
  LinkKind link = LinkKind::kTbs;
  double rate_mbps = 0.0;  // contribution to the HAPS load when on the HAPS
  int priority = 3;        // 1 = mission critical, 5 = delay tolerant
  bool ground_coverage = true;
  bool offloaded = false;            // moved off the HAPS by the meta level and not yet recalled
  double projected_haps_mbps = 0.0;  // contribution if it were (re)attached to the HAPS
};

struct MetaState {
  std::vector<MetaUavEntry> per_uav;  // ascending uav_id
  double haps_load_mbps = 0.0;
  double haps_capacity_mbps = 100.0;

  [[nodiscard]] const MetaUavEntry* find(int uav_id) const {
    for (const auto& e : per_uav) {
      if (e.uav_id == uav_id) return &e;
    }
    return nullptr;
  }
};

/// B_t: sum of the contributions of HAPS-attached UAVs.
inline double compute_haps_load(std::span<const MetaUavEntry> per_uav) {
  double total = 0.0;
  for (const auto& e : per_uav) {
    if (e.link == LinkKind::kHaps) total += e.rate_mbps;
  }
  return total;
}

inline void validate_meta_state(const MetaState& s) {
  std::set<int> ids;
  for (const auto& e : s.per_uav) {
    if (e.priority < 1 || e.priority > 5) {
      throw std::invalid_argument("meta state: priority of UAV " + std::to_string(e.uav_id) + " outside [1,5]");
    }
    if (!ids.insert(e.uav_id).second) throw std::invalid_argument("meta state: duplicate UAV id");
  }
  if (!(s.haps_capacity_mbps > 0.0)) throw std::invalid_argument("meta state: capacity must be > 0");
}

enum class MetaActionKind { kOffload, kRecall, kIdle };

struct MetaAction {
  MetaActionKind kind = MetaActionKind::kIdle;
  std::vector<int> targets;  // sorted, unique; empty for Idle

  static MetaAction idle() { return {}; }
  static MetaAction offload(std::vector<int> ids) { return make(MetaActionKind::kOffload, std::move(ids)); }
  static MetaAction recall(std::vector<int> ids) { return make(MetaActionKind::kRecall, std::move(ids)); }

  bool operator==(const MetaAction&) const = default;

 private:
  static MetaAction make(MetaActionKind k, std::vector<int> ids) {
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    if (ids.empty()) throw MetaActionError("Offload/Recall needs at least one UAV id");
    return {k, std::move(ids)};
  }
};

/// Grammar form: Offload{1,2}, Recall{5}, Idle.
inline std::string to_string(const MetaAction& a) {
  if (a.kind == MetaActionKind::kIdle) return "Idle";
  std::string out = a.kind == MetaActionKind::kOffload ? "Offload{" : "Recall{";
  for (std::size_t i = 0; i < a.targets.size(); ++i) {
    if (i > 0) out += ',';
    out += std::to_string(a.targets[i]);
  }
  return out + '}';
}

/// Offload targets must sit on the HAPS, Recall targets on a terrestrial station.
inline void validate_meta_action(const MetaState& s, const MetaAction& a) {
  for (int id : a.targets) {
    const auto* e = s.find(id);
    if (e == nullptr) throw MetaActionError("meta action names unknown UAV " + std::to_string(id));
    if (a.kind == MetaActionKind::kOffload && e->link != LinkKind::kHaps) {
      throw MetaActionError("Offload target " + std::to_string(id) + " is not HAPS-attached");
    }
    if (a.kind == MetaActionKind::kRecall && e->link != LinkKind::kTbs) {
      throw MetaActionError("Recall target " + std::to_string(id) + " is not TBS-attached");
    }
  }
}

/// State after the action with every other UAV's contribution held fixed.
inline MetaState project_meta_action(const MetaState& s, const MetaAction& a) {
  validate_meta_action(s, a);
  MetaState out = s;
  for (int id : a.targets) {
    auto it = std::find_if(out.per_uav.begin(), out.per_uav.end(), [&](const auto& e) { return e.uav_id == id; });
    if (a.kind == MetaActionKind::kOffload) {
      it->projected_haps_mbps = it->rate_mbps;
      it->link = LinkKind::kTbs;
      it->offloaded = true;
    } else {
      it->rate_mbps = it->projected_haps_mbps;
      it->link = LinkKind::kHaps;
      it->offloaded = false;
    }
  }
  out.haps_load_mbps = compute_haps_load(out.per_uav);
  return out;
}

/// Offload the weakest HAPS user when over capacity, else recall the
/// strongest offloaded UAV that still fits, else do nothing.
inline MetaAction rule_based_meta_policy(const MetaState& s) {
  const double load = s.haps_load_mbps;
  if (load > s.haps_capacity_mbps) {
    const MetaUavEntry* pick = nullptr;
    for (const auto& e : s.per_uav) {
      if (e.link != LinkKind::kHaps || !e.ground_coverage) continue;
      const bool better = pick == nullptr || e.rate_mbps < pick->rate_mbps ||
                          (e.rate_mbps == pick->rate_mbps &&
                           (e.priority > pick->priority || (e.priority == pick->priority && e.uav_id < pick->uav_id)));
      if (better) pick = &e;
    }
    if (pick == nullptr) {
      spdlog::warn("meta: HAPS load {:.3f} > capacity {:.3f} but no HAPS user has ground coverage; idling", load,
                   s.haps_capacity_mbps);
      return MetaAction::idle();
    }
    return MetaAction::offload({pick->uav_id});
  }
  const MetaUavEntry* pick = nullptr;
  for (const auto& e : s.per_uav) {
    if (e.link != LinkKind::kTbs || !e.offloaded) continue;
    if (load + e.projected_haps_mbps > s.haps_capacity_mbps) continue;
    if (pick == nullptr || e.projected_haps_mbps > pick->projected_haps_mbps) pick = &e;
  }
  if (pick != nullptr) return MetaAction::recall({pick->uav_id});
  return MetaAction::idle();
}

struct MetaRewardWeights {
  double eta1 = 0.01;
  double eta2 = 1.0;
  double eta3 = 1.0;

  void validate() const {
    if (eta1 < 0 || eta2 < 0 || eta3 < 0) throw std::invalid_argument("meta reward weights must be >= 0");
  }
};

/// How the handover term of the meta reward is measured.
enum class MetaMuMode { kSummedPenalty, kHandoverCount };

/// eta1 * sum of per-UAV rates - eta2 * saturated - eta3 * mu.
inline double meta_reward(const MetaState& after, bool saturated, double total_mu, const MetaRewardWeights& w) {
  double sum_rate = 0.0;
  for (const auto& e : after.per_uav) sum_rate += e.rate_mbps;
  return w.eta1 * sum_rate - w.eta2 * (saturated ? 1.0 : 0.0) - w.eta3 * total_mu;
}

struct MetaApplyResult {
  double total_mu = 0.0;   // summed handover penalty of enforced moves
  int handover_count = 0;  // one vertical handover per moved UAV
};

struct MetaTransition {
  int episode = 0;
  int step = 0;
  MetaState state;
  MetaAction action;
  double reward = 0.0;
  MetaState next_state;
};

class MetaPolicy {
 public:
  virtual ~MetaPolicy() = default;
  virtual MetaAction decide(const MetaState& s) = 0;
  virtual void record(const MetaTransition&) {}
  [[nodiscard]] virtual std::string name() const = 0;
};

class RuleBasedMetaPolicy final : public MetaPolicy {
 public:
  MetaAction decide(const MetaState& s) override { return rule_based_meta_policy(s); }
  [[nodiscard]] std::string name() const override { return "rule_based"; }
};

class IdleMetaPolicy final : public MetaPolicy {
 public:
  MetaAction decide(const MetaState&) override { return MetaAction::idle(); }
  [[nodiscard]] std::string name() const override { return "idle"; }
};

/// What the meta loop needs from a simulation.
template <class E>
concept MetaEnvironment = requires(E& env, const MetaAction& a, int episode, int steps) {
  { env.reset(episode) };
  { env.meta_state() } -> std::convertible_to<MetaState>;
  { env.apply_meta_action(a) } -> std::convertible_to<MetaApplyResult>;
  { env.advance(steps) } -> std::convertible_to<bool>;  // false once the episode has ended
};

struct MetaLoopOptions {
  int period = 5;  // edge steps per meta decision
  MetaRewardWeights weights;
  MetaMuMode mu_mode = MetaMuMode::kSummedPenalty;
};

/// Runs `episodes` episodes of at most `steps` edge steps, one meta decision every
/// `period` steps. The next state of a transition is observed right after the action.
template <MetaEnvironment Env>
std::vector<MetaTransition> run_meta_loop(Env& env, MetaPolicy& policy, int episodes, int steps,
                                          const MetaLoopOptions& opts = {},
                                          const std::function<void(int)>& on_episode_end = {}) {
  if (opts.period < 1) throw std::invalid_argument("meta period must be >= 1");
  std::vector<MetaTransition> transcript;
  for (int ep = 0; ep < episodes; ++ep) {
    env.reset(ep);
    for (int t = 0; t < steps; t += opts.period) {
      MetaTransition tr;
      tr.episode = ep;
      tr.step = t;
      tr.state = env.meta_state();
      tr.action = policy.decide(tr.state);
      const MetaApplyResult applied = env.apply_meta_action(tr.action);
      tr.next_state = env.meta_state();
      const bool saturated = tr.next_state.haps_load_mbps > tr.next_state.haps_capacity_mbps;
      const double mu =
          opts.mu_mode == MetaMuMode::kSummedPenalty ? applied.total_mu : static_cast<double>(applied.handover_count);
      tr.reward = meta_reward(tr.next_state, saturated, mu, opts.weights);
      policy.record(tr);
      transcript.push_back(std::move(tr));
      if (!env.advance(std::min(opts.period, steps - t))) break;
    }
    if (on_episode_end) on_episode_end(ep);
  }
  return transcript;
}

}  // namespace uavsim
