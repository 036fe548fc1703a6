#pragma once

// Per-step multi-UAV environment: kinematics, radio links, association,
// collisions and the per-UAV transport / telecom rewards.

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "uavsim/association.hpp"
#include "uavsim/channel.hpp"
#include "uavsim/meta_controller.hpp"
#include "uavsim/mobility.hpp"

namespace uavsim {

struct RewardWeights {
  double w1 = 1.0;  // speed
  double w2 = 5.0;  // collision
  double w3 = 0.5;  // lane-change rate
  double w4 = 0.1;  // weighted rate, per Mbps

  void validate() const {
    if (w1 < 0 || w2 < 0 || w3 < 0 || w4 < 0) throw std::invalid_argument("reward weights must be >= 0");
  }
};

/// Lane changes per elapsed step (0 before the first step).
inline double lane_change_rate(const UavState& u) {
  return u.steps_elapsed == 0 ? 0.0 : static_cast<double>(u.lane_changes_total) / u.steps_elapsed;
}

/// Unclamped w1 * normalized speed - w2 * collided - w3 * lane-change rate.
inline double transport_reward_raw(const UavState& u, bool collided, const RewardWeights& w, double v_min,
                                   double v_max) {
  if (!(v_max > v_min)) throw std::invalid_argument("transport_reward: v_max must exceed v_min");
  return w.w1 * (u.speed_mps - v_min) / (v_max - v_min) - w.w2 * (collided ? 1.0 : 0.0) - w.w3 * lane_change_rate(u);
}

inline double transport_reward(const UavState& u, bool collided, const RewardWeights& w, double v_min, double v_max) {
  return std::max(0.0, transport_reward_raw(u, collided, w, v_min, v_max));
}

/// w4 * WR * (1 - min(1, xi)). WR in whatever unit w4 is calibrated for (Mbps by default).
inline double telecom_reward(double weighted_rate, double xi, const RewardWeights& w) {
  if (weighted_rate < 0.0) throw std::invalid_argument("telecom_reward: weighted rate must be >= 0");
  return w.w4 * weighted_rate * (1.0 - std::min(1.0, xi));
}

struct ObservationRow {
  bool valid = false;  // false for padding rows, which are all zero
  int uav_id = -1;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double v = 0.0;
  double psi = 0.0;
  double lateral_speed = 0.0;
  int n_r = 0;  // terrestrial stations in range and meeting the target rate
  int n_h = 0;  // usable HAPS channels meeting the target rate (0 or 1)
};

/// Ego row first, then nearest neighbours by |dx|, padded to a fixed row count.
struct ObservationMatrix {
  std::vector<ObservationRow> rows;
};

struct JointAction {
  TransportAction transport = TransportAction::kIdle;
  TelecomAction telecom = TelecomAction::kT1;
  bool operator==(const JointAction&) const = default;
};

inline constexpr int kNumJointActions = 15;

inline int joint_action_index(JointAction a) {
  return static_cast<int>(a.transport) * 3 + static_cast<int>(a.telecom);
}

inline JointAction joint_action_from_index(int i) {
  if (i < 0 || i >= kNumJointActions) throw std::out_of_range("joint action index");
  return {static_cast<TransportAction>(i / 3), static_cast<TelecomAction>(i % 3)};
}

enum class MetaLoadMetric { kWeighted, kInstantaneous };

struct EnvConfig {
  MobilityParams mobility;
  IdmParams idm;
  GroundLinkParams ground;  // tx power here is the default; each site carries its own
  PathLossParams path_loss;
  HandoverPenalties penalties;
  RewardWeights weights;
  int episode_cap = 30;
  int observation_rows = 3;
  double target_rate_bps = 1e6;
  bool cap_rx_power = false;  // clip received powers at P_max before the SINR
  double haps_capacity_mbps = 100.0;
  MetaLoadMetric meta_load_metric = MetaLoadMetric::kWeighted;

  void validate() const {
    mobility.validate();
    idm.validate();
    weights.validate();
    if (episode_cap < 1) throw std::invalid_argument("episode_cap must be >= 1");
    if (observation_rows < 1) throw std::invalid_argument("observation rows must be >= 1");
    if (target_rate_bps < 0) throw std::invalid_argument("target rate must be >= 0");
    if (!(haps_capacity_mbps > 0)) throw std::invalid_argument("HAPS capacity must be > 0");
    if (!(ground.rx_power_min_dbm <= ground.rx_power_max_dbm)) {
      throw std::invalid_argument("rx power range: P_min must be <= P_max");
    }
    if (!(ground.bandwidth_hz > 0)) throw std::invalid_argument("terrestrial bandwidth must be > 0");
  }
};

struct UavStepResult {
  int uav_id = 0;
  double transport_reward = 0.0;
  double transport_reward_raw = 0.0;
  double telecom_reward = 0.0;
  double transport_cost = 0.0;  // w2 * collided + w3 * lane-change rate
  double telecom_cost = 0.0;    // w4 * WR * min(1, xi)
  double weighted_rate_mbps = 0.0;
  double mu = 0.0;
  bool rejected_lane_change = false;
  bool collided = false;
  bool done = false;
};

struct StepOutcome {
  int step = 0;  // index of the step just taken, from 0
  std::vector<UavStepResult> per_uav;  // the UAVs that acted, ascending id
  std::set<CollisionPair> collisions;
  std::vector<HandoverEvent> handovers;
};

struct TelecomSummary {
  int gbs_cnt = 0;
  int haps_cnt = 0;
  std::optional<StationId> current_station;
  bool on_haps = false;
  double last_mu = 0.0;
};

class EdgeEnv {
 public:
  EdgeEnv(EnvConfig cfg, StationDirectory stations) : cfg_(std::move(cfg)), stations_(std::move(stations)) {
    cfg_.validate();
  }

  /// Starts an episode. UAV ids must be 0..n-1 in order.
  void reset(std::uint64_t seed, std::vector<UavState> fleet, std::vector<int> priorities = {}) {
    if (fleet.empty()) throw std::invalid_argument("reset: at least one UAV required");
    for (std::size_t i = 0; i < fleet.size(); ++i) {
      if (fleet[i].uav_id != static_cast<int>(i)) throw std::invalid_argument("reset: UAV ids must be 0..n-1");
      fleet[i].serving_station.reset();
    }
    if (priorities.empty()) priorities.assign(fleet.size(), 3);
    if (priorities.size() != fleet.size()) throw std::invalid_argument("reset: one priority per UAV");
    uavs_ = std::move(fleet);
    priorities_ = std::move(priorities);
    done_.assign(uavs_.size(), false);
    collided_.assign(uavs_.size(), false);
    barred_.assign(uavs_.size(), false);
    last_mu_.assign(uavs_.size(), 0.0);
    stations_.clear_loads();
    rng_.seed(seed);
    step_ = 0;
    refresh_links();
    // initial attach: load-aware, quota-respecting, in id order
    for (auto& u : uavs_) {
      try {
        u = apply_association(u, select_station(u, TelecomAction::kT2, links_[idx(u)], stations_, cfg_.penalties),
                              stations_, 0)
                .uav;
      } catch (const AssociationError& e) {
        spdlog::warn("UAV {} starts unassociated: {}", u.uav_id, e.what());
      }
    }
  }

  StepOutcome step(std::span<const std::pair<int, JointAction>> actions) {
    if (all_done()) throw std::logic_error("step: episode already finished");
    std::vector<std::optional<JointAction>> chosen(uavs_.size());
    for (const auto& [id, a] : actions) {
      if (id < 0 || id >= static_cast<int>(uavs_.size()) || done_[static_cast<std::size_t>(id)]) {
        throw std::invalid_argument("step: action for unknown or finished UAV " + std::to_string(id));
      }
      if (chosen[static_cast<std::size_t>(id)]) throw std::invalid_argument("step: two actions for one UAV");
      chosen[static_cast<std::size_t>(id)] = a;
    }
    const std::size_t live = live_count();
    if (actions.size() != live) {
      throw std::invalid_argument("step: expected " + std::to_string(live) + " actions, got " +
                                  std::to_string(actions.size()));
    }

    StepOutcome out;
    out.step = step_;

    // 1. kinematics from one snapshot
    const auto snapshot = live_uavs();
    std::vector<bool> rejected(uavs_.size(), false);
    for (auto& u : uavs_) {
      if (done_[idx(u)]) continue;
      auto moved = apply_transport_action(u, chosen[idx(u)]->transport, cfg_.mobility, cfg_.idm,
                                          find_leader(snapshot, u, cfg_.mobility));
      u = moved.state;
      rejected[idx(u)] = moved.rejected;
    }

    // 2. links
    refresh_links();

    // 3. association, in id order so loads update deterministically
    std::vector<double> mu(uavs_.size(), 0.0);
    for (auto& u : uavs_) {
      if (done_[idx(u)]) continue;
      auto& reports = links_[idx(u)];
      std::optional<StationId> target;
      try {
        target = select_station(u, chosen[idx(u)]->telecom, reports, stations_, cfg_.penalties);
      } catch (const AssociationError&) {
        target = u.serving_station;  // nothing admissible: stay put
      }
      if (!target) continue;
      mu[idx(u)] = handover_penalty(u.serving_station, *target, stations_, cfg_.penalties);
      auto res = apply_association(u, *target, stations_, step_);
      u = res.uav;
      if (res.event.kind != HandoverKind::kNone) out.handovers.push_back(res.event);
    }

    // 4. collisions among live UAVs
    out.collisions = detect_collisions(live_uavs(), cfg_.mobility);
    for (const auto& [a, b] : out.collisions) {
      collided_[static_cast<std::size_t>(a)] = true;
      collided_[static_cast<std::size_t>(b)] = true;
    }

    // 5. rewards, with the loads after every UAV has picked its station
    const auto& w = cfg_.weights;
    const auto& mp = cfg_.mobility;
    for (auto& u : uavs_) {
      if (done_[idx(u)]) continue;
      UavStepResult r;
      r.uav_id = u.uav_id;
      r.collided = collided_[idx(u)];
      r.rejected_lane_change = rejected[idx(u)];
      r.mu = mu[idx(u)];
      r.transport_reward_raw = transport_reward_raw(u, r.collided, w, mp.v_min_mps, mp.v_max_mps);
      r.transport_reward = std::max(0.0, r.transport_reward_raw);
      r.transport_cost = w.w2 * (r.collided ? 1.0 : 0.0) + w.w3 * lane_change_rate(u);
      r.weighted_rate_mbps = serving_weighted_rate_mbps(u, r.mu);
      const double xi = handover_ratio(u);
      r.telecom_reward = telecom_reward(r.weighted_rate_mbps, xi, w);
      r.telecom_cost = w.w4 * r.weighted_rate_mbps * std::min(1.0, xi);
      last_mu_[idx(u)] = r.mu;
      out.per_uav.push_back(r);
    }

    // 6. termination; a collided UAV leaves the airspace and frees its station
    ++step_;
    for (auto& r : out.per_uav) {
      r.done = r.collided || step_ >= cfg_.episode_cap;
      if (!r.done) continue;
      auto& u = uavs_[static_cast<std::size_t>(r.uav_id)];
      done_[idx(u)] = true;
      if (r.collided && u.serving_station) {
        stations_.detach(*u.serving_station);
        u.serving_station.reset();
      }
    }
    return out;
  }

  [[nodiscard]] ObservationMatrix observe(int ego_id) const { return observe(ego_id, cfg_.observation_rows); }

  [[nodiscard]] ObservationMatrix observe(int ego_id, int rows) const {
    if (rows < 1) throw std::invalid_argument("observe: at least one row");
    const auto& ego = uav(ego_id);
    std::vector<const UavState*> others;
    for (const auto& u : uavs_) {
      if (u.uav_id != ego_id && !done_[idx(u)]) others.push_back(&u);
    }
    std::stable_sort(others.begin(), others.end(), [&](const UavState* a, const UavState* b) {
      return std::abs(a->x_m - ego.x_m) < std::abs(b->x_m - ego.x_m);
    });
    ObservationMatrix m;
    m.rows.reserve(static_cast<std::size_t>(rows));
    m.rows.push_back(row_for(ego));
    for (std::size_t i = 0; i < others.size() && m.rows.size() < static_cast<std::size_t>(rows); ++i) {
      m.rows.push_back(row_for(*others[i]));
    }
    m.rows.resize(static_cast<std::size_t>(rows));
    return m;
  }

  [[nodiscard]] TelecomSummary telecom_summary(int id) const {
    const auto row = row_for(uav(id));
    const auto& serving = uav(id).serving_station;
    return {row.n_r, row.n_h, serving, serving && stations_.is_haps(*serving), last_mu_[static_cast<std::size_t>(id)]};
  }

  [[nodiscard]] std::optional<LeaderInfo> leader(int id) const {
    return find_leader(live_uavs(), uav(id), cfg_.mobility);
  }

  // ---- meta-level hooks ----

  [[nodiscard]] MetaState meta_state() const {
    MetaState s;
    s.haps_capacity_mbps = cfg_.haps_capacity_mbps;
    const StationId haps = stations_.haps_id();
    for (const auto& u : uavs_) {
      if (done_[idx(u)] || !u.serving_station) continue;
      MetaUavEntry e;
      e.uav_id = u.uav_id;
      e.priority = priorities_[idx(u)];
      e.link = stations_.is_haps(*u.serving_station) ? LinkKind::kHaps : LinkKind::kTbs;
      e.rate_mbps = meta_rate_mbps(u, *u.serving_station);
      e.ground_coverage = has_ground_coverage(u);
      e.offloaded = barred_[idx(u)];
      e.projected_haps_mbps = meta_rate_mbps(u, haps);
      s.per_uav.push_back(e);
    }
    s.haps_load_mbps = compute_haps_load(s.per_uav);
    return s;
  }

  /// Enforces Offload/Recall. Moves that would break a quota are skipped with a warning.
  MetaApplyResult apply_meta_action(const MetaAction& a, std::vector<HandoverEvent>* events = nullptr) {
    const auto state = meta_state();
    validate_meta_action(state, a);
    MetaApplyResult res;
    const StationId haps = stations_.haps_id();
    for (int id : a.targets) {
      auto& u = uavs_[static_cast<std::size_t>(id)];
      std::optional<StationId> target;
      if (a.kind == MetaActionKind::kOffload) {
        target = best_admitting_terrestrial(u);
        if (!target) {
          spdlog::warn("meta: cannot offload UAV {}: no terrestrial station in range with spare quota", id);
          continue;
        }
      } else {
        if (!admits(u, haps, stations_)) {
          spdlog::warn("meta: cannot recall UAV {}: HAPS quota full", id);
          continue;
        }
        target = haps;
      }
      res.total_mu += handover_penalty(u.serving_station, *target, stations_, cfg_.penalties);
      auto moved = apply_association(u, *target, stations_, step_);
      u = moved.uav;
      barred_[static_cast<std::size_t>(id)] = a.kind == MetaActionKind::kOffload;
      links_[static_cast<std::size_t>(id)].back().in_range = !barred_[static_cast<std::size_t>(id)];
      if (moved.event.kind != HandoverKind::kNone) {
        ++res.handover_count;
        if (events) events->push_back(moved.event);
      }
    }
    return res;
  }

  // ---- accessors ----

  [[nodiscard]] const EnvConfig& config() const { return cfg_; }
  [[nodiscard]] const StationDirectory& stations() const { return stations_; }
  [[nodiscard]] const std::vector<UavState>& uavs() const { return uavs_; }
  [[nodiscard]] const UavState& uav(int id) const { return uavs_.at(static_cast<std::size_t>(id)); }
  [[nodiscard]] std::span<const LinkReport> links(int id) const { return links_.at(static_cast<std::size_t>(id)); }
  [[nodiscard]] bool done(int id) const { return done_.at(static_cast<std::size_t>(id)); }
  [[nodiscard]] bool collided(int id) const { return collided_.at(static_cast<std::size_t>(id)); }
  [[nodiscard]] bool barred_from_haps(int id) const { return barred_.at(static_cast<std::size_t>(id)); }
  [[nodiscard]] int priority(int id) const { return priorities_.at(static_cast<std::size_t>(id)); }
  [[nodiscard]] int step_index() const { return step_; }
  [[nodiscard]] bool all_done() const { return live_count() == 0; }
  [[nodiscard]] std::size_t live_count() const {
    return static_cast<std::size_t>(std::count(done_.begin(), done_.end(), false));
  }

  [[nodiscard]] Position3 position(const UavState& u) const {
    return {u.x_m, cfg_.mobility.lane_y(u.lane_index), u.altitude_m};
  }

 private:
  static std::size_t idx(const UavState& u) { return static_cast<std::size_t>(u.uav_id); }

  [[nodiscard]] std::vector<UavState> live_uavs() const {
    std::vector<UavState> out;
    for (const auto& u : uavs_) {
      if (!done_[idx(u)]) out.push_back(u);
    }
    return out;
  }

  [[nodiscard]] double usable_dbm(double rx_dbm) const {
    return cfg_.cap_rx_power ? std::min(rx_dbm, cfg_.ground.rx_power_max_dbm) : rx_dbm;
  }

  [[nodiscard]] LinkReport terrestrial_report(const BsSite& site, const Position3& p) const {
    LinkReport r;
    r.station = site.id;
    r.kind = StationKind::kTerrestrial;
    r.pattern_db = -std::numeric_limits<double>::infinity();
    Geometry best{};
    for (double boresight : site.sector_boresights_rad) {
      const auto g = make_geometry(site.position, boresight, p);
      const double pat = radiation_pattern_db(g, site.antenna);
      if (pat > r.pattern_db) {
        r.pattern_db = pat;
        best = g;
      }
    }
    r.path_loss_db = mean_path_loss(best, cfg_.path_loss);
    r.rx_power_dbm = received_power_dbm(site.tx_power_dbm, r.pattern_db, r.path_loss_db);
    r.in_range = in_service_range(r.rx_power_dbm, cfg_.ground);
    return r;
  }

  // Fading is drawn for every live UAV in id order, once per refresh.
  void refresh_links() {
    links_.assign(uavs_.size(), {});
    const auto sites = stations_.terrestrial();
    const auto& haps = stations_.haps();
    const HapsAllocation alloc{1.0 / haps.quota, 1.0};
    for (const auto& u : uavs_) {
      if (done_[idx(u)]) continue;
      const auto p = position(u);
      auto& reports = links_[idx(u)];
      reports.reserve(sites.size() + 1);
      std::vector<double> usable;
      for (const auto& site : sites) {
        reports.push_back(terrestrial_report(site, p));
        usable.push_back(usable_dbm(reports.back().rx_power_dbm));
      }
      std::vector<double> interferers;
      for (std::size_t s = 0; s < sites.size(); ++s) {
        interferers.clear();
        for (std::size_t o = 0; o < sites.size(); ++o) {
          if (o != s) interferers.push_back(usable[o]);
        }
        auto& r = reports[s];
        r.sinr = sinr(usable[s], interferers, cfg_.ground.noise_power_dbm);
        r.rate_bps = cfg_.ground.bandwidth_hz * std::log2(1.0 + r.sinr);
      }
      const bool ground = std::any_of(reports.begin(), reports.end(), [](const LinkReport& r) { return r.in_range; });
      if (barred_[idx(u)] && !ground) {
        spdlog::warn("UAV {} lost terrestrial coverage; lifting its HAPS bar", u.uav_id);
        barred_[idx(u)] = false;
      }
      LinkReport h;
      h.station = haps.id;
      h.kind = StationKind::kHaps;
      const double d = std::hypot(p.x - haps.position.x, p.y - haps.position.y, p.z - haps.position.z);
      h.channel_gain = haps_channel_gain(d, haps.link, sample_rician_power(haps.link.rician_k, rng_));
      h.rate_bps = haps_rate(alloc, h.channel_gain, haps.link);
      h.sinr = alloc.power_fraction * haps.link.max_uav_tx_power_w * h.channel_gain /
               (alloc.bandwidth_fraction * haps.link.total_bandwidth_hz * haps.link.noise_psd_w_per_hz);
      h.in_range = !barred_[idx(u)];
      reports.push_back(h);
    }
  }

  [[nodiscard]] const LinkReport* report(const UavState& u, StationId s) const {
    for (const auto& r : links_[idx(u)]) {
      if (r.station == s) return &r;
    }
    return nullptr;
  }

  [[nodiscard]] double serving_weighted_rate_mbps(const UavState& u, double mu) const {
    if (!u.serving_station) return 0.0;
    const auto* r = report(u, *u.serving_station);
    if (r == nullptr) return 0.0;
    const StationId s = *u.serving_station;
    return bps_to_mbps(weighted_rate(r->rate_bps, stations_.load(s), stations_.quota(s), mu));
  }

  [[nodiscard]] double meta_rate_mbps(const UavState& u, StationId s) const {
    const auto* r = report(u, s);
    if (r == nullptr) return 0.0;
    if (cfg_.meta_load_metric == MetaLoadMetric::kInstantaneous) return bps_to_mbps(r->rate_bps);
    return bps_to_mbps(weighted_rate(r->rate_bps, candidate_load(u, s, stations_), stations_.quota(s), 0.0));
  }

  [[nodiscard]] bool has_ground_coverage(const UavState& u) const {
    for (const auto& r : links_[idx(u)]) {
      if (r.kind == StationKind::kTerrestrial && r.in_range) return true;
    }
    return false;
  }

  [[nodiscard]] std::optional<StationId> best_admitting_terrestrial(const UavState& u) const {
    std::vector<LinkReport> candidates;
    for (const auto& r : links_[idx(u)]) {
      if (r.kind == StationKind::kTerrestrial && r.in_range && admits(u, r.station, stations_)) {
        candidates.push_back(r);
      }
    }
    if (candidates.empty()) return std::nullopt;
    return select_station(u, TelecomAction::kT1, candidates, stations_, cfg_.penalties);
  }

  [[nodiscard]] ObservationRow row_for(const UavState& u) const {
    ObservationRow row;
    row.valid = true;
    row.uav_id = u.uav_id;
    const auto p = position(u);
    row.x = p.x;
    row.y = p.y;
    row.z = p.z;
    row.v = u.speed_mps;
    row.psi = u.heading_rad;
    row.lateral_speed = u.lateral_speed_mps;
    if (idx(u) < links_.size()) {
      for (const auto& r : links_[idx(u)]) {
        const bool fast_enough = r.rate_bps >= cfg_.target_rate_bps;
        if (r.kind == StationKind::kTerrestrial) {
          row.n_r += r.in_range && fast_enough ? 1 : 0;
        } else {
          row.n_h += r.in_range && fast_enough ? 1 : 0;
        }
      }
    }
    return row;
  }

  EnvConfig cfg_;
  StationDirectory stations_;
  std::vector<UavState> uavs_;
  std::vector<int> priorities_;
  std::vector<bool> done_;
  std::vector<bool> collided_;
  std::vector<bool> barred_;
  std::vector<double> last_mu_;
  std::vector<std::vector<LinkReport>> links_;
  std::mt19937_64 rng_;
  int step_ = 0;
};

}  // namespace uavsim
