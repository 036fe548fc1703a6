#pragma once

// UAV-to-station association: the weighted data rate with handover penalty,
// handover classification, per-station quotas and the three telecom
// selection strategies (T1/T2/T3).

#include <algorithm>
#include <array>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "uavsim/channel.hpp"
#include "uavsim/mobility.hpp"
#include "uavsim/station_id.hpp"

namespace uavsim {

class AssociationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class StationKind { kTerrestrial, kHaps };

struct BsSite {
  StationId id;
  Position3 position;  // z is the antenna height
  AntennaParams antenna;
  double tx_power_dbm = 40.0;
  int quota = 3;
  std::vector<double> sector_boresights_rad{0.0, 2.0 * kPi / 3.0, 4.0 * kPi / 3.0};
};

struct HapsSite {
  StationId id;
  Position3 position;
  HapsLinkParams link;
  int quota = 5;
};

/// Per (station, UAV, step) radio summary.
struct LinkReport {
  StationId station;
  StationKind kind = StationKind::kTerrestrial;
  double pattern_db = 0.0;    // best-sector radiation pattern (terrestrial)
  double path_loss_db = 0.0;  // mean path loss (terrestrial)
  double rx_power_dbm = 0.0;  // before the receiver cap (terrestrial)
  double channel_gain = 0.0;  // linear gain (HAPS)
  double sinr = 0.0;          // linear
  double rate_bps = 0.0;
  bool in_range = false;
  double weighted_rate_bps = 0.0;  // filled in by station selection
};

class StationDirectory {
 public:
  StationDirectory() = default;
  StationDirectory(std::vector<BsSite> terrestrial, HapsSite haps)
      : terrestrial_(std::move(terrestrial)), haps_(std::move(haps)) {
    for (std::size_t i = 0; i < terrestrial_.size(); ++i) {
      terrestrial_[i].id = StationId{static_cast<int>(i)};
      if (terrestrial_[i].quota < 1) throw std::invalid_argument("station quota must be >= 1");
    }
    haps_.id = StationId{static_cast<int>(terrestrial_.size())};
    if (haps_.quota < 1) throw std::invalid_argument("HAPS quota must be >= 1");
    loads_.assign(terrestrial_.size() + 1, 0);
  }

  [[nodiscard]] std::span<const BsSite> terrestrial() const { return terrestrial_; }
  [[nodiscard]] const HapsSite& haps() const { return haps_; }
  [[nodiscard]] StationId haps_id() const { return haps_.id; }
  [[nodiscard]] std::size_t size() const { return loads_.size(); }

  [[nodiscard]] bool valid(StationId id) const { return id.value >= 0 && id.value < static_cast<int>(loads_.size()); }
  [[nodiscard]] bool is_haps(StationId id) const { return id == haps_.id; }
  [[nodiscard]] StationKind kind(StationId id) const {
    return is_haps(id) ? StationKind::kHaps : StationKind::kTerrestrial;
  }
  [[nodiscard]] int quota(StationId id) const {
    check(id);
    return is_haps(id) ? haps_.quota : terrestrial_[static_cast<std::size_t>(id.value)].quota;
  }
  [[nodiscard]] int load(StationId id) const {
    check(id);
    return loads_[static_cast<std::size_t>(id.value)];
  }
  [[nodiscard]] std::span<const int> loads() const { return loads_; }
  [[nodiscard]] int total_load() const {
    int total = 0;
    for (int l : loads_) total += l;
    return total;
  }

  void attach(StationId id) {
    check(id);
    ++loads_[static_cast<std::size_t>(id.value)];
  }
  void detach(StationId id) {
    check(id);
    auto& l = loads_[static_cast<std::size_t>(id.value)];
    if (l == 0) throw AssociationError("detach from station " + std::to_string(id.value) + " with zero load");
    --l;
  }
  void clear_loads() { std::fill(loads_.begin(), loads_.end(), 0); }

 private:
  void check(StationId id) const {
    if (!valid(id)) throw std::out_of_range("unknown station id " + std::to_string(id.value));
  }

  std::vector<BsSite> terrestrial_;
  HapsSite haps_;
  std::vector<int> loads_;
};

enum class HandoverKind { kNone, kHorizontal, kVertical };

inline constexpr std::string_view to_string(HandoverKind k) {
  switch (k) {
    case HandoverKind::kNone: return "NONE";
    case HandoverKind::kHorizontal: return "HORIZONTAL";
    case HandoverKind::kVertical: return "VERTICAL";
  }
  return "NONE";
}

struct HandoverEvent {
  int uav_id = 0;
  std::optional<StationId> from_station;
  StationId to_station;
  HandoverKind kind = HandoverKind::kNone;
  int step = 0;
};

enum class TelecomAction { kT1, kT2, kT3 };

inline constexpr std::array<TelecomAction, 3> kAllTelecomActions{TelecomAction::kT1, TelecomAction::kT2,
                                                                 TelecomAction::kT3};

inline constexpr std::string_view to_string(TelecomAction a) {
  switch (a) {
    case TelecomAction::kT1: return "T1";
    case TelecomAction::kT2: return "T2";
    case TelecomAction::kT3: return "T3";
  }
  return "T1";
}

struct HandoverPenalties {
  double horizontal = 0.25;
  double vertical = 0.5;
};

inline HandoverKind classify_handover(const std::optional<StationId>& from, StationId to,
                                      const StationDirectory& dir) {
  if (!from || *from == to) return HandoverKind::kNone;
  return dir.is_haps(*from) != dir.is_haps(to) ? HandoverKind::kVertical : HandoverKind::kHorizontal;
}

/// The mu coefficient for moving from `prev` to `next`; zero on initial attach.
inline double handover_penalty(const std::optional<StationId>& prev, StationId next, const StationDirectory& dir,
                               const HandoverPenalties& mu = {}) {
  switch (classify_handover(prev, next, dir)) {
    case HandoverKind::kNone: return 0.0;
    case HandoverKind::kHorizontal: return mu.horizontal;
    case HandoverKind::kVertical: return mu.vertical;
  }
  return 0.0;
}

/// rate / min(quota, load) * (1 - mu). `load` counts the evaluating UAV.
inline double weighted_rate(double rate_bps, int station_load, int quota, double mu) {
  if (station_load < 1) throw std::invalid_argument("weighted_rate: station load must be >= 1");
  if (quota < 1) throw std::invalid_argument("weighted_rate: quota must be >= 1");
  return rate_bps / static_cast<double>(std::min(quota, station_load)) * (1.0 - mu);
}

/// Load of `station` if `uav` were (or stays) associated with it.
inline int candidate_load(const UavState& uav, StationId station, const StationDirectory& dir) {
  return dir.load(station) + (uav.serving_station == station ? 0 : 1);
}

inline bool admits(const UavState& uav, StationId station, const StationDirectory& dir) {
  return candidate_load(uav, station, dir) <= dir.quota(station);
}

/// Picks a serving station among the in-range reports. Ties go to the lowest station id.
inline StationId select_station(const UavState& uav, TelecomAction action, std::span<const LinkReport> reports,
                                const StationDirectory& dir, const HandoverPenalties& mu = {}) {
  std::vector<const LinkReport*> candidates;
  for (const auto& r : reports) {
    if (r.in_range) candidates.push_back(&r);
  }
  if (candidates.empty()) {
    throw AssociationError("UAV " + std::to_string(uav.uav_id) + ": no candidate station in range");
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const LinkReport* a, const LinkReport* b) { return a->station < b->station; });

  auto score = [&](const LinkReport& r) -> double {
    switch (action) {
      case TelecomAction::kT1:
        return weighted_rate(r.rate_bps, candidate_load(uav, r.station, dir), dir.quota(r.station),
                             handover_penalty(uav.serving_station, r.station, dir, mu));
      case TelecomAction::kT2:
        return weighted_rate(r.rate_bps, candidate_load(uav, r.station, dir), dir.quota(r.station), 0.0);
      case TelecomAction::kT3: return r.rate_bps;
    }
    return 0.0;
  };

  if (action == TelecomAction::kT2) {
    // best metric first, stable on station id; walk down until a station admits
    std::stable_sort(candidates.begin(), candidates.end(),
                     [&](const LinkReport* a, const LinkReport* b) { return score(*a) > score(*b); });
    for (const auto* c : candidates) {
      if (admits(uav, c->station, dir)) return c->station;
    }
    throw AssociationError("UAV " + std::to_string(uav.uav_id) + ": every in-range station is saturated");
  }

  const LinkReport* best = candidates.front();
  double best_score = score(*best);
  for (const auto* c : candidates) {
    const double s = score(*c);
    if (s > best_score) {
      best = c;
      best_score = s;
    }
  }
  return best->station;
}

struct AssociationResult {
  UavState uav;
  HandoverEvent event;
};

/// Moves `uav` to `new_station`, keeping the directory loads consistent.
inline AssociationResult apply_association(const UavState& uav, StationId new_station, StationDirectory& dir,
                                           int step = 0) {
  if (!dir.valid(new_station)) throw std::out_of_range("apply_association: unknown station");
  AssociationResult out{uav, {}};
  out.event.uav_id = uav.uav_id;
  out.event.from_station = uav.serving_station;
  out.event.to_station = new_station;
  out.event.kind = classify_handover(uav.serving_station, new_station, dir);
  out.event.step = step;
  if (uav.serving_station == new_station) return out;
  if (uav.serving_station) dir.detach(*uav.serving_station);
  dir.attach(new_station);
  out.uav.serving_station = new_station;
  if (out.event.kind != HandoverKind::kNone) out.uav.handovers_total += 1;
  return out;
}

/// Empirical handover probability: handovers so far over steps elapsed.
inline double handover_ratio(const UavState& uav) {
  if (uav.steps_elapsed < 1) throw std::invalid_argument("handover_ratio: steps_elapsed must be >= 1");
  return static_cast<double>(uav.handovers_total) / static_cast<double>(uav.steps_elapsed);
}

}  // namespace uavsim
