#pragma once

// UAV kinematics on the multi-lane aerial highway: intelligent driver model
// (IDM) car following, discrete lane changes and speed commands, collisions.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string_view>
#include <utility>
#include <vector>

#include "uavsim/station_id.hpp"

namespace uavsim {

struct UavState {
  int uav_id = 0;
  double x_m = 0.0;
  int lane_index = 0;
  double altitude_m = 150.0;
  double speed_mps = 0.0;
  double heading_rad = 0.0;
  double lateral_speed_mps = 0.0;  // nonzero only on the step a lane change happens
  int lane_changes_total = 0;
  std::optional<StationId> serving_station;
  int steps_elapsed = 0;
  int handovers_total = 0;
};

struct IdmParams {
  double desired_speed_mps = 20.0;
  double safe_time_headway_s = 1.5;
  double max_accel_mps2 = 3.0;
  double comfortable_decel_mps2 = 3.0;
  double min_gap_m = 2.0;
  double accel_exponent = 4.0;

  void validate() const {
    if (!(desired_speed_mps > 0) || !(safe_time_headway_s > 0) || !(max_accel_mps2 > 0) ||
        !(comfortable_decel_mps2 > 0) || !(min_gap_m > 0)) {
      throw std::invalid_argument("idm: all parameters must be > 0");
    }
    if (accel_exponent < 1.0) throw std::invalid_argument("idm: accel_exponent must be >= 1");
  }
};

struct MobilityParams {
  double v_min_mps = 5.0;
  double v_max_mps = 20.0;
  double speed_step_mps = 2.0;  // FASTER / SLOWER command size
  double dt_s = 1.0;
  int num_lanes = 5;
  double lane_width_m = 4.0;
  double collision_length_m = 5.0;
  double base_altitude_m = 150.0;
  double lane_altitude_step_m = 0.0;

  [[nodiscard]] double lane_altitude(int lane) const { return base_altitude_m + lane * lane_altitude_step_m; }
  [[nodiscard]] double lane_y(int lane) const { return lane * lane_width_m; }

  void validate() const {
    if (!(v_min_mps < v_max_mps)) throw std::invalid_argument("mobility: v_min must be < v_max");
    if (v_min_mps < 0.0) throw std::invalid_argument("mobility: v_min must be >= 0");
    if (num_lanes < 1) throw std::invalid_argument("mobility: num_lanes must be >= 1");
    if (!(dt_s > 0) || !(lane_width_m > 0) || !(collision_length_m > 0) || !(speed_step_mps > 0)) {
      throw std::invalid_argument("mobility: dt, lane width, collision length and speed step must be > 0");
    }
    if (!(base_altitude_m > 0) || !(lane_altitude(num_lanes - 1) > 0)) {
      throw std::invalid_argument("mobility: lane altitudes must be > 0");
    }
  }
};

enum class TransportAction { kLaneLeft, kIdle, kLaneRight, kFaster, kSlower };

inline constexpr std::array<TransportAction, 5> kAllTransportActions{
    TransportAction::kLaneLeft, TransportAction::kIdle, TransportAction::kLaneRight, TransportAction::kFaster,
    TransportAction::kSlower};

inline constexpr std::string_view to_string(TransportAction a) {
  switch (a) {
    case TransportAction::kLaneLeft: return "LANE_LEFT";
    case TransportAction::kIdle: return "IDLE";
    case TransportAction::kLaneRight: return "LANE_RIGHT";
    case TransportAction::kFaster: return "FASTER";
    case TransportAction::kSlower: return "SLOWER";
  }
  return "IDLE";
}

/// Gap to and speed difference with the vehicle ahead in the same lane.
struct LeaderInfo {
  double gap_m = std::numeric_limits<double>::infinity();  // bumper to bumper
  double delta_v_mps = 0.0;                                 // own speed minus leader speed
};

/// IDM desired dynamic gap s*.
inline double idm_desired_gap(double v, double delta_v, const IdmParams& p) {
  const double dynamic = v * p.safe_time_headway_s + v * delta_v / (2.0 * std::sqrt(p.max_accel_mps2 * p.comfortable_decel_mps2));
  return p.min_gap_m + std::max(0.0, dynamic);
}

/// IDM acceleration. Pass gap = +inf (and delta_v = 0) when there is no leader.
inline double idm_acceleration(double v, double delta_v, double gap, const IdmParams& p) {
  if (!(gap > 0.0)) throw std::domain_error("idm_acceleration: gap must be > 0");
  const double free_term = std::pow(v / p.desired_speed_mps, p.accel_exponent);
  double interaction = 0.0;
  if (std::isfinite(gap)) {
    const double ratio = idm_desired_gap(v, delta_v, p) / gap;
    interaction = ratio * ratio;
  }
  return p.max_accel_mps2 * (1.0 - free_term - interaction);
}

struct TransportOutcome {
  UavState state;
  bool rejected = false;  // lane change off the highway edge, executed as IDLE
};

/// One kinematic step for a single UAV. The leader describes the pre-step snapshot.
inline TransportOutcome apply_transport_action(const UavState& in, TransportAction action, const MobilityParams& mp,
                                               const IdmParams& idm, const std::optional<LeaderInfo>& leader) {
  TransportOutcome out{in, false};
  UavState& s = out.state;
  s.lateral_speed_mps = 0.0;

  if (action == TransportAction::kLaneLeft || action == TransportAction::kLaneRight) {
    const int dir = action == TransportAction::kLaneLeft ? -1 : 1;
    const int target = s.lane_index + dir;
    if (target < 0 || target >= mp.num_lanes) {
      out.rejected = true;
      action = TransportAction::kIdle;
    } else {
      s.lane_index = target;
      s.altitude_m = mp.lane_altitude(target);
      s.lane_changes_total += 1;
      s.lateral_speed_mps = dir * mp.lane_width_m / mp.dt_s;
    }
  }

  switch (action) {
    case TransportAction::kFaster: s.speed_mps += mp.speed_step_mps; break;
    case TransportAction::kSlower: s.speed_mps -= mp.speed_step_mps; break;
    case TransportAction::kIdle: {
      const LeaderInfo l = leader.value_or(LeaderInfo{});
      // an overlapping leader is already a collision; brake as hard as allowed
      const double accel = l.gap_m > 0.0 ? idm_acceleration(s.speed_mps, l.delta_v_mps, l.gap_m, idm)
                                         : -std::numeric_limits<double>::infinity();
      s.speed_mps += accel * mp.dt_s;
      // Discrete-time safe speed: stay clear even if the leader drops to v_min this step.
      if (leader) s.speed_mps = std::min(s.speed_mps, mp.v_min_mps + std::max(0.0, l.gap_m) / mp.dt_s);
      break;
    }
    default: break;  // lane changes keep their speed
  }
  s.speed_mps = std::clamp(s.speed_mps, mp.v_min_mps, mp.v_max_mps);
  s.x_m += s.speed_mps * mp.dt_s;
  s.steps_elapsed += 1;
  return out;
}

/// Nearest UAV strictly ahead of `ego` in its lane, from a snapshot.
inline std::optional<LeaderInfo> find_leader(std::span<const UavState> fleet, const UavState& ego,
                                             const MobilityParams& mp) {
  const UavState* best = nullptr;
  for (const auto& other : fleet) {
    if (other.uav_id == ego.uav_id || other.lane_index != ego.lane_index) continue;
    if (other.x_m < ego.x_m || (other.x_m == ego.x_m && other.uav_id < ego.uav_id)) continue;
    if (best == nullptr || other.x_m < best->x_m) best = &other;
  }
  if (best == nullptr) return std::nullopt;
  return LeaderInfo{best->x_m - ego.x_m - mp.collision_length_m, ego.speed_mps - best->speed_mps};
}

/// Lanes a UAV occupies this step: its lane, plus the source lane while changing.
inline std::pair<int, int> occupied_lanes(const UavState& s) {
  if (s.lateral_speed_mps > 0.0) return {s.lane_index - 1, s.lane_index};
  if (s.lateral_speed_mps < 0.0) return {s.lane_index, s.lane_index + 1};
  return {s.lane_index, s.lane_index};
}

using CollisionPair = std::pair<int, int>;  // (lower uav_id, higher uav_id)

inline std::set<CollisionPair> detect_collisions(std::span<const UavState> fleet, const MobilityParams& mp) {
  std::set<CollisionPair> pairs;
  for (std::size_t i = 0; i < fleet.size(); ++i) {
    const auto [ilo, ihi] = occupied_lanes(fleet[i]);
    for (std::size_t j = i + 1; j < fleet.size(); ++j) {
      const auto [jlo, jhi] = occupied_lanes(fleet[j]);
      const bool share_lane = ilo <= jhi && jlo <= ihi;
      if (share_lane && std::abs(fleet[i].x_m - fleet[j].x_m) < mp.collision_length_m) {
        pairs.emplace(std::min(fleet[i].uav_id, fleet[j].uav_id), std::max(fleet[i].uav_id, fleet[j].uav_id));
      }
    }
  }
  return pairs;
}

}  // namespace uavsim
