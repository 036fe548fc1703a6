#pragma once

// Default station placement along the highway and initial fleet spawning.

#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "uavsim/association.hpp"
#include "uavsim/mobility.hpp"

namespace uavsim {

struct LayoutParams {
  int num_bs = 5;
  double highway_length_m = 1000.0;
  double bs_height_m = 25.0;
  double bs_lateral_offset_m = 150.0;  // alternates sides of the highway
  double tx_power_dbm = 40.0;
  int bs_quota = 3;
  AntennaParams antenna;
  double haps_altitude_m = 20000.0;
  HapsLinkParams haps_link;
  int haps_quota = 5;
};

/// Evenly spaced sites, one per segment centre, zig-zagging across the highway.
inline std::vector<BsSite> grid_sites(const LayoutParams& p) {
  if (p.num_bs < 0) throw std::invalid_argument("layout: num_bs must be >= 0");
  std::vector<BsSite> sites(static_cast<std::size_t>(p.num_bs));
  for (int k = 0; k < p.num_bs; ++k) {
    auto& s = sites[static_cast<std::size_t>(k)];
    s.position = {(k + 0.5) * p.highway_length_m / p.num_bs, k % 2 == 0 ? p.bs_lateral_offset_m : -p.bs_lateral_offset_m,
                  p.bs_height_m};
    s.antenna = p.antenna;
    s.tx_power_dbm = p.tx_power_dbm;
    s.quota = p.bs_quota;
  }
  return sites;
}

inline HapsSite haps_site(const LayoutParams& p) {
  HapsSite h;
  h.position = {p.highway_length_m / 2.0, 0.0, p.haps_altitude_m};
  h.link = p.haps_link;
  h.quota = p.haps_quota;
  return h;
}

struct FleetParams {
  int num_uavs = 5;
  double initial_x_m = 50.0;
  double spacing_m = 20.0;  // along-track offset between consecutive UAV ids
  double jitter_m = 5.0;
};

struct Fleet {
  std::vector<UavState> uavs;
  std::vector<int> priorities;
};

/// UAV j flies in lane j mod L, staggered along the track, with a random speed and priority.
inline Fleet spawn_fleet(const FleetParams& f, const MobilityParams& mp, std::mt19937_64& rng) {
  if (f.num_uavs < 1) throw std::invalid_argument("fleet: num_uavs must be >= 1");
  if (mp.num_lanes * f.spacing_m - f.jitter_m < mp.collision_length_m) {
    throw std::invalid_argument("fleet: same-lane spawn distance (lanes * spacing - jitter) below the collision length");
  }
  Fleet out;
  std::uniform_real_distribution<double> jitter(0.0, f.jitter_m);
  std::uniform_real_distribution<double> speed(mp.v_min_mps, mp.v_max_mps);
  std::uniform_int_distribution<int> priority(1, 5);
  for (int j = 0; j < f.num_uavs; ++j) {
    UavState u;
    u.uav_id = j;
    u.lane_index = j % mp.num_lanes;
    u.altitude_m = mp.lane_altitude(u.lane_index);
    u.x_m = f.initial_x_m + j * f.spacing_m + (f.jitter_m > 0.0 ? jitter(rng) : 0.0);
    u.speed_mps = speed(rng);
    out.uavs.push_back(u);
    out.priorities.push_back(priority(rng));
  }
  return out;
}

}  // namespace uavsim
