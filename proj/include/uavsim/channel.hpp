#pragma once

// Radio-layer quantities for the ground-to-air (G2A) links from terrestrial
// base stations and for the UAV-HAPS links.

#include <algorithm>
#include <cmath>
#include <random>
#include <span>
#include <stdexcept>
#include <string>

#include "uavsim/units.hpp"

namespace uavsim {

/// Raised when an input falls outside the domain where a channel formula is defined.
class ChannelDomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// How the element pattern turns angles into gain.
///  - kDefault: linear angle ratio, attenuations subtracted from the peak gain.
///  - kLiteral: linear ratio with the sign exactly as printed,
///    B_max - min(-(B_az + B_el), B_m); gain then grows off boresight.
///  - kSquared: the usual 3GPP squared ratio 12 (angle / 3dB-width)^2.
enum class PatternMode { kDefault, kLiteral, kSquared };

struct AntennaParams {
  double peak_element_gain_db = 8.0;
  double az_3db_rad = deg_to_rad(65.0);
  double el_3db_rad = deg_to_rad(65.0);
  double front_back_ratio_db = 30.0;      // B_m
  double sidelobe_attenuation_db = 30.0;  // SLA
  int num_elements = 8;
  // Elevation of the array main lobe, in the same frame as Geometry::elevation_rad
  // (negative = below the horizon).
  double downtilt_rad = deg_to_rad(-6.0);
  PatternMode mode = PatternMode::kDefault;

  void validate() const {
    if (!(az_3db_rad > 0.0) || !(el_3db_rad > 0.0)) {
      throw std::invalid_argument("antenna: 3 dB beamwidths must be > 0");
    }
    if (num_elements < 1) throw std::invalid_argument("antenna: num_elements must be >= 1");
    if (!(front_back_ratio_db > 0.0) || !(sidelobe_attenuation_db > 0.0)) {
      throw std::invalid_argument("antenna: front_back_ratio_db and sidelobe_attenuation_db must be > 0");
    }
  }
};

struct Geometry {
  double azimuth_rad = 0.0;    // relative to the sector boresight
  double elevation_rad = 0.0;  // UAV elevation seen from the station, positive upward
  double distance_3d_m = 0.0;
  double distance_2d_m = 0.0;
  double uav_altitude_m = 0.0;
};

struct Position3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

/// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * kPi);
  return a <= -kPi ? a + 2.0 * kPi : a;
}

/// Station-to-UAV geometry for one sector whose boresight points at `boresight_az_rad`.
inline Geometry make_geometry(const Position3& station, double boresight_az_rad, const Position3& uav) {
  const double dx = uav.x - station.x;
  const double dy = uav.y - station.y;
  const double dz = uav.z - station.z;
  Geometry g;
  g.distance_2d_m = std::hypot(dx, dy);
  g.distance_3d_m = std::hypot(g.distance_2d_m, dz);
  g.azimuth_rad = wrap_angle(std::atan2(dy, dx) - boresight_az_rad);
  g.elevation_rad = std::atan2(dz, g.distance_2d_m);
  g.uav_altitude_m = uav.z;
  return g;
}

struct PathLossParams {
  double carrier_hz = 2.1e9;
  double excess_loss_los_db = 1.0;
  double excess_loss_nlos_db = 20.0;

  void validate() const {
    if (!(carrier_hz > 0.0)) throw std::invalid_argument("path_loss: carrier_hz must be > 0");
    if (excess_loss_nlos_db < excess_loss_los_db) {
      throw std::invalid_argument("path_loss: excess_loss_nlos_db must be >= excess_loss_los_db");
    }
  }
};

struct GroundLinkParams {
  double tx_power_dbm = 40.0;
  double noise_power_dbm = -104.0;
  double rx_power_min_dbm = -100.0;
  double rx_power_max_dbm = -80.0;
  double bandwidth_hz = 10e6;

  void validate() const {
    if (!(rx_power_min_dbm < rx_power_max_dbm)) {
      throw std::invalid_argument("ground_link: rx_power_min_dbm must be < rx_power_max_dbm");
    }
    if (!(bandwidth_hz > 0.0)) throw std::invalid_argument("ground_link: bandwidth_hz must be > 0");
  }
};

struct HapsLinkParams {
  double total_bandwidth_hz = 20e6;
  double max_uav_tx_power_w = 1.0;
  double noise_psd_w_per_hz = 4e-21;
  double carrier_hz = 2e9;
  double antenna_gain_linear = 2.0;
  double rician_k = 10.0;

  void validate() const {
    if (!(total_bandwidth_hz > 0.0) || !(max_uav_tx_power_w > 0.0) || !(noise_psd_w_per_hz > 0.0) ||
        !(carrier_hz > 0.0) || !(antenna_gain_linear > 0.0) || !(rician_k > 0.0)) {
      throw std::invalid_argument("haps: all link parameters must be > 0");
    }
  }
};

struct HapsAllocation {
  double bandwidth_fraction = 0.0;
  double power_fraction = 0.0;

  [[nodiscard]] bool valid() const {
    return bandwidth_fraction >= 0.0 && bandwidth_fraction <= 1.0 && power_fraction >= 0.0 &&
           power_fraction <= 1.0;
  }
};

// ---------------------------------------------------------------------------
// G2A antenna pattern

namespace detail {
inline double attenuation(double angle, double width_3db, double cap, PatternMode mode) {
  const double ratio = std::abs(angle) / width_3db;
  const double raw = mode == PatternMode::kSquared ? 12.0 * ratio * ratio : 12.0 * ratio;
  return std::min(raw, cap);
}
}  // namespace detail

inline double azimuth_attenuation(double phi, const AntennaParams& p) {
  return detail::attenuation(phi, p.az_3db_rad, p.front_back_ratio_db, p.mode);
}

inline double elevation_attenuation(double zeta, const AntennaParams& p) {
  return detail::attenuation(zeta, p.el_3db_rad, p.sidelobe_attenuation_db, p.mode);
}

inline double element_gain(double zeta, double phi, const AntennaParams& p) {
  const double total = azimuth_attenuation(phi, p) + elevation_attenuation(zeta, p);
  if (p.mode == PatternMode::kLiteral) {
    return p.peak_element_gain_db - std::min(-total, p.front_back_ratio_db);
  }
  return p.peak_element_gain_db - std::min(total, p.front_back_ratio_db);
}

inline constexpr double kArrayFactorFloorDb = -300.0;

/// ULA array factor as a power gain in dB, 20 log10 |F|.
inline double array_factor_db(double zeta, const AntennaParams& p) {
  const double n = static_cast<double>(p.num_elements);
  const double u = 0.5 * kPi * (std::sin(zeta) - std::sin(p.downtilt_rad));
  const double den = std::sqrt(n) * std::sin(u);
  double amplitude;
  if (std::abs(std::sin(u)) < 1e-12) {
    // removable singularity: ratio of derivatives
    amplitude = n * std::cos(n * u) / (std::sqrt(n) * std::cos(u));
  } else {
    amplitude = std::sin(n * u) / den;
  }
  const double mag = std::abs(amplitude);
  if (mag == 0.0) return kArrayFactorFloorDb;
  return std::max(20.0 * std::log10(mag), kArrayFactorFloorDb);
}

inline double radiation_pattern_db(const Geometry& g, const AntennaParams& p) {
  return element_gain(g.elevation_rad, g.azimuth_rad, p) + array_factor_db(g.elevation_rad, p);
}

// ---------------------------------------------------------------------------
// Propagation

/// LoS probability from UAV altitude and horizontal distance.
inline double los_probability(const Geometry& g) {
  const double h = g.uav_altitude_m;
  if (h >= 100.0 && h <= 300.0) return 1.0;
  if (!(h >= 1.0)) {
    throw ChannelDomainError("los_probability: altitude " + std::to_string(h) + " m is below 1 m");
  }
  const double log_h = std::log10(h);
  const double d1 = std::max(460.0 * log_h - 700.0, 18.0);
  const double p1 = 4300.0 * log_h - 3800.0;
  if (p1 <= 0.0) {
    throw ChannelDomainError("los_probability: altitude " + std::to_string(h) + " m is outside the model range");
  }
  const double d = g.distance_2d_m;
  if (d <= d1) return 1.0;
  return d1 / d + std::exp(-d / p1) * (1.0 - d1 / d);
}

inline double free_space_path_loss_db(double distance_m, double carrier_hz) {
  return 20.0 * std::log10(4.0 * kPi * distance_m * carrier_hz / kSpeedOfLight);
}

/// LoS/NLoS mixture of the two path losses for a given LoS probability.
inline double mean_path_loss(double distance_3d_m, double p_los, const PathLossParams& pl) {
  if (!(distance_3d_m > 0.0)) throw ChannelDomainError("mean_path_loss: distance must be > 0");
  const double fspl = free_space_path_loss_db(distance_3d_m, pl.carrier_hz);
  const double los = fspl + pl.excess_loss_los_db;
  const double nlos = fspl + pl.excess_loss_nlos_db;
  return los * p_los + nlos * (1.0 - p_los);
}

inline double mean_path_loss(const Geometry& g, const PathLossParams& pl) {
  if (!(g.distance_3d_m > 0.0)) throw ChannelDomainError("mean_path_loss: distance must be > 0");
  return mean_path_loss(g.distance_3d_m, los_probability(g), pl);
}

inline double received_power_dbm(double tx_power_dbm, double pattern_db, double path_loss_db) {
  return tx_power_dbm + pattern_db - path_loss_db;
}

inline double received_power_dbm(const Geometry& g, const AntennaParams& ant, const PathLossParams& pl,
                                 const GroundLinkParams& link) {
  return received_power_dbm(link.tx_power_dbm, radiation_pattern_db(g, ant), mean_path_loss(g, pl));
}

inline bool in_service_range(double rx_power_dbm, const GroundLinkParams& link) {
  return rx_power_dbm >= link.rx_power_min_dbm;
}

/// Linear SINR; interferer powers are summed in the linear domain.
inline double sinr(double serving_rx_dbm, std::span<const double> interferer_rx_dbm, double noise_dbm) {
  double denom = dbm_to_watts(noise_dbm);
  for (double i : interferer_rx_dbm) denom += dbm_to_watts(i);
  return dbm_to_watts(serving_rx_dbm) / denom;
}

// ---------------------------------------------------------------------------
// UAV-HAPS link

inline double haps_channel_gain(double distance_m, const HapsLinkParams& p, double fading_sample) {
  if (!(distance_m > 0.0)) throw ChannelDomainError("haps_channel_gain: distance must be > 0");
  const double ratio = kSpeedOfLight / (4.0 * kPi * distance_m * p.carrier_hz);
  return p.antenna_gain_linear * ratio * ratio * fading_sample;
}

inline double haps_rate(const HapsAllocation& alloc, double gain, const HapsLinkParams& p) {
  if (alloc.bandwidth_fraction <= 0.0 || alloc.power_fraction <= 0.0) return 0.0;
  const double bw = alloc.bandwidth_fraction * p.total_bandwidth_hz;
  const double snr = alloc.power_fraction * p.max_uav_tx_power_w * gain / (bw * p.noise_psd_w_per_hz);
  return bw * std::log2(1.0 + snr);
}

/// Draws |h|^2 for a unit-mean Rician channel with factor K. K = +inf is the pure
/// line-of-sight limit and returns 1 without consuming randomness.
template <class Rng>
double sample_rician_power(double k_factor, Rng& rng) {
  if (std::isinf(k_factor)) return 1.0;
  std::normal_distribution<double> gauss(0.0, std::sqrt(0.5 / (k_factor + 1.0)));
  const double los = std::sqrt(k_factor / (k_factor + 1.0));
  const double re = los + gauss(rng);
  const double im = gauss(rng);
  return re * re + im * im;
}

}  // namespace uavsim
