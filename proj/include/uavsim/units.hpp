#pragma once

#include <cmath>
#include <numbers>

namespace uavsim {

inline constexpr double kSpeedOfLight = 299'792'458.0;  // m/s
inline constexpr double kPi = std::numbers::pi;

/// Every dB <-> linear conversion in the library goes through these two helpers.
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double linear) { return 10.0 * std::log10(linear); }

inline double dbm_to_watts(double dbm) { return db_to_linear(dbm - 30.0); }
inline double watts_to_dbm(double watts) { return linear_to_db(watts) + 30.0; }

inline constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

inline constexpr double bps_to_mbps(double bps) { return bps / 1e6; }

}  // namespace uavsim
