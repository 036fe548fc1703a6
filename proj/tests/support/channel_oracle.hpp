#pragma once

// Scalar reference evaluations of the channel formulas, written from the
// closed forms without touching any uavsim helper. Used only by tests.

#include <cmath>
#include <vector>

namespace oracle {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kC = 299792458.0;

inline double az_att(double phi, double phi3, double bm) {
  double v = 12.0 * std::fabs(phi) / phi3;
  return v < bm ? v : bm;
}

inline double el_att(double zeta, double zeta3, double sla) {
  double v = 12.0 * std::fabs(zeta) / zeta3;
  return v < sla ? v : sla;
}

inline double element(double zeta, double phi, double bmax, double phi3, double zeta3, double bm, double sla) {
  double s = az_att(phi, phi3, bm) + el_att(zeta, zeta3, sla);
  if (s > bm) s = bm;
  return bmax - s;
}

// Evaluated through the complex exponential sum of the array, which is an
// independent route to the closed-form ratio of sines.
inline double array_factor_db(double zeta, double tilt, int n) {
  double psi = kPi * (std::sin(zeta) - std::sin(tilt));
  double re = 0.0;
  double im = 0.0;
  for (int k = 0; k < n; ++k) {
    re += std::cos(k * psi);
    im += std::sin(k * psi);
  }
  double mag = std::sqrt(re * re + im * im) / std::sqrt(static_cast<double>(n));
  if (mag == 0.0) return -300.0;
  double db = 20.0 * std::log10(mag);
  return db < -300.0 ? -300.0 : db;
}

inline double los(double h, double d) {
  if (h >= 100.0 && h <= 300.0) return 1.0;
  double lh = std::log(h) / std::log(10.0);
  double d1 = 460.0 * lh - 700.0;
  if (d1 < 18.0) d1 = 18.0;
  double p1 = 4300.0 * lh - 3800.0;
  if (d <= d1) return 1.0;
  return d1 / d + std::exp(-d / p1) * (1.0 - d1 / d);
}

inline double fspl(double d, double f) { return 20.0 * std::log(4.0 * kPi * d * f / kC) / std::log(10.0); }

inline double path_loss(double d3, double p_los, double f, double eta_los, double eta_nlos) {
  double base = fspl(d3, f);
  return p_los * (base + eta_los) + (1.0 - p_los) * (base + eta_nlos);
}

inline double mw(double dbm) { return std::exp(dbm / 10.0 * std::log(10.0)); }

inline double sinr(double serving, const std::vector<double>& interferers, double noise) {
  double sum = mw(noise);
  for (double i : interferers) sum += mw(i);
  return mw(serving) / sum;
}

inline double haps_gain(double d, double f, double b, double fading) {
  double wavelength_term = kC / (4.0 * kPi * d * f);
  return b * wavelength_term * wavelength_term * fading;
}

inline double haps_rate(double bfrac, double bmax, double pfrac, double pmax, double gain, double n0) {
  if (bfrac == 0.0 || pfrac == 0.0) return 0.0;
  double w = bfrac * bmax;
  return w * std::log(1.0 + pfrac * pmax * gain / (w * n0)) / std::log(2.0);
}

}  // namespace oracle
