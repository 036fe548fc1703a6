#include <gtest/gtest.h>

#include <limits>
#include <vector>

#include "support/channel_oracle.hpp"
#include "support/test_util.hpp"
#include "uavsim/channel.hpp"

using namespace uavsim;

namespace {

AntennaParams reference_antenna() {
  AntennaParams p;
  p.peak_element_gain_db = 8.0;
  p.az_3db_rad = 65.0 * kPi / 180.0;
  p.el_3db_rad = 65.0 * kPi / 180.0;
  p.front_back_ratio_db = 30.0;
  p.sidelobe_attenuation_db = 30.0;
  p.num_elements = 8;
  return p;
}

Geometry geom_at(double h, double d2, double d3 = -1.0) {
  Geometry g;
  g.uav_altitude_m = h;
  g.distance_2d_m = d2;
  g.distance_3d_m = d3 < 0 ? d2 : d3;
  return g;
}

}  // namespace

TEST(Attenuation, Examples) {
  const auto p = reference_antenna();
  EXPECT_DOUBLE_EQ(azimuth_attenuation(0.0, p), 0.0);
  EXPECT_DOUBLE_EQ(azimuth_attenuation(p.az_3db_rad, p), 12.0);
  // 12 * 180/65 = 33.23 > 30, so the cap wins
  EXPECT_DOUBLE_EQ(azimuth_attenuation(kPi, p), 30.0);
  EXPECT_NEAR(12.0 * 180.0 / 65.0, 33.23, 0.01);

  EXPECT_DOUBLE_EQ(elevation_attenuation(0.0, p), 0.0);
  EXPECT_DOUBLE_EQ(elevation_attenuation(p.el_3db_rad, p), 12.0);
  EXPECT_DOUBLE_EQ(elevation_attenuation(p.el_3db_rad / 2.0, p), 6.0);
}

TEST(Attenuation, NonnegativeEvenAndCapped) {
  auto rng = testutil::seeded(11);
  auto p = reference_antenna();
  p.sidelobe_attenuation_db = 20.0;
  for (int i = 0; i < 1000; ++i) {
    const double a = testutil::uniform(rng, -2 * kPi, 2 * kPi);
    const double az = azimuth_attenuation(a, p);
    const double el = elevation_attenuation(a, p);
    EXPECT_GE(az, 0.0);
    EXPECT_GE(el, 0.0);
    EXPECT_EQ(az, azimuth_attenuation(-a, p));
    EXPECT_EQ(el, elevation_attenuation(-a, p));
    EXPECT_LE(az, p.front_back_ratio_db);
    EXPECT_LE(el, p.sidelobe_attenuation_db);
  }
}

TEST(Attenuation, MonotoneInMagnitude) {
  const auto p = reference_antenna();
  double prev = -1.0;
  for (double a = 0.0; a < kPi; a += 0.01) {
    const double v = azimuth_attenuation(a, p);
    EXPECT_GE(v, prev);
    prev = v;
  }
}

TEST(ElementGain, Examples) {
  const auto p = reference_antenna();
  EXPECT_DOUBLE_EQ(element_gain(0.0, 0.0, p), 8.0);
  EXPECT_DOUBLE_EQ(element_gain(p.el_3db_rad, 0.0, p), -4.0);
  // both attenuations at their caps: 30 + 30 > B_m
  EXPECT_DOUBLE_EQ(element_gain(kPi, kPi, p), 8.0 - 30.0);
}

TEST(ElementGain, MaximumAtBoresightAndFloor) {
  auto rng = testutil::seeded(12);
  const auto p = reference_antenna();
  const double peak = element_gain(0.0, 0.0, p);
  for (int i = 0; i < 1000; ++i) {
    const double z = testutil::uniform(rng, -kPi / 2, kPi / 2);
    const double f = testutil::uniform(rng, -kPi, kPi);
    const double g = element_gain(z, f, p);
    if (z != 0.0 || f != 0.0) {
      EXPECT_LT(g, peak);
    }
    EXPECT_GE(g, p.peak_element_gain_db - p.front_back_ratio_db);
  }
}

TEST(ElementGain, AlternativeModes) {
  auto p = reference_antenna();
  p.mode = PatternMode::kLiteral;
  // the literal sign adds the attenuations
  EXPECT_DOUBLE_EQ(element_gain(p.el_3db_rad, 0.0, p), 8.0 + 12.0);
  p.mode = PatternMode::kSquared;
  EXPECT_DOUBLE_EQ(elevation_attenuation(p.el_3db_rad / 2.0, p), 3.0);
  EXPECT_DOUBLE_EQ(element_gain(p.el_3db_rad, 0.0, p), -4.0);
}

TEST(ArrayFactor, Examples) {
  auto p = reference_antenna();
  p.downtilt_rad = 0.1;
  EXPECT_NEAR(array_factor_db(p.downtilt_rad, p), 9.030899869919435, 1e-9);
  // numeric limit next to the singular point agrees
  EXPECT_NEAR(array_factor_db(p.downtilt_rad + 1e-9, p), 10.0 * std::log10(8.0), 1e-6);

  p.num_elements = 1;
  for (double z : {-1.0, 0.0, 0.3, 1.2}) EXPECT_NEAR(array_factor_db(z, p), 0.0, 1e-12);

  p.num_elements = 4;
  p.downtilt_rad = 0.0;
  // sin(zeta) - sin(tilt) = 0.5 is a pattern null
  EXPECT_DOUBLE_EQ(array_factor_db(std::asin(0.5), p), kArrayFactorFloorDb);
}

TEST(ArrayFactor, SingularPointForAllArraySizes) {
  auto p = reference_antenna();
  for (int n = 1; n <= 64; ++n) {
    p.num_elements = n;
    for (double tilt : {-0.2, 0.0, 0.35}) {
      p.downtilt_rad = tilt;
      EXPECT_NEAR(array_factor_db(tilt, p), 10.0 * std::log10(n), 1e-6) << "N=" << n;
    }
  }
}

TEST(RadiationPattern, Examples) {
  auto p = reference_antenna();
  p.downtilt_rad = 0.0;
  Geometry g;
  EXPECT_NEAR(radiation_pattern_db(g, p), 8.0 + 9.030899869919435, 1e-9);
  p.num_elements = 1;
  EXPECT_NEAR(radiation_pattern_db(g, p), 8.0, 1e-12);
}

TEST(RadiationPattern, UpperBound) {
  auto rng = testutil::seeded(13);
  auto p = reference_antenna();
  for (int i = 0; i < 1000; ++i) {
    p.num_elements = 1 + static_cast<int>(rng() % 32);
    Geometry g;
    g.elevation_rad = testutil::uniform(rng, -kPi / 2, kPi / 2);
    g.azimuth_rad = testutil::uniform(rng, -kPi, kPi);
    EXPECT_LE(radiation_pattern_db(g, p), 8.0 + 10.0 * std::log10(p.num_elements) + 1e-9);
  }
}

TEST(LosProbability, Examples) {
  EXPECT_EQ(los_probability(geom_at(150.0, 10'000.0)), 1.0);
  // d1 = 460 log10(50) - 700 = 81.5
  EXPECT_NEAR(std::max(460.0 * std::log10(50.0) - 700.0, 18.0), 81.53, 0.01);
  EXPECT_EQ(los_probability(geom_at(50.0, 50.0)), 1.0);
  EXPECT_NEAR(los_probability(geom_at(50.0, 163.1)), oracle::los(50.0, 163.1), 1e-15);
  EXPECT_NEAR(los_probability(geom_at(50.0, 163.1)), 0.977, 5e-4);
}

TEST(LosProbability, RejectsOutOfModelAltitude) {
  EXPECT_THROW(los_probability(geom_at(5.0, 100.0)), ChannelDomainError);
  EXPECT_THROW(los_probability(geom_at(0.5, 100.0)), ChannelDomainError);
  EXPECT_NO_THROW(los_probability(geom_at(8.0, 100.0)));
}

TEST(LosProbability, RangeAndMonotonicity) {
  auto rng = testutil::seeded(14);
  for (int i = 0; i < 200; ++i) {
    const double h = testutil::uniform(rng, 10.0, 2000.0);
    double prev = 2.0;
    for (double d = 1.0; d < 50'000.0; d *= 1.15) {
      const double p = los_probability(geom_at(h, d));
      EXPECT_GT(p, 0.0);
      EXPECT_LE(p, 1.0);
      EXPECT_LE(p, prev + 1e-15) << "h=" << h << " d=" << d;
      prev = p;
    }
  }
}

TEST(PathLoss, Examples) {
  PathLossParams pl;
  pl.carrier_hz = 2.1e9;
  const double fspl = free_space_path_loss_db(1000.0, 2.1e9);
  EXPECT_DOUBLE_EQ(mean_path_loss(1000.0, 1.0, pl), fspl + 1.0);
  EXPECT_DOUBLE_EQ(mean_path_loss(1000.0, 0.0, pl), fspl + 20.0);
  // 20 log10(4 pi 1000 2.1e9 / c) + 1, quoted as about 99.88 with c = 3e8
  EXPECT_NEAR(mean_path_loss(1000.0, 1.0, pl), 99.89, 0.01);
  EXPECT_THROW(mean_path_loss(0.0, 1.0, pl), ChannelDomainError);
  EXPECT_THROW(mean_path_loss(geom_at(150.0, 0.0, 0.0), pl), ChannelDomainError);
}

TEST(PathLoss, BetweenLosAndNlos) {
  auto rng = testutil::seeded(15);
  PathLossParams pl;
  for (int i = 0; i < 1000; ++i) {
    const double d = testutil::uniform(rng, 1.0, 1e5);
    const double p = testutil::uniform(rng, 0.0, 1.0);
    const double fspl = free_space_path_loss_db(d, pl.carrier_hz);
    const double l = mean_path_loss(d, p, pl);
    EXPECT_GE(l, fspl + pl.excess_loss_los_db - 1e-9);
    EXPECT_LE(l, fspl + pl.excess_loss_nlos_db + 1e-9);
  }
}

TEST(ReceivedPower, Examples) {
  EXPECT_NEAR(received_power_dbm(40.0, 17.031, 99.88), -42.849, 1e-9);
  EXPECT_DOUBLE_EQ(received_power_dbm(40.0, 0.0, 0.0), 40.0);
  GroundLinkParams link;
  EXPECT_FALSE(in_service_range(-100.5, link));
  EXPECT_TRUE(in_service_range(-100.0, link));
}

TEST(Sinr, Examples) {
  EXPECT_NEAR(sinr(-90.0, {}, -100.0), 10.0, 1e-12);
  const std::vector<double> same{-90.0};
  EXPECT_NEAR(sinr(-90.0, same, -250.0), 1.0, 1e-12);
  const std::vector<double> one{-95.0};
  EXPECT_NEAR(sinr(-90.0, one, -100.0), 1e-9 / (std::pow(10.0, -9.5) + 1e-10), 1e-12);
  EXPECT_NEAR(sinr(-90.0, one, -100.0), 2.403, 1e-3);
}

TEST(Sinr, InterferenceNeverHelps) {
  auto rng = testutil::seeded(16);
  for (int i = 0; i < 500; ++i) {
    std::vector<double> interferers;
    const double serving = testutil::uniform(rng, -120, -60);
    const double noise = testutil::uniform(rng, -120, -90);
    double prev = sinr(serving, interferers, noise);
    EXPECT_LE(prev, dbm_to_watts(serving) / dbm_to_watts(noise) * (1 + 1e-12));
    for (int k = 0; k < 5; ++k) {
      interferers.push_back(testutil::uniform(rng, -130, -60));
      const double next = sinr(serving, interferers, noise);
      EXPECT_LE(next, prev);
      prev = next;
    }
  }
}

TEST(HapsLink, GainExamples) {
  HapsLinkParams p;
  p.antenna_gain_linear = 1.0;
  p.carrier_hz = 2e9;
  EXPECT_DOUBLE_EQ(haps_channel_gain(1000.0, p, 0.0), 0.0);
  EXPECT_NEAR(haps_channel_gain(kSpeedOfLight / (4 * kPi * p.carrier_hz), p, 1.0), 1.0, 1e-12);
  p.antenna_gain_linear = 10.0;
  const double g = haps_channel_gain(20'000.0, p, 1.0);
  EXPECT_TRUE(testutil::close_rel(g, oracle::haps_gain(20'000.0, 2e9, 10.0, 1.0), 1e-12));
  // 10 (c / (4 pi 2e4 2e9))^2 evaluates to 3.56e-12
  EXPECT_NEAR(g / 1e-12, 3.56, 0.01);
  EXPECT_THROW(haps_channel_gain(0.0, p, 1.0), ChannelDomainError);
}

TEST(HapsLink, GainDecreasesWithDistance) {
  HapsLinkParams p;
  double prev = std::numeric_limits<double>::infinity();
  for (double d = 100.0; d < 1e5; d *= 1.3) {
    const double g = haps_channel_gain(d, p, 1.0);
    EXPECT_LT(g, prev);
    prev = g;
  }
}

TEST(HapsLink, RateExamples) {
  HapsLinkParams p;
  p.total_bandwidth_hz = 20e6;
  p.max_uav_tx_power_w = 1.0;
  p.noise_psd_w_per_hz = 4e-21;
  EXPECT_EQ(haps_rate({0.5, 0.0}, 1e-12, p), 0.0);
  EXPECT_EQ(haps_rate({0.0, 1.0}, 1e-12, p), 0.0);
  const double r = haps_rate({0.2, 1.0}, 4e-12, p);
  // SNR = 4e-12 / (4e6 * 4e-21) = 250
  EXPECT_TRUE(testutil::close_rel(r, oracle::haps_rate(0.2, 20e6, 1.0, 1.0, 4e-12, 4e-21), 1e-12));
  EXPECT_NEAR(r, 4e6 * std::log2(251.0), 1e-6);
  EXPECT_NEAR(r / 1e7, 3.189, 1e-3);
}

TEST(HapsLink, RateMonotoneInPower) {
  HapsLinkParams p;
  auto rng = testutil::seeded(17);
  for (int i = 0; i < 200; ++i) {
    const double b = testutil::uniform(rng, 0.01, 1.0);
    const double gain = testutil::uniform(rng, 1e-14, 1e-11);
    double prev = 0.0;
    for (double pf = 0.0; pf <= 1.0; pf += 0.05) {
      const double r = haps_rate({b, pf}, gain, p);
      EXPECT_GE(r, prev);
      prev = r;
    }
  }
}

TEST(HapsLink, RicianPowerHasUnitMeanAndIsSeeded) {
  std::mt19937_64 a(5), b(5);
  double sum = 0.0;
  const int n = 200'000;
  for (int i = 0; i < n; ++i) {
    const double x = sample_rician_power(10.0, a);
    EXPECT_EQ(x, sample_rician_power(10.0, b));
    sum += x;
  }
  EXPECT_NEAR(sum / n, 1.0, 0.01);
}

TEST(HapsLink, RicianInfiniteKIsDeterministicUnitPower) {
  std::mt19937_64 a(5);
  const auto before = a;
  EXPECT_EQ(sample_rician_power(std::numeric_limits<double>::infinity(), a), 1.0);
  EXPECT_EQ(a, before);
}

TEST(Geometry, DistancesAndAngles) {
  const Position3 bs{0, 0, 25};
  const Position3 uav{300, 400, 150};
  const auto g = make_geometry(bs, 0.0, uav);
  EXPECT_DOUBLE_EQ(g.distance_2d_m, 500.0);
  EXPECT_NEAR(g.distance_3d_m, std::hypot(500.0, 125.0), 1e-9);
  EXPECT_GE(g.distance_3d_m, g.distance_2d_m);
  EXPECT_NEAR(g.azimuth_rad, std::atan2(400.0, 300.0), 1e-12);
  EXPECT_NEAR(g.elevation_rad, std::atan2(125.0, 500.0), 1e-12);
  const auto back = make_geometry(bs, kPi, uav);
  EXPECT_GT(back.azimuth_rad, -kPi);
  EXPECT_LE(back.azimuth_rad, kPi);
}
