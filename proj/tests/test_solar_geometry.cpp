#include <gtest/gtest.h>

#include "solarcast/errors.hpp"
#include "solarcast/solar_geometry.hpp"

using namespace solarcast;
using namespace std::chrono;

namespace {

sys_seconds at(int y, unsigned m, unsigned d, int hh, int mm = 0) {
  return sys_days{year{y} / month{m} / day{d}} + hours{hh} + minutes{mm};
}

const GeoPoint kDeBilt{52.1, 5.18};

}  // namespace

// Reference elevations from tests/oracles/solar_oracle.py (pvlib).
TEST(SolarPosition, MidsummerNoonNetherlands) {
  const auto p = solar_position(kDeBilt, at(2017, 6, 21, 12));
  EXPECT_NEAR(p.elevation_deg, 61.3, 0.5);
  EXPECT_NEAR(p.elevation_deg, 61.114, 0.05);
  EXPECT_DOUBLE_EQ(p.zenith_deg, 90.0 - p.elevation_deg);
  EXPECT_NEAR(p.azimuth_deg, 180.0, 15.0);
}

TEST(SolarPosition, EquinoxEquatorNearZenith) {
  const auto p = solar_position({0.0, 0.0}, at(2017, 3, 20, 12, 7));
  EXPECT_NEAR(p.elevation_deg, 89.898, 0.3);
}

TEST(SolarPosition, NightIsBelowHorizon) {
  EXPECT_LT(solar_position(kDeBilt, at(2017, 6, 21, 0)).elevation_deg, 0.0);
  EXPECT_LT(solar_position(kDeBilt, at(2017, 12, 21, 18)).elevation_deg, 0.0);
}

TEST(SolarPosition, OutsideValidWindowThrows) {
  EXPECT_THROW(solar_position(kDeBilt, at(1949, 12, 31, 12)), RangeError);
  EXPECT_THROW(solar_position(kDeBilt, at(2101, 1, 1, 12)), RangeError);
  EXPECT_THROW(solar_position({91.0, 0.0}, at(2017, 1, 1, 12)), ParameterError);
}

TEST(ClearSky, IneichenMatchesReference) {
  EXPECT_NEAR(ineichen_perez_ghi(30.0, 3.0, 1367.0), 898.737, 0.5);
  EXPECT_NEAR(ineichen_perez_ghi(60.0, 3.0, 1367.0), 470.655, 0.5);
  EXPECT_NEAR(ineichen_perez_ghi(85.0, 3.0, 1367.0), 31.257, 0.5);
}

TEST(ClearSky, NoonSummerInPlausibleBand) {
  const double ghi = clearsky_ghi(kDeBilt, at(2017, 6, 21, 12)).ghi_wm2;
  EXPECT_GT(ghi, 820.0);
  EXPECT_LT(ghi, 960.0);
}

TEST(ClearSky, ZeroAtNightAndTurbidityChecked) {
  EXPECT_EQ(clearsky_ghi(kDeBilt, at(2017, 6, 21, 0)).ghi_wm2, 0.0);
  EXPECT_THROW(clearsky_ghi(kDeBilt, at(2017, 6, 21, 12), 0.5), ParameterError);
  EXPECT_THROW(clearsky_ghi(kDeBilt, at(2017, 6, 21, 12), 11.0), ParameterError);
}

TEST(ClearSky, HigherTurbidityDimsTheSky) {
  const auto t = at(2017, 6, 21, 12);
  EXPECT_GT(clearsky_ghi(kDeBilt, t, 2.0).ghi_wm2, clearsky_ghi(kDeBilt, t, 5.0).ghi_wm2);
}

TEST(ClearSky, ExtraterrestrialSeasonalSwing) {
  EXPECT_GT(extraterrestrial_irradiance(3), extraterrestrial_irradiance(185));
  EXPECT_NEAR(extraterrestrial_irradiance(3), 1412.0, 5.0);
  EXPECT_NEAR(extraterrestrial_irradiance(185), 1321.0, 5.0);
}

// Slot counts per day with midpoint elevation >= 3 deg, from the oracle.
TEST(ElevationMask, WinterAndSummerDayCounts) {
  auto count = [](UtcHour first) {
    const auto m = elevation_mask(kDeBilt, first, 24, 3.0);
    return std::count(m.begin(), m.end(), true);
  };
  EXPECT_EQ(count(make_hour(2017, 1, 15, 0)), 7);
  EXPECT_EQ(count(make_hour(2017, 6, 15, 0)), 16);
}

TEST(ElevationMask, MatchesSlotElevation) {
  const UtcHour first = make_hour(2016, 3, 1, 0);
  const auto m = elevation_mask(kDeBilt, first, 48, 3.0);
  for (std::size_t i = 0; i < m.size(); ++i) {
    EXPECT_EQ(m[i], slot_elevation_deg(kDeBilt, first + static_cast<std::int64_t>(i)) >= 3.0);
  }
}
