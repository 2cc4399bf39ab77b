#include <gtest/gtest.h>

#include "solarcast/persistence.hpp"

using namespace solarcast;

TEST(Persistence, CarriesClearSkyIndexForward) {
  const auto f = persistence_forecast(400.0, 800.0, 600.0);
  EXPECT_DOUBLE_EQ(f.value, 300.0);
  EXPECT_FALSE(f.fallback);
}

TEST(Persistence, ClearSkyNowGivesClearSkyLater) {
  EXPECT_DOUBLE_EQ(persistence_forecast(700.0, 700.0, 512.5).value, 512.5);
}

TEST(Persistence, DarkIssueHourFallsBackToIndexOne) {
  const auto f = persistence_forecast(0.0, 0.5, 120.0);
  EXPECT_TRUE(f.fallback);
  EXPECT_DOUBLE_EQ(f.value, 120.0);
}

TEST(Persistence, InvariantToClearSkyScaling) {
  for (double alpha : {0.1, 0.5, 2.0, 7.3}) {
    EXPECT_NEAR(persistence_forecast(350.0, 700.0 * alpha, 650.0 * alpha).value,
                persistence_forecast(350.0, 700.0, 650.0).value, 1e-9);
    EXPECT_NEAR(persistence_forecast(350.0 * alpha, 700.0 * alpha, 650.0 * alpha).value,
                alpha * persistence_forecast(350.0, 700.0, 650.0).value, 1e-9);
  }
}
