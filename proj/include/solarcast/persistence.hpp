#pragma once

namespace solarcast {

inline constexpr double kClearSkyEpsilon = 1.0;  // W/m^2

struct PersistenceForecast {
  double value = 0.0;
  bool fallback = false;  // clear sky at the issue hour was below kClearSkyEpsilon
};

// Clear-sky-index persistence: (irradiance_now / clearsky_now) * clearsky_target.
// When clearsky_now <= kClearSkyEpsilon the index is taken as 1.
PersistenceForecast persistence_forecast(double irradiance_now, double clearsky_now, double clearsky_target);

}  // namespace solarcast
