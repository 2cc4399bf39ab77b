#include "solarcast/persistence.hpp"

namespace solarcast {

PersistenceForecast persistence_forecast(double irradiance_now, double clearsky_now, double clearsky_target) {
  if (clearsky_now <= kClearSkyEpsilon) return {clearsky_target, true};
  return {irradiance_now / clearsky_now * clearsky_target, false};
}

}  // namespace solarcast
