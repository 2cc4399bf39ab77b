#pragma once

#include <chrono>
#include <span>
#include <vector>

#include "solarcast/time.hpp"

namespace solarcast {

struct GeoPoint {
  double latitude_deg = 0.0;
  double longitude_deg = 0.0;

  // Throws ParameterError when outside [-90, 90] x [-180, 180].
  void validate() const;
  bool operator==(const GeoPoint&) const = default;
};

// Apparent (refraction-corrected) sun position. zenith = 90 - elevation.
struct SolarPosition {
  double elevation_deg = 0.0;
  double zenith_deg = 90.0;
  double azimuth_deg = 0.0;  // clockwise from north, [0, 360)
};

struct ClearSkyValue {
  double ghi_wm2 = 0.0;
};

inline constexpr double kDefaultTurbidity = 3.0;

// Michalsky's almanac algorithm. Accurate to ~0.01 deg in its design window;
// accepted for 1950..2100. Throws RangeError outside that window.
SolarPosition solar_position(const GeoPoint& site, std::chrono::sys_seconds t);

// Top-of-atmosphere normal irradiance for a day of year (W/m^2).
double extraterrestrial_irradiance(int day_of_year);

// Kasten & Young (1989) relative air mass; 0 for a sun at or below the horizon.
double relative_air_mass(double zenith_deg);

// Ineichen-Perez clear-sky GHI at sea level for a given apparent zenith.
double ineichen_perez_ghi(double zenith_deg, double linke_turbidity, double extraterrestrial_wm2);

// Clear-sky GHI for a site and instant. Throws ParameterError unless
// turbidity is in [1, 10].
ClearSkyValue clearsky_ghi(const GeoPoint& site, std::chrono::sys_seconds t,
                           double linke_turbidity = kDefaultTurbidity);

// Clear-sky value used for an hourly slot, evaluated at the slot midpoint.
double slot_clearsky_ghi(const GeoPoint& site, UtcHour slot, double linke_turbidity = kDefaultTurbidity);
double slot_elevation_deg(const GeoPoint& site, UtcHour slot);

// true for slots whose midpoint elevation is >= min_elevation_deg.
std::vector<bool> elevation_mask(const GeoPoint& site, UtcHour first, std::size_t n_slots,
                                 double min_elevation_deg);

}  // namespace solarcast
