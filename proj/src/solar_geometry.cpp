#include "solarcast/solar_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "solarcast/errors.hpp"

namespace solarcast {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

double wrap360(double x) {
  x = std::fmod(x, 360.0);
  return x < 0 ? x + 360.0 : x;
}

// Julian date for a UTC instant.
double julian_date(std::chrono::sys_seconds t) {
  return 2440587.5 + static_cast<double>(t.time_since_epoch().count()) / 86400.0;
}

const std::chrono::sys_seconds kValidFrom{std::chrono::sys_days{std::chrono::year{1950} / 1 / 1}};
const std::chrono::sys_seconds kValidTo{std::chrono::sys_days{std::chrono::year{2101} / 1 / 1}};

}  // namespace

void GeoPoint::validate() const {
  if (!(latitude_deg >= -90.0 && latitude_deg <= 90.0) ||
      !(longitude_deg >= -180.0 && longitude_deg <= 180.0)) {
    throw ParameterError("coordinates out of range: lat " + std::to_string(latitude_deg) + ", lon " +
                         std::to_string(longitude_deg));
  }
}

SolarPosition solar_position(const GeoPoint& site, std::chrono::sys_seconds t) {
  if (t < kValidFrom || t >= kValidTo) {
    throw RangeError("timestamp outside the 1950-2100 solar position window");
  }
  site.validate();

  const double jd = julian_date(t);
  const double n = jd - 2451545.0;
  const double ut_hours = std::fmod(jd + 0.5, 1.0) * 24.0;

  // Ecliptic coordinates.
  const double mean_lon = wrap360(280.460 + 0.9856474 * n);
  const double mean_anom = wrap360(357.528 + 0.9856003 * n) * kDeg;
  const double ecl_lon =
      wrap360(mean_lon + 1.915 * std::sin(mean_anom) + 0.020 * std::sin(2.0 * mean_anom)) * kDeg;
  const double obliquity = (23.439 - 0.0000004 * n) * kDeg;

  const double ra = std::atan2(std::cos(obliquity) * std::sin(ecl_lon), std::cos(ecl_lon));
  const double dec = std::asin(std::sin(obliquity) * std::sin(ecl_lon));

  // Local hour angle.
  const double gmst = std::fmod(6.697375 + 0.0657098242 * n + ut_hours, 24.0);
  const double lmst = gmst + site.longitude_deg / 15.0;
  double ha = wrap360(lmst * 15.0 - ra / kDeg);
  if (ha > 180.0) ha -= 360.0;
  const double ha_rad = ha * kDeg;

  const double lat = site.latitude_deg * kDeg;
  double sin_el = std::sin(dec) * std::sin(lat) + std::cos(dec) * std::cos(lat) * std::cos(ha_rad);
  sin_el = std::clamp(sin_el, -1.0, 1.0);
  double el = std::asin(sin_el) / kDeg;

  const double az = std::atan2(-std::cos(dec) * std::sin(ha_rad),
                               std::sin(dec) * std::cos(lat) - std::cos(dec) * std::cos(ha_rad) * std::sin(lat));

  // Atmospheric refraction.
  if (el > -0.56) {
    el += 3.51561 * (0.1594 + 0.0196 * el + 0.00002 * el * el) / (1.0 + 0.505 * el + 0.0845 * el * el);
  } else {
    el += 0.56;
  }
  el = std::min(el, 90.0);

  SolarPosition pos;
  pos.elevation_deg = el;
  pos.zenith_deg = 90.0 - el;
  pos.azimuth_deg = wrap360(az / kDeg);
  if (pos.azimuth_deg >= 360.0) pos.azimuth_deg = 0.0;
  return pos;
}

double extraterrestrial_irradiance(int day_of_year) {
  const double b = 2.0 * std::numbers::pi * (day_of_year - 1) / 365.0;
  // Spencer (1971) series for the Earth-Sun distance correction.
  const double r = 1.00011 + 0.034221 * std::cos(b) + 0.00128 * std::sin(b) + 0.000719 * std::cos(2 * b) +
                   0.000077 * std::sin(2 * b);
  return 1366.1 * r;
}

double relative_air_mass(double zenith_deg) {
  if (zenith_deg >= 90.0) return 0.0;
  return 1.0 / (std::cos(zenith_deg * kDeg) + 0.50572 * std::pow(96.07995 - zenith_deg, -1.6364));
}

double ineichen_perez_ghi(double zenith_deg, double linke_turbidity, double extraterrestrial_wm2) {
  const double cos_z = std::cos(zenith_deg * kDeg);
  if (zenith_deg >= 90.0 || cos_z <= 0.0) return 0.0;
  // Altitude 0 m: fh1 = fh2 = 1, pressure-corrected air mass equals relative air mass.
  constexpr double cg1 = 0.868;
  constexpr double cg2 = 0.0387;
  const double air_mass = relative_air_mass(zenith_deg);
  const double attenuation = std::exp(-cg2 * air_mass * (1.0 + (linke_turbidity - 1.0)));
  return std::max(0.0, cg1 * extraterrestrial_wm2 * cos_z * attenuation);
}

ClearSkyValue clearsky_ghi(const GeoPoint& site, std::chrono::sys_seconds t, double linke_turbidity) {
  if (!(linke_turbidity >= 1.0 && linke_turbidity <= 10.0)) {
    throw ParameterError("Linke turbidity must lie in [1, 10], got " + std::to_string(linke_turbidity));
  }
  const SolarPosition pos = solar_position(site, t);
  if (pos.elevation_deg <= 0.0) return {};
  const auto day = std::chrono::floor<std::chrono::days>(t);
  const int doy = day_of_year(make_hour(day));
  return {ineichen_perez_ghi(pos.zenith_deg, linke_turbidity, extraterrestrial_irradiance(doy))};
}

double slot_clearsky_ghi(const GeoPoint& site, UtcHour slot, double linke_turbidity) {
  return clearsky_ghi(site, slot_midpoint(slot), linke_turbidity).ghi_wm2;
}

double slot_elevation_deg(const GeoPoint& site, UtcHour slot) {
  return solar_position(site, slot_midpoint(slot)).elevation_deg;
}

std::vector<bool> elevation_mask(const GeoPoint& site, UtcHour first, std::size_t n_slots,
                                 double min_elevation_deg) {
  std::vector<bool> mask(n_slots);
  for (std::size_t i = 0; i < n_slots; ++i) {
    mask[i] = slot_elevation_deg(site, first + static_cast<std::int64_t>(i)) >= min_elevation_deg;
  }
  return mask;
}

}  // namespace solarcast
