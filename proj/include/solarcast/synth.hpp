#pragma once

#include <chrono>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "solarcast/dataset.hpp"

namespace solarcast {

// Synthetic multi-site data. The stochastic state is the clear-sky index k_c:
// a Gaussian-kernel spatial field, AR(1) in time, mapped to
// clip(kc_mean + kc_std * z, 0.05, 1.1).
struct SynthConfig {
  std::size_t n_sites = 30;
  GeoPoint bbox_min{50.8, 3.4};  // roughly the Netherlands
  GeoPoint bbox_max{53.5, 7.1};
  std::chrono::sys_days first_day{std::chrono::year{2014} / 1 / 1};
  std::chrono::sys_days last_day{std::chrono::year{2017} / 12 / 31};
  std::uint64_t seed = 20170101;

  double cloud_persistence = 0.82;    // hourly AR(1) coefficient, [0, 1)
  double spatial_corr_km = 60.0;      // e-folding length of the spatial kernel
  double sat_noise_rel = 0.06;        // multiplicative noise on the satellite channel
  double sat_pixel_km = 3.0;          // satellite cell size; 0 samples the site itself
  double nwp_noise_base_rel = 0.20;   // NWP k_c error std at lead 1
  double nwp_noise_growth_rel = 0.01; // added std per extra lead hour
  double missing_rate = 0.01;         // per channel and slot, [0, 0.2]

  double kc_mean = 0.6;
  double kc_std = 0.3;
  double linke_turbidity = kDefaultTurbidity;

  // Throws ParameterError on out-of-range fields or a degenerate bounding box.
  void validate() const;
};

struct SiteSpec {
  std::string site_id;
  GeoPoint location;
};

std::vector<SiteSpec> gen_sites(const SynthConfig& cfg);

std::vector<SiteSeries> gen_dataset(const SynthConfig& cfg);
std::vector<SiteSeries> gen_dataset(const SynthConfig& cfg, std::span<const SiteSpec> sites);

// Latent clear-sky index, row-major [slot][point], before any channel
// derivation. Exposed so the field statistics can be tested directly.
struct ClearSkyIndexField {
  std::size_t n_points = 0;
  std::size_t n_slots = 0;
  std::vector<double> kc;

  double at(std::size_t slot, std::size_t point) const { return kc[slot * n_points + point]; }
};

ClearSkyIndexField gen_clearsky_index(const SynthConfig& cfg, std::span<const GeoPoint> points,
                                      std::size_t n_slots);

double great_circle_km(const GeoPoint& a, const GeoPoint& b);

}  // namespace solarcast
