#include "solarcast/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "solarcast/errors.hpp"
#include "solarcast/parallel.hpp"
#include "solarcast/rng.hpp"

namespace solarcast {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kKmPerDegLat = 110.574;
constexpr double kKmPerDegLon = 111.320;

// Counter streams, one per channel.
enum Stream : std::uint64_t {
  kField = 1,
  kSatNoise,
  kNwpNoise,
  kTempNoise,
  kHumidNoise,
  kTempFcNoise,
  kHumidFcNoise,
  kMissingGround,
  kMissingSat,
  kMissingTemp,
  kMissingHumid,
};

double open_unit(Rng& rng) { return (static_cast<double>(rng.engine()() >> 11) + 0.5) * 0x1.0p-53; }

Eigen::MatrixXd spatial_factor(std::span<const GeoPoint> points, double corr_km) {
  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd cov(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double d = great_circle_km(points[i], points[j]) / corr_km;
      cov(i, j) = cov(j, i) = std::exp(-d * d);
    }
  }
  // Near-coincident points make the kernel matrix singular; add jitter until
  // the factorisation succeeds.
  for (double jitter = 1e-10;; jitter *= 10.0) {
    Eigen::MatrixXd a = cov;
    a.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    if (jitter > 1e-2) throw ParameterError("spatial covariance cannot be factorised");
  }
}

GeoPoint pixel_centre(const GeoPoint& site, const SynthConfig& cfg) {
  if (cfg.sat_pixel_km <= 0.0) return site;
  const double lat_mid = 0.5 * (cfg.bbox_min.latitude_deg + cfg.bbox_max.latitude_deg);
  const double kx = kKmPerDegLon * std::cos(lat_mid * kDeg);
  const double x = (site.longitude_deg - cfg.bbox_min.longitude_deg) * kx;
  const double y = (site.latitude_deg - cfg.bbox_min.latitude_deg) * kKmPerDegLat;
  const double cx = (std::floor(x / cfg.sat_pixel_km) + 0.5) * cfg.sat_pixel_km;
  const double cy = (std::floor(y / cfg.sat_pixel_km) + 0.5) * cfg.sat_pixel_km;
  return {cfg.bbox_min.latitude_deg + cy / kKmPerDegLat, cfg.bbox_min.longitude_deg + cx / kx};
}

std::string site_name(std::size_t index, std::size_t n) {
  const int width = std::max<int>(2, static_cast<int>(std::to_string(n).size()));
  std::string digits = std::to_string(index + 1);
  return "S" + std::string(static_cast<std::size_t>(width) - digits.size(), '0') + digits;
}

}  // namespace

void SynthConfig::validate() const {
  bbox_min.validate();
  bbox_max.validate();
  if (!(bbox_min.latitude_deg < bbox_max.latitude_deg) || !(bbox_min.longitude_deg < bbox_max.longitude_deg)) {
    throw ParameterError("degenerate bounding box");
  }
  if (n_sites < 1) throw ParameterError("n_sites must be >= 1");
  if (last_day < first_day) throw ParameterError("date range is empty");
  if (!(cloud_persistence >= 0.0 && cloud_persistence < 1.0)) {
    throw ParameterError("cloud_persistence must lie in [0, 1)");
  }
  if (!(spatial_corr_km > 0.0)) throw ParameterError("spatial_corr_km must be positive");
  if (!(sat_noise_rel >= 0.0) || !(sat_pixel_km >= 0.0) || !(nwp_noise_base_rel >= 0.0) ||
      !(nwp_noise_growth_rel >= 0.0) || !(kc_std >= 0.0)) {
    throw ParameterError("noise parameters must be non-negative");
  }
  if (!(missing_rate >= 0.0 && missing_rate <= 0.2)) throw ParameterError("missing_rate must lie in [0, 0.2]");
  if (!(linke_turbidity >= 1.0 && linke_turbidity <= 10.0)) throw ParameterError("turbidity must lie in [1, 10]");
}

double great_circle_km(const GeoPoint& a, const GeoPoint& b) {
  constexpr double kEarthRadiusKm = 6371.0088;
  const double dlat = (b.latitude_deg - a.latitude_deg) * kDeg;
  const double dlon = (b.longitude_deg - a.longitude_deg) * kDeg;
  const double h = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(a.latitude_deg * kDeg) * std::cos(b.latitude_deg * kDeg) * std::sin(dlon / 2) *
                       std::sin(dlon / 2);
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

std::vector<SiteSpec> gen_sites(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(derive_seed(cfg.seed, "sites"));
  std::vector<SiteSpec> sites;
  while (sites.size() < cfg.n_sites) {
    const double lat = cfg.bbox_min.latitude_deg +
                       (cfg.bbox_max.latitude_deg - cfg.bbox_min.latitude_deg) * open_unit(rng);
    const double lon = cfg.bbox_min.longitude_deg +
                       (cfg.bbox_max.longitude_deg - cfg.bbox_min.longitude_deg) * open_unit(rng);
    const GeoPoint p{lat, lon};
    const bool dup = std::any_of(sites.begin(), sites.end(), [&](const auto& s) { return s.location == p; });
    if (!dup) sites.push_back({site_name(sites.size(), cfg.n_sites), p});
  }
  return sites;
}

ClearSkyIndexField gen_clearsky_index(const SynthConfig& cfg, std::span<const GeoPoint> points,
                                      std::size_t n_slots) {
  ClearSkyIndexField field;
  field.n_points = points.size();
  field.n_slots = n_slots;
  field.kc.assign(n_slots * points.size(), 0.0);
  if (points.empty() || n_slots == 0) return field;

  const Eigen::MatrixXd factor = spatial_factor(points, cfg.spatial_corr_km);
  const std::uint64_t stream = derive_seed(cfg.seed, kField);
  const auto np = static_cast<Eigen::Index>(points.size());

  // Spatially correlated innovations; each slot is independent of the others.
  std::vector<double> innov(field.kc.size());
  constexpr std::size_t kBlock = 512;
  parallel_for((n_slots + kBlock - 1) / kBlock, [&](std::size_t b) {
    Eigen::VectorXd eps(np);
    for (std::size_t t = b * kBlock; t < std::min(n_slots, (b + 1) * kBlock); ++t) {
      for (Eigen::Index j = 0; j < np; ++j) eps[j] = counter_normal(stream, static_cast<std::uint64_t>(j), t);
      Eigen::Map<Eigen::VectorXd>(innov.data() + t * points.size(), np).noalias() = factor * eps;
    }
  });

  const double phi = cfg.cloud_persistence;
  const double scale = std::sqrt(1.0 - phi * phi);
  std::vector<double> z(innov.begin(), innov.begin() + np);
  for (std::size_t t = 0; t < n_slots; ++t) {
    for (std::size_t j = 0; j < points.size(); ++j) {
      if (t > 0) z[j] = phi * z[j] + scale * innov[t * points.size() + j];
      field.kc[t * points.size() + j] = std::clamp(cfg.kc_mean + cfg.kc_std * z[j], 0.05, 1.1);
    }
  }
  return field;
}

std::vector<SiteSeries> gen_dataset(const SynthConfig& cfg) {
  const auto sites = gen_sites(cfg);
  return gen_dataset(cfg, sites);
}

std::vector<SiteSeries> gen_dataset(const SynthConfig& cfg, std::span<const SiteSpec> sites) {
  cfg.validate();
  const std::size_t n_sites = sites.size();
  const UtcHour start = make_hour(cfg.first_day, 0);
  const auto n_slots = static_cast<std::size_t>((cfg.last_day - cfg.first_day).count() + 1) * 24;
  const std::size_t n_field = n_slots + kHorizons;  // NWP targets reach past the end

  // Points: sites first, then each site's satellite pixel centre when distinct.
  std::vector<GeoPoint> points;
  std::vector<std::size_t> pixel_point(n_sites);
  for (const auto& s : sites) {
    s.location.validate();
    points.push_back(s.location);
  }
  for (std::size_t i = 0; i < n_sites; ++i) {
    const GeoPoint c = pixel_centre(sites[i].location, cfg);
    if (c == sites[i].location) {
      pixel_point[i] = i;
    } else {
      pixel_point[i] = points.size();
      points.push_back(c);
    }
  }
  const ClearSkyIndexField field = gen_clearsky_index(cfg, points, n_field);

  const std::uint64_t sat_stream = derive_seed(cfg.seed, kSatNoise);
  const std::uint64_t nwp_stream = derive_seed(cfg.seed, kNwpNoise);
  const std::uint64_t temp_stream = derive_seed(cfg.seed, kTempNoise);
  const std::uint64_t humid_stream = derive_seed(cfg.seed, kHumidNoise);
  const std::uint64_t temp_fc_stream = derive_seed(cfg.seed, kTempFcNoise);
  const std::uint64_t humid_fc_stream = derive_seed(cfg.seed, kHumidFcNoise);
  const std::uint64_t miss_streams[4] = {derive_seed(cfg.seed, kMissingGround), derive_seed(cfg.seed, kMissingSat),
                                         derive_seed(cfg.seed, kMissingTemp), derive_seed(cfg.seed, kMissingHumid)};

  std::vector<SiteSeries> out(n_sites);
  parallel_for(n_sites, [&](std::size_t si) {
    SiteSeries& s = out[si];
    s.site_id = sites[si].site_id;
    s.location = sites[si].location;
    s.start = start;
    s.allocate(n_slots, kHorizons);

    std::vector<double> clearsky(n_field);
    std::vector<double> temp_true(n_field), humid_true(n_field);
    for (std::size_t t = 0; t < n_field; ++t) {
      const UtcHour slot = start + static_cast<std::int64_t>(t);
      clearsky[t] = slot_clearsky_ghi(s.location, slot, cfg.linke_turbidity);
      const double kc = field.at(t, si);
      const double season = std::cos(2.0 * std::numbers::pi * (day_of_year(slot) - 20) / 365.0);
      temp_true[t] = 10.0 - 7.0 * season + 6.0 * (clearsky[t] / 800.0) * (kc - 0.3) +
                     1.5 * counter_normal(temp_stream, si, t);
      humid_true[t] =
          std::clamp(78.0 - 25.0 * (kc - cfg.kc_mean) + 6.0 * counter_normal(humid_stream, si, t), 5.0, 100.0);
    }

    for (std::size_t t = 0; t < n_slots; ++t) {
      const double cs = clearsky[t];
      s.clearsky[t] = cs;
      const double kc = field.at(t, si);
      const double ground = cs * kc;
      const double sat_kc = field.at(t, pixel_point[si]);
      const double sat = std::clamp(cs * sat_kc * (1.0 + cfg.sat_noise_rel * counter_normal(sat_stream, si, t)),
                                    0.0, 1.2 * cs);
      if (counter_uniform(miss_streams[0], si, t) >= cfg.missing_rate) s.ground.set(t, ground);
      if (counter_uniform(miss_streams[1], si, t) >= cfg.missing_rate) s.satellite.set(t, sat);
      if (counter_uniform(miss_streams[2], si, t) >= cfg.missing_rate) s.temperature.set(t, temp_true[t]);
      if (counter_uniform(miss_streams[3], si, t) >= cfg.missing_rate) s.humidity.set(t, humid_true[t]);

      for (int p = 1; p <= kHorizons; ++p) {
        const std::size_t target = t + static_cast<std::size_t>(p);
        const double sd = cfg.nwp_noise_base_rel + cfg.nwp_noise_growth_rel * (p - 1);
        const double kc_fc = std::clamp(field.at(target, si) + sd * counter_normal(nwp_stream, si, t, p), 0.0, 1.2);
        s.nwp_ghi.set(t, p, kc_fc * clearsky[target]);
        s.nwp_temperature.set(t, p, temp_true[target] + (0.8 + 0.1 * p) * counter_normal(temp_fc_stream, si, t, p));
        s.nwp_humidity.set(
            t, p, std::clamp(humid_true[target] + (4.0 + 0.5 * p) * counter_normal(humid_fc_stream, si, t, p), 0.0, 100.0));
      }
    }
  });
  return out;
}

}  // namespace solarcast
