#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "solarcast/errors.hpp"
#include "solarcast/synth.hpp"

using namespace solarcast;
using namespace std::chrono;

namespace {

SynthConfig small(std::size_t n_sites = 2, int days = 30) {
  SynthConfig c;
  c.n_sites = n_sites;
  c.first_day = sys_days{2016y / 5 / 1};
  c.last_day = c.first_day + std::chrono::days{days - 1};
  c.seed = 99;
  return c;
}

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

// Narrow index distribution so clipping does not bend the statistics.
SynthConfig unclipped() {
  SynthConfig c = small();
  c.kc_std = 0.05;
  return c;
}

}  // namespace

TEST(Synth, SitesInsideBoxWithStableIds) {
  SynthConfig c;
  const auto sites = gen_sites(c);
  ASSERT_EQ(sites.size(), 30u);
  EXPECT_EQ(sites.front().site_id, "S01");
  EXPECT_EQ(sites.back().site_id, "S30");
  for (const auto& s : sites) {
    EXPECT_GT(s.location.latitude_deg, c.bbox_min.latitude_deg);
    EXPECT_LT(s.location.latitude_deg, c.bbox_max.latitude_deg);
    EXPECT_GT(s.location.longitude_deg, c.bbox_min.longitude_deg);
    EXPECT_LT(s.location.longitude_deg, c.bbox_max.longitude_deg);
  }
}

TEST(Synth, SameSeedSameData) {
  const auto a = gen_dataset(small());
  const auto b = gen_dataset(small());
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].ground, b[i].ground);
    EXPECT_EQ(a[i].satellite, b[i].satellite);
    EXPECT_EQ(a[i].nwp_ghi, b[i].nwp_ghi);
    EXPECT_EQ(a[i].humidity, b[i].humidity);
  }
  SynthConfig other = small();
  other.seed = 100;
  EXPECT_FALSE(gen_dataset(other)[0].ground == a[0].ground);
}

TEST(Synth, DegenerateConfigRejected) {
  SynthConfig c = small();
  c.bbox_max = c.bbox_min;
  EXPECT_THROW(gen_dataset(c), ParameterError);
  c = small();
  c.cloud_persistence = 1.0;
  EXPECT_THROW(c.validate(), ParameterError);
  c = small();
  c.missing_rate = 0.5;
  EXPECT_THROW(c.validate(), ParameterError);
}

TEST(Synth, GroundIsClearSkyTimesIndex) {
  const auto sites = gen_dataset(small(1, 10));
  const auto& s = sites[0];
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!s.ground.has(i)) continue;
    EXPECT_GE(s.ground.value(i), 0.05 * s.clearsky[i] - 1e-9);
    EXPECT_LE(s.ground.value(i), 1.1 * s.clearsky[i] + 1e-9);
  }
}

TEST(Synth, TemporalAutocorrelationMatchesPersistence) {
  for (double phi : {0.0, 0.82}) {
    SynthConfig c = unclipped();
    c.cloud_persistence = phi;
    const std::vector<GeoPoint> pts{{52.0, 5.0}};
    const auto f = gen_clearsky_index(c, pts, 20000);
    std::vector<double> a(f.kc.begin(), f.kc.end() - 1), b(f.kc.begin() + 1, f.kc.end());
    EXPECT_NEAR(correlation(a, b), phi, 0.03) << "phi " << phi;
  }
}

TEST(Synth, SpatialCorrelationDecaysWithDistance) {
  SynthConfig c = unclipped();
  const GeoPoint origin{52.0, 5.0};
  // Roughly 30 and 120 km north.
  const std::vector<GeoPoint> pts{origin, {52.27, 5.0}, {53.08, 5.0}};
  const auto f = gen_clearsky_index(c, pts, 20000);
  std::vector<double> series[3];
  for (std::size_t t = 0; t < f.n_slots; ++t) {
    for (std::size_t j = 0; j < 3; ++j) series[j].push_back(f.at(t, j));
  }
  const double near = correlation(series[0], series[1]);
  const double far = correlation(series[0], series[2]);
  const double d_near = great_circle_km(origin, pts[1]), d_far = great_circle_km(origin, pts[2]);
  EXPECT_NEAR(near, std::exp(-std::pow(d_near / c.spatial_corr_km, 2)), 0.05);
  EXPECT_NEAR(far, std::exp(-std::pow(d_far / c.spatial_corr_km, 2)), 0.05);
  EXPECT_GT(near, far);
}

TEST(Synth, NwpErrorGrowsWithHorizon) {
  SynthConfig c = small(2, 365);
  c.missing_rate = 0.0;
  const auto sites = gen_dataset(c);
  double rmse[kHorizons] = {};
  for (int p = 1; p <= kHorizons; ++p) {
    double se = 0;
    std::size_t n = 0;
    for (const auto& s : sites) {
      for (std::size_t h = 0; h + kHorizons < s.size(); ++h) {
        const std::size_t t = h + static_cast<std::size_t>(p);
        if (s.clearsky[t] < 50.0) continue;
        const double e = (*s.nwp_ghi.latest_for(h, p) - s.ground.value(t)) / s.clearsky[t];
        se += e * e;
        ++n;
      }
    }
    rmse[p - 1] = std::sqrt(se / static_cast<double>(n));
  }
  for (int p = 1; p < kHorizons; ++p) EXPECT_LT(rmse[p - 1], rmse[p]) << "horizon " << p;
}

TEST(Synth, SatelliteUnbiasedAtSitePixel) {
  SynthConfig c = small(2, 120);
  c.sat_pixel_km = 0.0;
  const auto sites = gen_dataset(c);
  double diff = 0, total = 0;
  for (const auto& s : sites) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (!s.ground.has(i) || !s.satellite.has(i)) continue;
      diff += s.satellite.value(i) - s.ground.value(i);
      total += s.ground.value(i);
    }
  }
  EXPECT_LT(std::abs(diff / total), 0.02);
}

TEST(Synth, MissingRateRespected) {
  SynthConfig c = small(2, 200);
  c.missing_rate = 0.05;
  const auto sites = gen_dataset(c);
  for (const auto& s : sites) {
    const double miss = 1.0 - static_cast<double>(s.ground.count_present()) / static_cast<double>(s.size());
    EXPECT_NEAR(miss, 0.05, 0.01);
  }
  c.missing_rate = 0.0;
  for (const auto& s : gen_dataset(c)) EXPECT_EQ(s.satellite.count_present(), s.size());
}

TEST(Synth, AuxChannelsTrackCloudiness) {
  SynthConfig c = small(1, 200);
  const auto s = gen_dataset(c)[0];
  std::vector<double> kc, humid;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.clearsky[i] < 100.0 || !s.ground.has(i) || !s.humidity.has(i)) continue;
    kc.push_back(s.ground.value(i) / s.clearsky[i]);
    humid.push_back(s.humidity.value(i));
  }
  EXPECT_LT(correlation(kc, humid), -0.3);
}
