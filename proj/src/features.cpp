#include "solarcast/features.hpp"

#include <cmath>

#include <spdlog/spdlog.h>

#include "solarcast/errors.hpp"

namespace solarcast {

void FeatureConfig::validate() const {
  if (!(use_nwp || use_clearsky || use_sat || use_temp_hist || use_humid_hist || use_temp_fc || use_humid_fc)) {
    throw ParameterError("feature config selects no inputs");
  }
  if (sat_lags_current < 1 || sat_lags_current > 6) {
    throw ParameterError("sat_lags_current must lie in [1, 6]");
  }
}

std::vector<FeatureSource> feature_sources(const FeatureConfig& cfg) {
  std::vector<FeatureSource> out;
  const int lags = cfg.sat_lags_current;
  auto per_horizon = [&](FeatureKind kind) {
    for (int p = 1; p <= kHorizons; ++p) out.push_back({kind, p, p});
  };
  auto current_lags = [&](FeatureKind kind) {
    for (int k = 0; k < lags; ++k) out.push_back({kind, -k, 0});
  };
  if (cfg.use_nwp) per_horizon(FeatureKind::nwp_ghi);
  if (cfg.use_clearsky) per_horizon(FeatureKind::clearsky);
  if (cfg.use_sat) {
    current_lags(FeatureKind::irradiance);
    if (cfg.sat_daily_lag) {
      for (int p = 1; p <= kHorizons; ++p) out.push_back({FeatureKind::irradiance, p - 24, p});
    }
  }
  if (cfg.use_temp_hist) current_lags(FeatureKind::temperature);
  if (cfg.use_humid_hist) current_lags(FeatureKind::humidity);
  if (cfg.use_temp_fc) per_horizon(FeatureKind::nwp_temperature);
  if (cfg.use_humid_fc) per_horizon(FeatureKind::nwp_humidity);
  return out;
}

std::size_t FeatureConfig::input_dim() const { return feature_sources(*this).size(); }

std::vector<std::string> FeatureConfig::feature_names() const {
  std::vector<std::string> names;
  const std::string src = source == LagSource::satellite ? "sat" : "ground";
  for (const auto& f : feature_sources(*this)) {
    switch (f.kind) {
      case FeatureKind::nwp_ghi: names.push_back("nwp_ghi_p" + std::to_string(f.horizon)); break;
      case FeatureKind::clearsky: names.push_back("clearsky_p" + std::to_string(f.horizon)); break;
      case FeatureKind::irradiance:
        names.push_back(f.horizon == 0 ? src + "_lag" + std::to_string(-f.offset)
                                       : src + "_daily_p" + std::to_string(f.horizon));
        break;
      case FeatureKind::temperature: names.push_back("temp_lag" + std::to_string(-f.offset)); break;
      case FeatureKind::humidity: names.push_back("humidity_lag" + std::to_string(-f.offset)); break;
      case FeatureKind::nwp_temperature: names.push_back("nwp_temp_p" + std::to_string(f.horizon)); break;
      case FeatureKind::nwp_humidity: names.push_back("nwp_humidity_p" + std::to_string(f.horizon)); break;
    }
  }
  return names;
}

FeatureConfig FeatureConfig::global_default() { return FeatureConfig{}; }

FeatureConfig FeatureConfig::local_default() {
  FeatureConfig cfg;
  cfg.source = LagSource::ground;
  return cfg;
}

void SampleSet::append(SampleSet&& other) {
  if (samples.empty() && dim == 0) dim = other.dim;
  if (other.dim != dim && !other.samples.empty()) throw ParameterError("appending samples of different width");
  if (other.normalized != normalized && !other.samples.empty() && !samples.empty()) {
    throw ParameterError("mixing normalized and raw samples");
  }
  if (samples.empty()) normalized = other.normalized;
  samples.insert(samples.end(), std::make_move_iterator(other.samples.begin()),
                 std::make_move_iterator(other.samples.end()));
  skipped += other.skipped;
}

namespace {

// Reads an observed value strictly at or before the issue hour.
std::optional<double> observed(const MaybeSeries& channel, std::size_t h, int offset) {
  if (offset > 0) throw std::logic_error("observation lookup after the issue hour");
  if (static_cast<std::size_t>(-offset) > h) return std::nullopt;
  return channel[h - static_cast<std::size_t>(-offset)];
}

}  // namespace

SampleSet build_samples(const SiteSeries& s, const FeatureConfig& cfg, const SlotMask& retained,
                        std::optional<DateRange> issue_days) {
  cfg.validate();
  if (retained.size() != s.size()) throw ParameterError("retained mask does not match series length");
  const auto sources = feature_sources(cfg);
  const MaybeSeries& lag_channel = cfg.source == LagSource::satellite ? s.satellite : s.ground;

  SampleSet out;
  out.dim = sources.size();
  for (std::size_t h = 0; h < s.size(); ++h) {
    if (!retained[h]) continue;
    if (issue_days) {
      const auto day = day_of(s.timestamp(h));
      if (day < issue_days->first || day > issue_days->last) continue;
    }
    if (h + kHorizons >= s.size()) {
      ++out.skipped;
      continue;
    }
    Sample sample;
    bool ok = true;
    for (int p = 1; p <= kHorizons && ok; ++p) {
      const std::size_t t = h + static_cast<std::size_t>(p);
      ok = retained[t] && s.ground.has(t);
      if (ok) sample.y[static_cast<std::size_t>(p - 1)] = s.ground.value(t);
    }
    sample.x.reserve(sources.size());
    for (const auto& f : sources) {
      if (!ok) break;
      std::optional<double> v;
      switch (f.kind) {
        case FeatureKind::nwp_ghi: v = s.nwp_ghi.latest_for(h, f.offset); break;
        case FeatureKind::clearsky: v = s.clearsky[h + static_cast<std::size_t>(f.offset)]; break;
        case FeatureKind::irradiance: v = observed(lag_channel, h, f.offset); break;
        case FeatureKind::temperature: v = observed(s.temperature, h, f.offset); break;
        case FeatureKind::humidity: v = observed(s.humidity, h, f.offset); break;
        case FeatureKind::nwp_temperature: v = s.nwp_temperature.latest_for(h, f.offset); break;
        case FeatureKind::nwp_humidity: v = s.nwp_humidity.latest_for(h, f.offset); break;
      }
      if (v) {
        sample.x.push_back(*v);
      } else {
        ok = false;
      }
    }
    if (!ok) {
      ++out.skipped;
      continue;
    }
    sample.site_id = s.site_id;
    sample.issue = s.timestamp(h);
    out.samples.push_back(std::move(sample));
  }
  if (out.skipped > 0) {
    spdlog::debug("{}: {} retained issue hours lacked a complete input/target window", s.site_id, out.skipped);
  }
  return out;
}

Normalization Normalization::fit(const SampleSet& train) {
  if (train.empty()) throw ParameterError("cannot fit normalization on an empty sample set");
  if (train.normalized) throw ParameterError("normalization must be fitted on raw samples");
  const std::size_t d = train.dim;
  Normalization n;
  n.mean.assign(d, 0.0);
  n.scale.assign(d, 1.0);
  const double count = static_cast<double>(train.size());
  for (const auto& s : train.samples) {
    for (std::size_t j = 0; j < d; ++j) n.mean[j] += s.x[j];
  }
  for (auto& m : n.mean) m /= count;
  std::vector<double> var(d, 0.0);
  for (const auto& s : train.samples) {
    for (std::size_t j = 0; j < d; ++j) var[j] += (s.x[j] - n.mean[j]) * (s.x[j] - n.mean[j]);
  }
  for (std::size_t j = 0; j < d; ++j) {
    const double sd = std::sqrt(var[j] / count);
    if (sd > 1e-12 * std::max(1.0, std::abs(n.mean[j]))) {
      n.scale[j] = sd;
    } else {
      spdlog::warn("feature {} has zero variance; passing it through unscaled", j);
      n.mean[j] = 0.0;
      n.scale[j] = 1.0;
    }
  }
  return n;
}

void Normalization::apply(SampleSet& set) const {
  if (set.normalized) throw ParameterError("sample set is already normalized");
  if (set.dim != mean.size() && !set.empty()) throw ParameterError("normalization width mismatch");
  for (auto& s : set.samples) {
    for (std::size_t j = 0; j < s.x.size(); ++j) s.x[j] = (s.x[j] - mean[j]) / scale[j];
  }
  set.normalized = true;
}

std::vector<double> Normalization::transform(std::span<const double> x) const {
  if (x.size() != mean.size()) throw ParameterError("normalization width mismatch");
  std::vector<double> out(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) out[j] = (x[j] - mean[j]) / scale[j];
  return out;
}

std::vector<double> horizon_features(const FeatureConfig& cfg, std::span<const double> x, int p) {
  const auto sources = feature_sources(cfg);
  if (x.size() != sources.size()) throw ParameterError("input width does not match feature config");
  std::vector<double> out;
  for (std::size_t j = 0; j < sources.size(); ++j) {
    if (sources[j].horizon == 0 || sources[j].horizon == p) out.push_back(x[j]);
  }
  return out;
}

std::vector<std::size_t> horizon_indices(const FeatureConfig& cfg, int p) {
  const auto sources = feature_sources(cfg);
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < sources.size(); ++j) {
    if (sources[j].horizon == 0 || sources[j].horizon == p) out.push_back(j);
  }
  return out;
}

std::size_t horizon_dim(const FeatureConfig& cfg) {
  std::size_t n = 0;
  for (const auto& f : feature_sources(cfg)) n += (f.horizon == 0 || f.horizon == 1);
  return n;
}

}  // namespace solarcast
