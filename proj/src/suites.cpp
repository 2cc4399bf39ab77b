#include "solarcast/suites.hpp"

#include <algorithm>
#include <set>

#include <spdlog/spdlog.h>

#include "solarcast/errors.hpp"
#include "solarcast/parallel.hpp"

namespace solarcast {

PreparedSite prepare_site(const SiteSeries& series, double min_elevation_deg) {
  const Channel required[] = {Channel::ground, Channel::nwp_ghi};
  return {&series, mask_and(elevation_filter(series, min_elevation_deg), drop_incomplete(series, required))};
}

Matrices to_matrices(const SampleSet& set) {
  Matrices m;
  const auto n = static_cast<Eigen::Index>(set.size());
  m.x.resize(static_cast<Eigen::Index>(set.dim), n);
  m.y.resize(kHorizons, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = set.samples[static_cast<std::size_t>(i)];
    m.x.col(i) = Eigen::Map<const Eigen::VectorXd>(s.x.data(), static_cast<Eigen::Index>(s.x.size()));
    m.y.col(i) = Eigen::Map<const Eigen::VectorXd>(s.y.data(), kHorizons);
  }
  return m;
}

std::array<double, kHorizons> NeuralForecaster::predict(std::span<const double> raw_x) const {
  const auto scaled = normalization.transform(raw_x);
  const Eigen::VectorXd out =
      mlp.forward(Eigen::Map<const Eigen::VectorXd>(scaled.data(), static_cast<Eigen::Index>(scaled.size())));
  std::array<double, kHorizons> r{};
  for (int p = 0; p < kHorizons; ++p) r[static_cast<std::size_t>(p)] = out[p];
  return r;
}

Eigen::MatrixXd NeuralForecaster::predict_batch(const SampleSet& raw) const {
  if (raw.normalized) throw ParameterError("predict_batch expects raw samples");
  SampleSet scaled = raw;
  normalization.apply(scaled);
  return mlp.forward_batch(to_matrices(scaled).x);
}

NeuralForecaster train_neural(const SampleSet& train, const SampleSet& validation, const NeuralSettings& settings) {
  if (train.empty() || validation.empty()) throw ParameterError("neural training needs training and validation samples");
  if (train.dim != settings.features.input_dim() || validation.dim != train.dim) {
    throw ParameterError("sample width does not match the feature layout's input dimension");
  }
  NeuralForecaster f;
  f.features = settings.features;
  f.normalization = Normalization::fit(train);
  SampleSet tr = train, va = validation;
  f.normalization.apply(tr);
  f.normalization.apply(va);
  const Matrices mt = to_matrices(tr);
  const Matrices mv = to_matrices(va);
  std::vector<int> layers{static_cast<int>(train.dim)};
  layers.insert(layers.end(), settings.hidden.begin(), settings.hidden.end());
  layers.push_back(kHorizons);
  auto result = mlp_train(mt.x, mt.y, mv.x, mv.y, layers, settings.train);
  f.mlp = std::move(result.model);
  f.trace = std::move(result.trace);
  return f;
}

NeuralForecaster train_global(std::span<const PreparedSite> train_sites, const SplitBoundaries& split,
                              const NeuralSettings& settings) {
  if (train_sites.empty()) throw ParameterError("global training needs at least one training site");
  settings.features.validate();
  if (settings.features.source != LagSource::satellite) {
    throw ParameterError("the global model must take its lags from the satellite channel");
  }
  SampleSet train, val;
  train.dim = val.dim = settings.features.input_dim();
  std::vector<std::string> ids;
  for (const auto& site : train_sites) {
    train.append(build_samples(*site.series, settings.features, site.retained, split.train));
    val.append(build_samples(*site.series, settings.features, site.retained, split.validation));
    ids.push_back(site.series->site_id);
  }
  spdlog::info("global model: {} training / {} validation samples from {} sites", train.size(), val.size(),
               ids.size());
  NeuralForecaster f = train_neural(train, val, settings);
  f.train_sites = std::move(ids);
  return f;
}

std::size_t LocalSuite::model_count() const {
  switch (family) {
    case LocalFamily::linear: return linear.size();
    case LocalFamily::gbt: return gbt.size();
    case LocalFamily::local_mlp: return neural.size();
  }
  return 0;
}

std::array<std::optional<double>, kHorizons> LocalSuite::predict(const Sample& raw) const {
  std::array<std::optional<double>, kHorizons> out;
  if (family == LocalFamily::local_mlp) {
    const auto it = neural.find(raw.site_id);
    if (it == neural.end()) return out;
    const auto y = it->second.predict(raw.x);
    for (std::size_t p = 0; p < y.size(); ++p) out[p] = y[p];
    return out;
  }
  const auto norm = normalization.find(raw.site_id);
  if (norm == normalization.end()) return out;
  const auto x = norm->second.transform(raw.x);
  for (int p = 1; p <= kHorizons; ++p) {
    const LocalKey key{raw.site_id, hour_of_day(raw.issue), p};
    const auto xp = horizon_features(features, x, p);
    if (family == LocalFamily::linear) {
      if (auto it = linear.find(key); it != linear.end()) out[static_cast<std::size_t>(p - 1)] = it->second.predict(xp);
    } else {
      if (auto it = gbt.find(key); it != gbt.end()) out[static_cast<std::size_t>(p - 1)] = it->second.predict(xp);
    }
  }
  return out;
}

namespace {

struct SiteModels {
  Normalization normalization;
  std::vector<std::pair<LocalKey, LinearArxModel>> linear;
  std::vector<std::pair<LocalKey, GbtModel>> gbt;
  std::optional<NeuralForecaster> neural;
  std::vector<LocalKey> untrained;
};

SiteModels train_site_per_hour(const PreparedSite& site, const SplitBoundaries& split, LocalFamily family,
                               const LocalSuiteParams& params) {
  SiteModels out;
  const std::string& id = site.series->site_id;
  SampleSet train = build_samples(*site.series, params.features, site.retained, split.train);
  if (train.empty()) {
    spdlog::warn("site {}: no training samples; no local models", id);
    return out;
  }
  out.normalization = Normalization::fit(train);
  out.normalization.apply(train);

  std::set<int> hours;
  if (params.issue_hours.empty()) {
    for (const auto& s : train.samples) hours.insert(hour_of_day(s.issue));
  } else {
    hours.insert(params.issue_hours.begin(), params.issue_hours.end());
  }

  for (int hour : hours) {
    std::vector<const Sample*> rows;
    for (const auto& s : train.samples) {
      if (hour_of_day(s.issue) == hour) rows.push_back(&s);
    }
    for (int p = 1; p <= kHorizons; ++p) {
      const LocalKey key{id, hour, p};
      const auto idx = horizon_indices(params.features, p);
      Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(idx.size()));
      Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
      for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t j = 0; j < idx.size(); ++j) {
          x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = rows[r]->x[idx[j]];
        }
        y[static_cast<Eigen::Index>(r)] = rows[r]->y[static_cast<std::size_t>(p - 1)];
      }
      try {
        if (family == LocalFamily::linear) {
          out.linear.emplace_back(key, fit_linear_arx(x, y, params.ridge_lambda));
        } else {
          out.gbt.emplace_back(key, fit_gbt(x, y, params.gbt));
        }
      } catch (const Error& e) {
        spdlog::debug("site {} hour {} horizon {}: untrained ({})", id, hour, p, e.what());
        out.untrained.push_back(key);
      }
    }
  }
  return out;
}

}  // namespace

LocalSuite train_local_suite(std::span<const PreparedSite> sites, const SplitBoundaries& split, LocalFamily family,
                             const LocalSuiteParams& params) {
  params.features.validate();
  if (family == LocalFamily::gbt) params.gbt.validate();
  for (const auto& site : sites) {
    if (site.series->ground.count_present() == 0) {
      throw DataError("site " + site.series->site_id + " has no ground measurements for a local model");
    }
  }

  std::vector<SiteModels> per_site(sites.size());
  parallel_for(sites.size(), [&](std::size_t i) {
    const PreparedSite& site = sites[i];
    if (family != LocalFamily::local_mlp) {
      per_site[i] = train_site_per_hour(site, split, family, params);
      return;
    }
    NeuralSettings settings = params.neural;
    settings.features = params.features;
    settings.train.seed = derive_seed(params.neural.train.seed, site.series->site_id);
    const SampleSet train = build_samples(*site.series, settings.features, site.retained, split.train);
    const SampleSet val = build_samples(*site.series, settings.features, site.retained, split.validation);
    if (train.empty() || val.empty()) {
      spdlog::warn("site {}: not enough data for a local network", site.series->site_id);
      return;
    }
    try {
      NeuralForecaster f = train_neural(train, val, settings);
      f.train_sites = {site.series->site_id};
      per_site[i].neural = std::move(f);
    } catch (const TrainingFailure& e) {
      spdlog::warn("site {}: local network failed to train ({})", site.series->site_id, e.what());
    }
  });

  LocalSuite suite;
  suite.family = family;
  suite.features = params.features;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    const std::string& id = sites[i].series->site_id;
    auto& m = per_site[i];
    if (family == LocalFamily::local_mlp) {
      if (m.neural) suite.neural.emplace(id, std::move(*m.neural));
      continue;
    }
    if (!m.linear.empty() || !m.gbt.empty()) suite.normalization.emplace(id, std::move(m.normalization));
    for (auto& [k, v] : m.linear) suite.linear.emplace(k, std::move(v));
    for (auto& [k, v] : m.gbt) suite.gbt.emplace(k, std::move(v));
    suite.untrained.insert(suite.untrained.end(), m.untrained.begin(), m.untrained.end());
  }
  if (!suite.untrained.empty()) {
    spdlog::info("{} suite: {} keys lacked enough samples and stay untrained", to_string(family),
                 suite.untrained.size());
  }
  return suite;
}

std::string to_string(LocalFamily family) {
  switch (family) {
    case LocalFamily::linear: return "linear";
    case LocalFamily::gbt: return "gbt";
    case LocalFamily::local_mlp: return "local-dnn";
  }
  return "?";
}

LocalFamily parse_local_family(const std::string& name) {
  if (name == "linear") return LocalFamily::linear;
  if (name == "gbt") return LocalFamily::gbt;
  if (name == "local-dnn") return LocalFamily::local_mlp;
  throw ConfigError("unknown local model family '" + name + "'");
}

}  // namespace solarcast
