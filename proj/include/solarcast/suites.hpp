#pragma once

#include <array>
#include <compare>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "solarcast/dataset.hpp"
#include "solarcast/features.hpp"
#include "solarcast/gbt.hpp"
#include "solarcast/linear_arx.hpp"
#include "solarcast/mlp.hpp"

namespace solarcast {

inline constexpr double kMinElevationDeg = 3.0;

// A series together with the slots usable as issue hours and targets:
// sun above the elevation threshold, ground measurement and NWP available.
struct PreparedSite {
  const SiteSeries* series = nullptr;
  SlotMask retained;
};

PreparedSite prepare_site(const SiteSeries& series, double min_elevation_deg = kMinElevationDeg);

struct Matrices {
  Eigen::MatrixXd x;  // dim x n
  Eigen::MatrixXd y;  // 6 x n
};
Matrices to_matrices(const SampleSet& set);

struct NeuralSettings {
  FeatureConfig features = FeatureConfig::global_default();
  std::vector<int> hidden{208, 63};
  TrainConfig train;
};

// A trained network with the feature layout and scaling it expects.
struct NeuralForecaster {
  FeatureConfig features;
  Normalization normalization;
  MlpModel mlp;
  std::vector<std::string> train_sites;
  TrainTrace trace;

  // Raw (unscaled) inputs in, W/m^2 out.
  std::array<double, kHorizons> predict(std::span<const double> raw_x) const;
  // 6 x n forecasts for a raw sample set.
  Eigen::MatrixXd predict_batch(const SampleSet& raw) const;
};

NeuralForecaster train_neural(const SampleSet& train, const SampleSet& validation, const NeuralSettings& settings);

// One network for all sites: pooled samples from the training sites'
// training period, early stopping on their validation period.
NeuralForecaster train_global(std::span<const PreparedSite> train_sites, const SplitBoundaries& split,
                              const NeuralSettings& settings);

enum class LocalFamily { linear, gbt, local_mlp };

struct LocalKey {
  std::string site_id;
  int issue_hour = 0;  // UTC hour of day
  int horizon = 1;

  auto operator<=>(const LocalKey&) const = default;
};

struct LocalSuiteParams {
  FeatureConfig features = FeatureConfig::local_default();
  double ridge_lambda = 1e-3;
  GbtParams gbt;
  NeuralSettings neural{FeatureConfig::local_default(), {208, 63}, {}};
  // Issue hours of day that get per-hour models; empty means every hour with data.
  std::vector<int> issue_hours;
};

struct LocalSuite {
  LocalFamily family = LocalFamily::linear;
  FeatureConfig features;
  std::map<std::string, Normalization> normalization;  // per site, linear and GBT
  std::map<LocalKey, LinearArxModel> linear;
  std::map<LocalKey, GbtModel> gbt;
  std::map<std::string, NeuralForecaster> neural;
  std::vector<LocalKey> untrained;

  std::size_t model_count() const;
  // Forecast for one raw sample; entries without a trained model are empty.
  std::array<std::optional<double>, kHorizons> predict(const Sample& raw) const;
};

// Linear and GBT: one model per (site, issue hour, horizon) from the site's
// training period. Local MLP: one 6-output network per site.
LocalSuite train_local_suite(std::span<const PreparedSite> sites, const SplitBoundaries& split, LocalFamily family,
                             const LocalSuiteParams& params);

std::string to_string(LocalFamily family);
LocalFamily parse_local_family(const std::string& name);

}  // namespace solarcast
