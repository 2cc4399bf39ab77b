#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "solarcast/dataset.hpp"

namespace solarcast {

enum class LagSource { satellite, ground };

// Which inputs a model sees. The seven `use_*` flags are the feature-selection
// pool; `sat_lags_current` and `sat_daily_lag` shape the irradiance lags,
// which are read from `source` (satellite for the global model, ground for
// local models).
//
// Canonical order of the input vector:
//   nwp ghi      p = 1..6         (use_nwp)
//   clear sky    p = 1..6         (use_clearsky)
//   irradiance   lags 0..L-1      (use_sat)
//   irradiance   h + p - 24       (use_sat && sat_daily_lag)
//   temperature  lags 0..L-1      (use_temp_hist)
//   humidity     lags 0..L-1      (use_humid_hist)
//   nwp temp     p = 1..6         (use_temp_fc)
//   nwp humidity p = 1..6         (use_humid_fc)
struct FeatureConfig {
  bool use_nwp = true;
  bool use_clearsky = true;
  bool use_sat = true;
  bool use_temp_hist = false;
  bool use_humid_hist = false;
  bool use_temp_fc = false;
  bool use_humid_fc = false;
  int sat_lags_current = 4;
  bool sat_daily_lag = true;
  LagSource source = LagSource::satellite;

  // Throws ParameterError: no input selected, or L outside [1, 6].
  void validate() const;
  std::size_t input_dim() const;
  std::vector<std::string> feature_names() const;

  bool operator==(const FeatureConfig&) const = default;

  // NWP + clear sky + satellite lags 0..3 + daily lags: 22 inputs.
  static FeatureConfig global_default();
  // Same layout fed from ground measurements.
  static FeatureConfig local_default();
};

enum class FeatureKind { nwp_ghi, clearsky, irradiance, temperature, humidity, nwp_temperature, nwp_humidity };

// Where one input comes from. For observed kinds `offset` is the slot
// relative to the issue hour and is always <= 0; forecast kinds and the clear
// sky refer to h + horizon.
struct FeatureSource {
  FeatureKind kind;
  int offset;
  int horizon;  // 1..6 for per-horizon inputs, 0 for inputs shared by all horizons
};

std::vector<FeatureSource> feature_sources(const FeatureConfig& cfg);

struct Sample {
  std::vector<double> x;
  std::array<double, kHorizons> y{};  // ground GHI at h+1..h+6
  std::string site_id;
  UtcHour issue;
};

struct SampleSet {
  std::vector<Sample> samples;
  std::size_t dim = 0;
  std::size_t skipped = 0;  // retained issue hours without a complete window
  bool normalized = false;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  void append(SampleSet&& other);
};

// One sample per retained issue hour h (optionally restricted to a day range)
// whose six targets are retained and whose inputs are all available. Lags and
// forecasts need only be present; the retained mask governs h and targets.
SampleSet build_samples(const SiteSeries& series, const FeatureConfig& cfg, const SlotMask& retained,
                        std::optional<DateRange> issue_days = std::nullopt);

// Per-feature standardisation fitted on training samples.
struct Normalization {
  std::vector<double> mean;
  std::vector<double> scale;  // 1 for zero-variance features

  static Normalization fit(const SampleSet& train);
  // Throws ParameterError when the set was already normalized.
  void apply(SampleSet& set) const;
  std::vector<double> transform(std::span<const double> x) const;
};

// Subset of a full input vector used by per-horizon models: shared inputs plus
// the entries that belong to horizon p.
std::vector<double> horizon_features(const FeatureConfig& cfg, std::span<const double> x, int p);
std::size_t horizon_dim(const FeatureConfig& cfg);
// Positions within the full input vector that horizon_features(cfg, x, p) keeps.
std::vector<std::size_t> horizon_indices(const FeatureConfig& cfg, int p);

}  // namespace solarcast
