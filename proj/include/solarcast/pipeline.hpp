#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "solarcast/hyperopt.hpp"
#include "solarcast/metrics.hpp"
#include "solarcast/model_io.hpp"
#include "solarcast/suites.hpp"
#include "solarcast/synth.hpp"

namespace solarcast {

// Model names accepted by train / evaluate. "nwp" is the raw forecast used
// as a benchmark; it has no parameters, like persistence.
inline const std::vector<std::string> kAllModels{"global-dnn", "linear", "gbt", "local-dnn", "persistence", "nwp"};

struct SearchSettings {
  int trials = 50;
  int max_epochs = 150;  // reduced training budget per neural trial
  TpeParams tpe;
};

struct RunConfig {
  SynthConfig synth;
  std::optional<std::filesystem::path> observations_csv;  // default: <out>/data/observations.csv
  std::optional<std::filesystem::path> nwp_csv;           // default: <out>/data/nwp.csv
  SplitBoundaries split = SplitBoundaries::paper_default();
  std::vector<std::string> train_sites;  // explicit partition; empty picks n_train_sites at random
  std::size_t n_train_sites = 5;
  NeuralSettings global;
  NeuralSettings local_dnn{FeatureConfig::local_default(), {208, 63}, {}};
  FeatureConfig local_features = FeatureConfig::local_default();
  double ridge_lambda = 1e-3;
  GbtParams gbt;
  std::vector<int> issue_hours;  // per-hour local models; empty means every hour
  SearchSettings search;
  std::vector<std::string> models = kAllModels;
  std::filesystem::path out = "run";
  std::uint64_t seed = 20170101;
  int threads = 1;
  std::size_t skill_window = kSkillWindow;
  double min_elevation_deg = kMinElevationDeg;

  // Throws ConfigError on unknown keys, wrong types or invalid values.
  static RunConfig from_json(const Json& j);
  Json to_json() const;
  void validate() const;
};

RunConfig load_run_config(const std::filesystem::path& path);

Json synth_to_json(const SynthConfig& cfg);
SynthConfig synth_from_json(const Json& j);

// Seed of a named stream derived from the run seed.
std::uint64_t stream_seed(const RunConfig& cfg, const std::string& label);

// Loaded data with the site partition and per-site retained masks.
struct Workspace {
  std::vector<SiteSeries> sites;
  std::vector<PreparedSite> prepared;  // parallel to `sites`
  SitePartition partition;
  std::uint64_t partition_hash = 0;

  std::vector<PreparedSite> select(const std::vector<std::string>& ids) const;
};

Workspace load_workspace(const RunConfig& cfg);
SitePartition choose_partition(const RunConfig& cfg, std::span<const SiteSeries> sites);
std::uint64_t partition_hash(const SitePartition& p);

// Forecasts per (site, issue hour); a horizon is empty when the model could
// not produce it.
using ForecastMap = std::map<std::pair<std::string, UtcHour>, std::array<std::optional<double>, kHorizons>>;

ForecastMap forecast_persistence(std::span<const PreparedSite> sites, const DateRange& days);
ForecastMap forecast_nwp(std::span<const PreparedSite> sites, const DateRange& days);
ForecastMap forecast_neural(const NeuralForecaster& model, std::span<const PreparedSite> sites, const DateRange& days);
ForecastMap forecast_local(const LocalSuite& suite, std::span<const PreparedSite> sites, const DateRange& days);

// Records for the (site, issue, horizon) keys every model can forecast,
// ordered by site, issue time and horizon. Negative forecasts are clipped to 0.
ModelRecords build_records(const std::vector<std::pair<std::string, ForecastMap>>& forecasts,
                           std::span<const PreparedSite> sites, const DateRange& days);

// Applies a search point onto training settings; absent keys leave fields alone.
void apply_point(const HyperPoint& p, FeatureConfig& features);
void apply_point(const HyperPoint& p, NeuralSettings& settings);
HyperPoint table1_point();

SearchSpace search_space(const std::string& family);

void cmd_gen_data(const RunConfig& cfg);
SmboResult cmd_hypersearch(const RunConfig& cfg, const std::string& family, bool restart);
void cmd_train(const RunConfig& cfg, const std::string& family);
EvalReport cmd_evaluate(const RunConfig& cfg, const std::vector<std::string>& models);
// Recomputes the report tables from the stored evaluation records.
std::string cmd_report(const RunConfig& cfg);

void write_records_csv(const ModelRecords& records, const std::filesystem::path& path);
ModelRecords read_records_csv(const std::filesystem::path& path);

}  // namespace solarcast
