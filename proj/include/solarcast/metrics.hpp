#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "solarcast/time.hpp"

namespace solarcast {

inline constexpr std::size_t kSkillWindow = 200;

struct EvalRecord {
  std::string site_id;
  UtcHour issue;
  int horizon = 1;
  double y_true = 0.0;
  double y_pred = 0.0;
  double clearsky_at_target = 0.0;
  // k_c(h + p) - k_c(h), with k_c(h) as used by the persistence forecast.
  double clearsky_index_step = 0.0;
};

// 100 * RMSE / mean(y). Throws UndefinedMetric when mean(y) <= 0 or no records.
double rrmse(std::span<const EvalRecord> records);
// mean(y - y_pred), W/m^2. Throws UndefinedMetric on no records.
double mbe(std::span<const EvalRecord> records);

struct SkillResult {
  double skill = 0.0;  // percent
  std::size_t windows = 0;
  std::size_t skipped_windows = 0;  // V = 0
  std::size_t records = 0;          // records that entered U and V
};

// s = 1 - U/V per window. Records are grouped into (site, horizon) series in
// input order, each series is cut into disjoint windows of `window` records
// (a trailing remainder of at least two records forms a last window), slots
// with clear sky <= 1 W/m^2 are left out of both U and V, and the window
// scores are averaged with weights equal to their record counts. Throws
// UndefinedMetric when no window has V > 0.
SkillResult forecast_skill(std::span<const EvalRecord> records, std::size_t window = kSkillWindow);

struct CellMetrics {
  std::size_t n = 0;
  double mean_y = 0.0;
  std::optional<double> rrmse;
  double mbe = 0.0;
  std::optional<double> skill;
};

CellMetrics compute_cell(std::span<const EvalRecord> records, std::size_t window = kSkillWindow);

struct ModelReport {
  CellMetrics overall;
  std::map<int, CellMetrics> by_horizon;
  std::map<std::string, CellMetrics> by_site;
  std::map<std::pair<std::string, int>, CellMetrics> cells;
  // Per-site rRMSE histogram: (bin start %, count), 0.5 % bins, contiguous.
  std::vector<std::pair<double, std::size_t>> histogram;
};

using ModelRecords = std::vector<std::pair<std::string, std::vector<EvalRecord>>>;

struct EvalReport {
  std::vector<std::string> models;  // input order
  std::map<std::string, ModelReport> per_model;
};

inline constexpr double kHistogramBin = 0.5;

std::vector<std::pair<double, std::size_t>> rrmse_histogram(const std::vector<double>& values,
                                                            double bin = kHistogramBin);

// Every figure is recomputed from the records: pooled for overall and the
// marginal tables, never averaged from cells.
EvalReport aggregate_report(const ModelRecords& records, std::size_t window = kSkillWindow);

// cells.csv (model, site, horizon), by_horizon.csv, by_site.csv, summary.json
// and histogram_<model>.csv.
void write_report(const EvalReport& report, const std::filesystem::path& dir);

// Plain-text overview: overall table, rRMSE by horizon, best model per site.
std::string format_report(const EvalReport& report);

}  // namespace solarcast
