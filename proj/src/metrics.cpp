#include "solarcast/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "solarcast/errors.hpp"
#include "solarcast/persistence.hpp"

namespace solarcast {

double rrmse(std::span<const EvalRecord> records) {
  if (records.empty()) throw UndefinedMetric("rRMSE of an empty record set");
  double se = 0.0, sy = 0.0;
  for (const auto& r : records) {
    const double e = r.y_true - r.y_pred;
    se += e * e;
    sy += r.y_true;
  }
  const double n = static_cast<double>(records.size());
  const double mean = sy / n;
  if (!(mean > 0.0)) throw UndefinedMetric("rRMSE undefined: mean observed irradiance is not positive");
  return 100.0 * std::sqrt(se / n) / mean;
}

double mbe(std::span<const EvalRecord> records) {
  if (records.empty()) throw UndefinedMetric("MBE of an empty record set");
  double s = 0.0;
  for (const auto& r : records) s += r.y_true - r.y_pred;
  return s / static_cast<double>(records.size());
}

SkillResult forecast_skill(std::span<const EvalRecord> records, std::size_t window) {
  if (window < 2) throw ParameterError("skill window must hold at least two records");
  std::map<std::pair<std::string, int>, std::vector<const EvalRecord*>> series;
  for (const auto& r : records) series[{r.site_id, r.horizon}].push_back(&r);

  SkillResult out;
  double weighted = 0.0;
  for (const auto& [key, recs] : series) {
    for (std::size_t start = 0; start < recs.size(); start += window) {
      const std::size_t end = std::min(recs.size(), start + window);
      if (end - start < 2) break;
      double su = 0.0, sv = 0.0;
      std::size_t n = 0;
      for (std::size_t i = start; i < end; ++i) {
        const EvalRecord& r = *recs[i];
        if (r.clearsky_at_target <= kClearSkyEpsilon) continue;
        const double u = (r.y_pred - r.y_true) / r.clearsky_at_target;
        su += u * u;
        sv += r.clearsky_index_step * r.clearsky_index_step;
        ++n;
      }
      if (n == 0 || sv == 0.0) {
        spdlog::debug("skill: window of {} / {} skipped (no variability)", key.first, key.second);
        ++out.skipped_windows;
        continue;
      }
      const double s = 1.0 - std::sqrt(su / static_cast<double>(n)) / std::sqrt(sv / static_cast<double>(n));
      weighted += s * static_cast<double>(n);
      out.records += n;
      ++out.windows;
    }
  }
  if (out.windows == 0) throw UndefinedMetric("forecast skill undefined: no window with clear-sky index variability");
  out.skill = 100.0 * weighted / static_cast<double>(out.records);
  return out;
}

CellMetrics compute_cell(std::span<const EvalRecord> records, std::size_t window) {
  CellMetrics c;
  c.n = records.size();
  if (records.empty()) return c;
  double sy = 0.0;
  for (const auto& r : records) sy += r.y_true;
  c.mean_y = sy / static_cast<double>(c.n);
  c.mbe = mbe(records);
  try {
    c.rrmse = rrmse(records);
  } catch (const UndefinedMetric&) {
  }
  try {
    c.skill = forecast_skill(records, window).skill;
  } catch (const UndefinedMetric&) {
  }
  return c;
}

std::vector<std::pair<double, std::size_t>> rrmse_histogram(const std::vector<double>& values, double bin) {
  std::vector<std::pair<double, std::size_t>> out;
  if (values.empty()) return out;
  std::map<long, std::size_t> counts;
  for (double v : values) ++counts[static_cast<long>(std::floor(v / bin))];
  for (long b = counts.begin()->first; b <= counts.rbegin()->first; ++b) {
    const auto it = counts.find(b);
    out.emplace_back(static_cast<double>(b) * bin, it == counts.end() ? 0 : it->second);
  }
  return out;
}

EvalReport aggregate_report(const ModelRecords& records, std::size_t window) {
  EvalReport report;
  for (const auto& [model, recs] : records) {
    if (recs.empty()) throw ParameterError("model '" + model + "' has no evaluation records");
    report.models.push_back(model);
    ModelReport m;
    m.overall = compute_cell(recs, window);
    std::map<int, std::vector<EvalRecord>> by_h;
    std::map<std::string, std::vector<EvalRecord>> by_s;
    std::map<std::pair<std::string, int>, std::vector<EvalRecord>> cells;
    for (const auto& r : recs) {
      by_h[r.horizon].push_back(r);
      by_s[r.site_id].push_back(r);
      cells[{r.site_id, r.horizon}].push_back(r);
    }
    for (const auto& [h, v] : by_h) m.by_horizon[h] = compute_cell(v, window);
    std::vector<double> site_rrmse;
    for (const auto& [s, v] : by_s) {
      m.by_site[s] = compute_cell(v, window);
      if (m.by_site[s].rrmse) site_rrmse.push_back(*m.by_site[s].rrmse);
    }
    for (const auto& [k, v] : cells) m.cells[k] = compute_cell(v, window);
    m.histogram = rrmse_histogram(site_rrmse);
    report.per_model.emplace(model, std::move(m));
  }
  return report;
}

namespace {

// Values that print as zero lose their sign.
double unsigned_zero(double v, double resolution) { return std::abs(v) < 0.5 * resolution ? 0.0 : v; }

std::string num(double v) { return fmt::format("{:.6f}", unsigned_zero(v, 1e-6)); }
std::string num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

nlohmann::json cell_json(const CellMetrics& c) {
  nlohmann::json j;
  j["n"] = c.n;
  j["mean_y"] = std::stod(num(c.mean_y));
  j["rrmse"] = c.rrmse ? nlohmann::json(std::stod(num(c.rrmse))) : nlohmann::json(nullptr);
  j["mbe"] = std::stod(num(c.mbe));
  j["skill"] = c.skill ? nlohmann::json(std::stod(num(c.skill))) : nlohmann::json(nullptr);
  return j;
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw DataError("cannot write " + p.string());
  return out;
}

template <typename Key>
std::optional<std::string> best_model(const EvalReport& r, const std::map<Key, CellMetrics> ModelReport::*table,
                                      const Key& key) {
  std::optional<std::string> best;
  double best_v = std::numeric_limits<double>::infinity();
  for (const auto& m : r.models) {
    const auto& t = r.per_model.at(m).*table;
    const auto it = t.find(key);
    if (it == t.end() || !it->second.rrmse) continue;
    if (*it->second.rrmse < best_v) {
      best_v = *it->second.rrmse;
      best = m;
    }
  }
  return best;
}

}  // namespace

void write_report(const EvalReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    auto out = open_out(dir / "cells.csv");
    out << "model,site_id,horizon,n,rrmse_pct,mbe_wm2,skill_pct\n";
    for (const auto& m : report.models) {
      for (const auto& [k, c] : report.per_model.at(m).cells) {
        out << m << ',' << k.first << ',' << k.second << ',' << c.n << ',' << num(c.rrmse) << ',' << num(c.mbe)
            << ',' << num(c.skill) << '\n';
      }
    }
  }
  {
    auto out = open_out(dir / "by_horizon.csv");
    out << "model,horizon,n,rrmse_pct,mbe_wm2,skill_pct\n";
    for (const auto& m : report.models) {
      for (const auto& [h, c] : report.per_model.at(m).by_horizon) {
        out << m << ',' << h << ',' << c.n << ',' << num(c.rrmse) << ',' << num(c.mbe) << ',' << num(c.skill) << '\n';
      }
    }
  }
  {
    auto out = open_out(dir / "by_site.csv");
    out << "model,site_id,n,rrmse_pct,mbe_wm2,skill_pct\n";
    for (const auto& m : report.models) {
      for (const auto& [s, c] : report.per_model.at(m).by_site) {
        out << m << ',' << s << ',' << c.n << ',' << num(c.rrmse) << ',' << num(c.mbe) << ',' << num(c.skill) << '\n';
      }
    }
  }
  nlohmann::json summary;
  summary["models"] = report.models;
  for (const auto& m : report.models) {
    const auto& mr = report.per_model.at(m);
    summary["overall"][m] = cell_json(mr.overall);
    for (const auto& [h, c] : mr.by_horizon) summary["by_horizon"][std::to_string(h)][m] = cell_json(c);
    for (const auto& [s, c] : mr.by_site) summary["by_site"][s][m] = cell_json(c);
    auto out = open_out(dir / ("histogram_" + m + ".csv"));
    out << "bin_start_pct,count\n";
    for (const auto& [b, n] : mr.histogram) out << fmt::format("{:.1f}", b) << ',' << n << '\n';
  }
  if (summary.contains("by_horizon")) {
    for (auto& [h, row] : summary["by_horizon"].items()) {
      const auto best = best_model(report, &ModelReport::by_horizon, std::stoi(h));
      row["best"] = best ? nlohmann::json(*best) : nlohmann::json(nullptr);
    }
  }
  if (summary.contains("by_site")) {
    for (auto& [s, row] : summary["by_site"].items()) {
      const auto best = best_model(report, &ModelReport::by_site, s);
      row["best"] = best ? nlohmann::json(*best) : nlohmann::json(nullptr);
    }
  }
  auto out = open_out(dir / "summary.json");
  out << summary.dump(2) << '\n';
}

std::string format_report(const EvalReport& report) {
  std::string s;
  auto opt = [](const std::optional<double>& v) {
    return v ? fmt::format("{:8.2f}", unsigned_zero(*v, 0.01)) : std::string("       -");
  };
  s += fmt::format("{:<12}{:>8}{:>8}{:>8}\n", "model", "rRMSE%", "s%", "MBE");
  for (const auto& m : report.models) {
    const auto& c = report.per_model.at(m).overall;
    s += fmt::format("{:<12}{}{}{}\n", m, opt(c.rrmse), opt(c.skill), opt(c.mbe));
  }
  s += "\nrRMSE % by horizon\n";
  s += fmt::format("{:<12}", "model");
  for (int h = 1; h <= 6; ++h) s += fmt::format("{:>8}", fmt::format("{}h", h));
  s += '\n';
  for (const auto& m : report.models) {
    s += fmt::format("{:<12}", m);
    const auto& t = report.per_model.at(m).by_horizon;
    for (int h = 1; h <= 6; ++h) {
      const auto it = t.find(h);
      s += it == t.end() ? std::string("       -") : opt(it->second.rrmse);
    }
    s += '\n';
  }
  s += "\nbest model per site (rRMSE %)\n";
  if (!report.models.empty()) {
    for (const auto& [site, c] : report.per_model.at(report.models.front()).by_site) {
      const auto best = best_model(report, &ModelReport::by_site, site);
      if (!best) continue;
      s += fmt::format("{:<8}{:<12}{}\n", site, *best, opt(report.per_model.at(*best).by_site.at(site).rrmse));
    }
  }
  return s;
}

}  // namespace solarcast
