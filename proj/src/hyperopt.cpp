#include "solarcast/hyperopt.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "solarcast/errors.hpp"

namespace solarcast {

using Json = nlohmann::json;

Dimension Dimension::integer(std::string name, int low, int high) {
  return {std::move(name), DimKind::integer, static_cast<double>(low), static_cast<double>(high), {}, {}, 0.0};
}
Dimension Dimension::uniform(std::string name, double low, double high) {
  return {std::move(name), DimKind::uniform, low, high, {}, {}, 0.0};
}
Dimension Dimension::log_uniform(std::string name, double low, double high) {
  return {std::move(name), DimKind::log_uniform, low, high, {}, {}, 0.0};
}
Dimension Dimension::categorical(std::string name, std::vector<double> choices) {
  return {std::move(name), DimKind::categorical, 0.0, 0.0, std::move(choices), {}, 0.0};
}

Dimension& Dimension::when(std::string parent_name, double min_value) {
  parent = std::move(parent_name);
  parent_min = min_value;
  return *this;
}

bool Dimension::contains(double v) const {
  if (!std::isfinite(v)) return false;
  switch (kind) {
    case DimKind::categorical: return std::find(choices.begin(), choices.end(), v) != choices.end();
    case DimKind::integer: return v == std::round(v) && v >= low && v <= high;
    default: return v >= low && v <= high;
  }
}

void SearchSpace::validate() const {
  if (dimensions.empty()) throw ParameterError("search space has no dimensions");
  std::set<std::string> seen;
  for (const auto& d : dimensions) {
    if (!seen.insert(d.name).second) throw ParameterError("duplicate dimension '" + d.name + "'");
    if (!d.parent.empty() && (d.parent == d.name || !seen.count(d.parent))) {
      throw ParameterError("dimension '" + d.name + "' must follow its parent '" + d.parent + "'");
    }
    if (d.kind == DimKind::categorical) {
      if (d.choices.empty()) throw ParameterError("categorical dimension '" + d.name + "' has no choices");
      continue;
    }
    const bool ordered = d.kind == DimKind::integer ? d.low <= d.high : d.low < d.high;
    if (!ordered || !std::isfinite(d.low) || !std::isfinite(d.high)) {
      throw ParameterError("dimension '" + d.name + "' has an empty range");
    }
    if (d.kind == DimKind::log_uniform && d.low <= 0.0) {
      throw ParameterError("log-scale dimension '" + d.name + "' needs positive bounds");
    }
    if (d.kind == DimKind::integer && (d.low != std::round(d.low) || d.high != std::round(d.high))) {
      throw ParameterError("integer dimension '" + d.name + "' needs integral bounds");
    }
  }
}

bool SearchSpace::active(const Dimension& d, const HyperPoint& partial) const {
  if (d.parent.empty()) return true;
  const auto it = partial.find(d.parent);
  return it != partial.end() && it->second >= d.parent_min;
}

bool SearchSpace::contains(const HyperPoint& p) const {
  std::size_t used = 0;
  for (const auto& d : dimensions) {
    const auto it = p.find(d.name);
    if (active(d, p)) {
      if (it == p.end() || !d.contains(it->second)) return false;
      ++used;
    } else if (it != p.end()) {
      return false;
    }
  }
  return used == p.size();
}

bool SearchSpace::discrete() const {
  return std::all_of(dimensions.begin(), dimensions.end(), [](const Dimension& d) { return d.discrete(); });
}

std::uint64_t SearchSpace::hash() const {
  Json j = Json::array();
  for (const auto& d : dimensions) {
    j.push_back({d.name, static_cast<int>(d.kind), d.low, d.high, d.choices, d.parent, d.parent_min});
  }
  return fnv1a(j.dump());
}

SearchSpace SearchSpace::paper_default() {
  SearchSpace s;
  auto& d = s.dimensions;
  d.push_back(Dimension::integer("hidden_layers", 1, 4));
  d.push_back(Dimension::integer("neurons_1", 100, 400));
  d.push_back(Dimension::integer("neurons_2", 50, 150).when("hidden_layers", 2));
  d.push_back(Dimension::integer("neurons_3", 25, 100).when("hidden_layers", 3));
  d.push_back(Dimension::integer("neurons_4", 10, 50).when("hidden_layers", 4));
  d.push_back(Dimension::log_uniform("learning_rate", 1e-4, 1e-2));
  d.push_back(Dimension::uniform("dropout", 0.0, 1.0));
  for (const char* flag : {"use_nwp", "use_clearsky", "use_sat", "use_temp_hist", "use_humid_hist", "use_temp_fc",
                           "use_humid_fc"}) {
    d.push_back(Dimension::categorical(flag, {0.0, 1.0}));
  }
  d.push_back(Dimension::integer("sat_lags_current", 1, 6));
  d.push_back(Dimension::categorical("sat_daily_lag", {0.0, 1.0}));
  return s;
}

const Trial& TrialHistory::best() const {
  if (trials.empty()) throw ParameterError("empty trial history");
  const Trial* best = &trials.front();
  for (const auto& t : trials) {
    if (t.performance < best->performance) best = &t;
  }
  return *best;
}

namespace {

double sample_dimension_uniform(const Dimension& d, Rng& rng) {
  switch (d.kind) {
    case DimKind::integer:
      return static_cast<double>(rng.uniform_int(static_cast<std::int64_t>(d.low), static_cast<std::int64_t>(d.high)));
    case DimKind::uniform: return rng.uniform(d.low, d.high);
    case DimKind::log_uniform: return std::exp(rng.uniform(std::log(d.low), std::log(d.high)));
    case DimKind::categorical:
      return d.choices[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(d.choices.size()) - 1))];
  }
  return d.low;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Mixture of truncated Gaussians at the observations plus the uniform prior,
// all with weight 1 / (n + 1). Works in log space for log-uniform dimensions;
// integers use [low - 0.5, high + 0.5] and the mass of each unit interval.
class Parzen {
 public:
  Parzen(const Dimension& d, const std::vector<double>& obs) : dim_(d) {
    lo_ = d.kind == DimKind::log_uniform ? std::log(d.low) : d.low;
    hi_ = d.kind == DimKind::log_uniform ? std::log(d.high) : d.high;
    if (d.kind == DimKind::integer) {
      lo_ -= 0.5;
      hi_ += 0.5;
    }
    if (d.kind == DimKind::categorical) {
      counts_.assign(d.choices.size(), 0.0);
      for (double v : obs) {
        const auto it = std::find(d.choices.begin(), d.choices.end(), v);
        if (it != d.choices.end()) counts_[static_cast<std::size_t>(it - d.choices.begin())] += 1.0;
      }
      n_ = static_cast<double>(obs.size());
      return;
    }
    for (double v : obs) mu_.push_back(forward(v));
    const double range = hi_ - lo_;
    // Scott's rule scaled by the range rather than by the sample spread,
    // which collapses once the good observations cluster.
    sigma_ = 0.2 * range * std::pow(static_cast<double>(std::max<std::size_t>(mu_.size(), 1)), -0.2);
    sigma_ = std::max(sigma_, 0.01 * range);
    if (sigma_ <= 0.0) sigma_ = 1.0;  // degenerate one-point range
    for (double m : mu_) z_.push_back(normal_cdf((hi_ - m) / sigma_) - normal_cdf((lo_ - m) / sigma_));
  }

  double sample(Rng& rng) const {
    if (dim_.kind == DimKind::categorical) {
      double u = rng.uniform() * (n_ + static_cast<double>(counts_.size()));
      for (std::size_t c = 0; c < counts_.size(); ++c) {
        u -= counts_[c] + 1.0;
        if (u < 0.0) return dim_.choices[c];
      }
      return dim_.choices.back();
    }
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(mu_.size())));
    double t;
    if (j == mu_.size() || hi_ == lo_) {
      t = rng.uniform(lo_, hi_);
    } else {
      t = std::clamp(mu_[j], lo_, hi_);
      for (int attempt = 0; attempt < 100; ++attempt) {
        const double c = mu_[j] + sigma_ * rng.normal();
        if (c >= lo_ && c <= hi_) {
          t = c;
          break;
        }
      }
    }
    return backward(t);
  }

  double log_density(double v) const {
    if (dim_.kind == DimKind::categorical) {
      const auto it = std::find(dim_.choices.begin(), dim_.choices.end(), v);
      const double count = counts_[static_cast<std::size_t>(it - dim_.choices.begin())];
      return std::log((count + 1.0) / (n_ + static_cast<double>(counts_.size())));
    }
    const double w = 1.0 / static_cast<double>(mu_.size() + 1);
    double total = 0.0;
    if (dim_.kind == DimKind::integer) {
      const double a = v - 0.5, b = v + 0.5;
      total += w / (dim_.high - dim_.low + 1.0);
      for (std::size_t i = 0; i < mu_.size(); ++i) {
        total += w * (normal_cdf((b - mu_[i]) / sigma_) - normal_cdf((a - mu_[i]) / sigma_)) / z_[i];
      }
    } else {
      const double t = forward(v);
      total += hi_ > lo_ ? w / (hi_ - lo_) : w;
      for (std::size_t i = 0; i < mu_.size(); ++i) {
        const double z = (t - mu_[i]) / sigma_;
        total += w * std::exp(-0.5 * z * z) / (sigma_ * std::sqrt(2.0 * std::numbers::pi) * z_[i]);
      }
    }
    return std::log(std::max(total, 1e-300));
  }

 private:
  double forward(double v) const { return dim_.kind == DimKind::log_uniform ? std::log(v) : v; }
  double backward(double t) const {
    switch (dim_.kind) {
      case DimKind::log_uniform: return std::clamp(std::exp(t), dim_.low, dim_.high);
      case DimKind::integer: return std::clamp(std::round(t), dim_.low, dim_.high);
      default: return std::clamp(t, dim_.low, dim_.high);
    }
  }

  const Dimension& dim_;
  double lo_ = 0.0, hi_ = 0.0, sigma_ = 1.0, n_ = 0.0;
  std::vector<double> mu_, z_, counts_;
};

std::vector<double> observations(const std::vector<const Trial*>& set, const std::string& name) {
  std::vector<double> out;
  for (const Trial* t : set) {
    if (auto it = t->theta.find(name); it != t->theta.end()) out.push_back(it->second);
  }
  return out;
}

}  // namespace

HyperPoint random_point(const SearchSpace& space, Rng& rng) {
  space.validate();
  HyperPoint p;
  for (const auto& d : space.dimensions) {
    if (space.active(d, p)) p[d.name] = sample_dimension_uniform(d, rng);
  }
  return p;
}

HyperPoint tpe_suggest(const TrialHistory& history, const SearchSpace& space, const TpeParams& params, Rng& rng) {
  space.validate();
  if (!(params.gamma > 0.0 && params.gamma < 1.0) || params.n_candidates < 1) {
    throw ParameterError("TPE needs gamma in (0, 1) and at least one candidate");
  }
  if (history.size() < 2) return random_point(space, rng);

  std::vector<const Trial*> sorted;
  for (const auto& t : history.trials) sorted.push_back(&t);
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const Trial* a, const Trial* b) { return a->performance < b->performance; });
  const auto n_good = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(params.gamma * static_cast<double>(sorted.size()))));
  const std::vector<const Trial*> good(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(n_good));
  const std::vector<const Trial*> bad(sorted.begin() + static_cast<std::ptrdiff_t>(n_good), sorted.end());

  std::vector<Parzen> l, g;
  for (const auto& d : space.dimensions) {
    l.emplace_back(d, observations(good, d.name));
    g.emplace_back(d, observations(bad, d.name));
  }

  std::set<HyperPoint> seen;
  const bool dedup = space.discrete();
  if (dedup) {
    for (const auto& t : history.trials) seen.insert(t.theta);
  }

  HyperPoint best_any;
  double best_any_score = -std::numeric_limits<double>::infinity();
  for (int round = 0; round <= (dedup ? params.max_redraws : 0); ++round) {
    HyperPoint best_new;
    double best_new_score = -std::numeric_limits<double>::infinity();
    bool found_new = false;
    for (int c = 0; c < params.n_candidates; ++c) {
      HyperPoint p;
      double score = 0.0;
      for (std::size_t k = 0; k < space.dimensions.size(); ++k) {
        const auto& d = space.dimensions[k];
        if (!space.active(d, p)) continue;
        const double v = l[k].sample(rng);
        p[d.name] = v;
        score += l[k].log_density(v) - g[k].log_density(v);
      }
      if (score > best_any_score) {
        best_any_score = score;
        best_any = p;
      }
      if (dedup && !seen.count(p) && score > best_new_score) {
        best_new_score = score;
        best_new = p;
        found_new = true;
      }
    }
    if (!dedup) return best_any;
    if (found_new) return best_new;
  }
  return best_any;
}

namespace {

Json point_to_json(const HyperPoint& p) {
  Json j = Json::object();
  for (const auto& [k, v] : p) j[k] = v;
  return j;
}

[[noreturn]] void corrupt(const std::filesystem::path& path, std::size_t line, const std::string& why) {
  throw DataError(path.string() + ":" + std::to_string(line) + ": corrupted trial log (" + why +
                  "); rerun with the restart flag to discard it");
}

}  // namespace

TrialHistory read_trial_log(const std::filesystem::path& path, const SearchSpace& space, std::uint64_t seed) {
  std::ifstream in(path);
  if (!in) throw LookupError("cannot open trial log " + path.string());
  TrialHistory h;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      corrupt(path, line_no, "unparseable line");
    }
    try {
      if (!header) {
        if (j.value("kind", "") != "trial-log") corrupt(path, line_no, "missing header");
        if (j.at("seed").get<std::uint64_t>() != seed) corrupt(path, line_no, "written with another seed");
        if (j.at("space_hash").get<std::uint64_t>() != space.hash()) {
          corrupt(path, line_no, "written for another search space");
        }
        header = true;
        continue;
      }
      Trial t;
      t.index = j.at("index").get<int>();
      for (const auto& [k, v] : j.at("theta").items()) t.theta[k] = v.get<double>();
      t.performance = j.at("performance").get<double>();
      t.wall_seconds = j.at("wall_seconds").get<double>();
      if (t.index != static_cast<int>(h.size())) corrupt(path, line_no, "trial index out of sequence");
      if (!space.contains(t.theta)) corrupt(path, line_no, "point outside the search space");
      if (!std::isfinite(t.performance)) corrupt(path, line_no, "non-finite performance");
      h.trials.push_back(std::move(t));
    } catch (const nlohmann::json::exception& e) {
      corrupt(path, line_no, e.what());
    }
  }
  if (!header) corrupt(path, line_no, "missing header");
  return h;
}

SmboResult smbo_optimize(const Objective& objective, const SearchSpace& space, const SmboOptions& options) {
  space.validate();
  if (options.trials < 1) throw ParameterError("trial budget must be at least 1");
  if (options.first && !space.contains(*options.first)) throw ParameterError("first point is outside the space");

  SmboResult result;
  std::ofstream log;
  if (options.log_path) {
    const bool resume = !options.restart && std::filesystem::exists(*options.log_path);
    if (resume) {
      result.history = read_trial_log(*options.log_path, space, options.seed);
      spdlog::info("resuming search with {} logged trials", result.history.size());
      log.open(*options.log_path, std::ios::app);
    } else {
      log.open(*options.log_path, std::ios::trunc);
      log << Json{{"kind", "trial-log"}, {"seed", options.seed}, {"space_hash", space.hash()}}.dump() << '\n';
    }
    if (!log) throw DataError("cannot write trial log " + options.log_path->string());
  }

  for (int i = static_cast<int>(result.history.size()); i < options.trials; ++i) {
    Rng rng(derive_seed(options.seed, static_cast<std::uint64_t>(i)));
    HyperPoint theta = (i == 0 && options.first) ? *options.first
                                                 : tpe_suggest(result.history, space, options.tpe, rng);
    const auto t0 = std::chrono::steady_clock::now();
    double perf;
    try {
      perf = objective(theta);
      if (!std::isfinite(perf)) {
        spdlog::warn("trial {}: objective returned a non-finite value", i);
        perf = kWorstPerformance;
      }
    } catch (const std::exception& e) {
      spdlog::warn("trial {} failed: {}", i, e.what());
      perf = kWorstPerformance;
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.history.trials.push_back({i, theta, perf, wall});
    if (log.is_open()) {
      log << Json{{"index", i}, {"theta", point_to_json(theta)}, {"performance", perf}, {"wall_seconds", wall}}.dump()
          << '\n';
      log.flush();
    }
    spdlog::info("trial {}/{}: performance {:.4f}", i + 1, options.trials, perf);
  }
  const Trial& best = result.history.best();
  result.best = best.theta;
  result.best_performance = best.performance;
  return result;
}

}  // namespace solarcast
