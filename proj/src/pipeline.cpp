#include "solarcast/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "solarcast/errors.hpp"
#include "solarcast/parallel.hpp"
#include "solarcast/persistence.hpp"

namespace fs = std::filesystem;

namespace solarcast {

namespace {

// Reads one JSON object, remembering which keys were consumed so that
// leftovers can be rejected.
class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError(where() + " must be an object");
  }

  template <typename T>
  bool get(const char* key, T& out) {
    used_.insert(key);
    if (!j_.contains(key)) return false;
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(where(key) + " has the wrong type");
    }
    return true;
  }

  const Json* sub(const char* key) {
    used_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  std::string where(const std::string& key = {}) const {
    if (key.empty()) return path_.empty() ? "config" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!used_.count(k)) throw ConfigError("unknown config key '" + where(k) + "'");
    }
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> used_;
};

std::chrono::sys_days read_date(ObjectReader& r, const char* key, std::chrono::sys_days fallback) {
  std::string s;
  if (!r.get(key, s)) return fallback;
  try {
    return parse_date(s);
  } catch (const ParseError& e) {
    throw ConfigError(r.where(key) + ": " + e.what());
  }
}

GeoPoint read_point(ObjectReader& r, const char* key, GeoPoint fallback) {
  std::vector<double> v;
  if (!r.get(key, v)) return fallback;
  if (v.size() != 2) throw ConfigError(r.where(key) + " must be [lat, lon]");
  return {v[0], v[1]};
}

DateRange read_range(ObjectReader& r, const char* key, DateRange fallback) {
  std::vector<std::string> v;
  if (!r.get(key, v)) return fallback;
  if (v.size() != 2) throw ConfigError(r.where(key) + " must be [first, last]");
  try {
    return {parse_date(v[0]), parse_date(v[1])};
  } catch (const ParseError& e) {
    throw ConfigError(r.where(key) + ": " + e.what());
  }
}

Json range_json(const DateRange& r) { return Json::array({format_date(r.first), format_date(r.last)}); }

void read_train_config(const Json& j, const std::string& path, TrainConfig& t) {
  ObjectReader r(j, path);
  r.get("learning_rate", t.learning_rate);
  r.get("dropout_rate", t.dropout_rate);
  r.get("batch_size", t.batch_size);
  r.get("max_epochs", t.max_epochs);
  r.get("patience", t.patience);
  r.get("n_starts", t.n_starts);
  r.finish();
}

Json train_config_json(const TrainConfig& t) {
  return {{"learning_rate", t.learning_rate}, {"dropout_rate", t.dropout_rate}, {"batch_size", t.batch_size},
          {"max_epochs", t.max_epochs},       {"patience", t.patience},         {"n_starts", t.n_starts}};
}

void read_features(const Json& j, const std::string& path, FeatureConfig& f) {
  ObjectReader r(j, path);
  r.get("use_nwp", f.use_nwp);
  r.get("use_clearsky", f.use_clearsky);
  r.get("use_sat", f.use_sat);
  r.get("use_temp_hist", f.use_temp_hist);
  r.get("use_humid_hist", f.use_humid_hist);
  r.get("use_temp_fc", f.use_temp_fc);
  r.get("use_humid_fc", f.use_humid_fc);
  r.get("sat_lags_current", f.sat_lags_current);
  r.get("sat_daily_lag", f.sat_daily_lag);
  std::string source;
  if (r.get("source", source)) {
    if (source == "satellite") {
      f.source = LagSource::satellite;
    } else if (source == "ground") {
      f.source = LagSource::ground;
    } else {
      throw ConfigError(r.where("source") + " must be 'satellite' or 'ground'");
    }
  }
  r.finish();
}

void read_neural(const Json& j, const std::string& path, NeuralSettings& s) {
  ObjectReader r(j, path);
  r.get("hidden", s.hidden);
  if (const Json* t = r.sub("train")) read_train_config(*t, path + ".train", s.train);
  if (const Json* f = r.sub("features")) read_features(*f, path + ".features", s.features);
  r.finish();
}

Json neural_json(const NeuralSettings& s) {
  return {{"hidden", s.hidden}, {"train", train_config_json(s.train)}, {"features", solarcast::to_json(s.features)}};
}

template <typename F>
auto rethrow_as_config(const std::string& what, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

}  // namespace

Json synth_to_json(const SynthConfig& c) {
  return {{"n_sites", c.n_sites},
          {"bbox_min", {c.bbox_min.latitude_deg, c.bbox_min.longitude_deg}},
          {"bbox_max", {c.bbox_max.latitude_deg, c.bbox_max.longitude_deg}},
          {"first_day", format_date(c.first_day)},
          {"last_day", format_date(c.last_day)},
          {"cloud_persistence", c.cloud_persistence},
          {"spatial_corr_km", c.spatial_corr_km},
          {"sat_noise_rel", c.sat_noise_rel},
          {"sat_pixel_km", c.sat_pixel_km},
          {"nwp_noise_base_rel", c.nwp_noise_base_rel},
          {"nwp_noise_growth_rel", c.nwp_noise_growth_rel},
          {"missing_rate", c.missing_rate},
          {"kc_mean", c.kc_mean},
          {"kc_std", c.kc_std},
          {"linke_turbidity", c.linke_turbidity}};
}

SynthConfig synth_from_json(const Json& j) {
  SynthConfig c;
  ObjectReader r(j, "synth");
  r.get("n_sites", c.n_sites);
  c.bbox_min = read_point(r, "bbox_min", c.bbox_min);
  c.bbox_max = read_point(r, "bbox_max", c.bbox_max);
  c.first_day = read_date(r, "first_day", c.first_day);
  c.last_day = read_date(r, "last_day", c.last_day);
  r.get("cloud_persistence", c.cloud_persistence);
  r.get("spatial_corr_km", c.spatial_corr_km);
  r.get("sat_noise_rel", c.sat_noise_rel);
  r.get("sat_pixel_km", c.sat_pixel_km);
  r.get("nwp_noise_base_rel", c.nwp_noise_base_rel);
  r.get("nwp_noise_growth_rel", c.nwp_noise_growth_rel);
  r.get("missing_rate", c.missing_rate);
  r.get("kc_mean", c.kc_mean);
  r.get("kc_std", c.kc_std);
  r.get("linke_turbidity", c.linke_turbidity);
  r.finish();
  return c;
}

RunConfig RunConfig::from_json(const Json& j) {
  RunConfig c;
  ObjectReader r(j, "");
  if (const Json* s = r.sub("synth")) c.synth = synth_from_json(*s);
  if (const Json* d = r.sub("data")) {
    ObjectReader dr(*d, "data");
    std::string obs, nwp;
    if (dr.get("observations", obs)) c.observations_csv = obs;
    if (dr.get("nwp", nwp)) c.nwp_csv = nwp;
    dr.finish();
  }
  if (const Json* s = r.sub("split")) {
    ObjectReader sr(*s, "split");
    c.split.train = read_range(sr, "train", c.split.train);
    c.split.validation = read_range(sr, "validation", c.split.validation);
    c.split.test = read_range(sr, "test", c.split.test);
    sr.finish();
  }
  if (const Json* p = r.sub("partition")) {
    ObjectReader pr(*p, "partition");
    pr.get("train_sites", c.train_sites);
    pr.get("n_train_sites", c.n_train_sites);
    pr.finish();
  }
  if (const Json* g = r.sub("global")) read_neural(*g, "global", c.global);
  if (const Json* l = r.sub("local")) {
    ObjectReader lr(*l, "local");
    if (const Json* f = lr.sub("features")) read_features(*f, "local.features", c.local_features);
    lr.get("ridge_lambda", c.ridge_lambda);
    lr.get("issue_hours", c.issue_hours);
    if (const Json* g = lr.sub("gbt")) {
      ObjectReader gr(*g, "local.gbt");
      gr.get("n_trees", c.gbt.n_trees);
      gr.get("max_depth", c.gbt.max_depth);
      gr.get("shrinkage", c.gbt.shrinkage);
      gr.get("min_leaf", c.gbt.min_leaf);
      gr.finish();
    }
    if (const Json* n = lr.sub("dnn")) read_neural(*n, "local.dnn", c.local_dnn);
    lr.finish();
  }
  if (const Json* s = r.sub("search")) {
    ObjectReader sr(*s, "search");
    sr.get("trials", c.search.trials);
    sr.get("max_epochs", c.search.max_epochs);
    sr.get("gamma", c.search.tpe.gamma);
    sr.get("n_candidates", c.search.tpe.n_candidates);
    sr.finish();
  }
  r.get("models", c.models);
  std::string out;
  if (r.get("out", out)) c.out = out;
  r.get("seed", c.seed);
  r.get("threads", c.threads);
  r.get("skill_window", c.skill_window);
  r.get("min_elevation_deg", c.min_elevation_deg);
  r.finish();
  c.validate();
  return c;
}

Json RunConfig::to_json() const {
  Json j;
  j["synth"] = synth_to_json(synth);
  if (observations_csv) j["data"]["observations"] = observations_csv->string();
  if (nwp_csv) j["data"]["nwp"] = nwp_csv->string();
  j["split"] = {{"train", range_json(split.train)},
                {"validation", range_json(split.validation)},
                {"test", range_json(split.test)}};
  j["partition"] = {{"train_sites", train_sites}, {"n_train_sites", n_train_sites}};
  j["global"] = neural_json(global);
  j["local"] = {{"features", solarcast::to_json(local_features)},
                {"ridge_lambda", ridge_lambda},
                {"issue_hours", issue_hours},
                {"gbt",
                 {{"n_trees", gbt.n_trees},
                  {"max_depth", gbt.max_depth},
                  {"shrinkage", gbt.shrinkage},
                  {"min_leaf", gbt.min_leaf}}},
                {"dnn", neural_json(local_dnn)}};
  j["search"] = {{"trials", search.trials},
                 {"max_epochs", search.max_epochs},
                 {"gamma", search.tpe.gamma},
                 {"n_candidates", search.tpe.n_candidates}};
  j["models"] = models;
  j["out"] = out.string();
  j["seed"] = seed;
  j["threads"] = threads;
  j["skill_window"] = skill_window;
  j["min_elevation_deg"] = min_elevation_deg;
  return j;
}

void RunConfig::validate() const {
  rethrow_as_config("synth", [&] { synth.validate(); });
  auto ordered = [](const DateRange& a, const DateRange& b) { return a.first <= a.last && a.last < b.first; };
  if (!ordered(split.train, split.validation) || !ordered(split.validation, split.test) ||
      split.test.last < split.test.first) {
    throw ConfigError("split ranges must be non-empty, ascending and disjoint");
  }
  if (train_sites.empty() && n_train_sites < 1) throw ConfigError("partition needs at least one training site");
  rethrow_as_config("global", [&] {
    global.features.validate();
    global.train.validate();
  });
  rethrow_as_config("local", [&] {
    local_features.validate();
    local_dnn.features.validate();
    local_dnn.train.validate();
    gbt.validate();
  });
  if (global.features.source != LagSource::satellite) {
    throw ConfigError("global.features.source must be 'satellite'");
  }
  if (global.hidden.empty() || local_dnn.hidden.empty()) throw ConfigError("networks need a hidden layer");
  for (int h : global.hidden) {
    if (h < 1) throw ConfigError("hidden layer sizes must be positive");
  }
  for (int h : local_dnn.hidden) {
    if (h < 1) throw ConfigError("hidden layer sizes must be positive");
  }
  if (!(ridge_lambda >= 0.0)) throw ConfigError("local.ridge_lambda must be >= 0");
  for (int h : issue_hours) {
    if (h < 0 || h > 23) throw ConfigError("local.issue_hours must lie in [0, 23]");
  }
  if (search.trials < 1) throw ConfigError("search.trials must be >= 1");
  if (search.max_epochs < 2) throw ConfigError("search.max_epochs must be >= 2");
  for (const auto& m : models) {
    if (std::find(kAllModels.begin(), kAllModels.end(), m) == kAllModels.end()) {
      throw ConfigError("unknown model '" + m + "'");
    }
  }
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (skill_window < 2) throw ConfigError("skill_window must be >= 2");
  if (!(min_elevation_deg >= -90.0 && min_elevation_deg <= 90.0)) throw ConfigError("min_elevation_deg out of range");
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return RunConfig::from_json(j);
}

std::uint64_t stream_seed(const RunConfig& cfg, const std::string& label) { return derive_seed(cfg.seed, label); }

std::vector<PreparedSite> Workspace::select(const std::vector<std::string>& ids) const {
  std::vector<PreparedSite> out;
  for (const auto& id : ids) {
    const auto it = std::find_if(sites.begin(), sites.end(), [&](const SiteSeries& s) { return s.site_id == id; });
    if (it == sites.end()) throw LookupError("unknown site '" + id + "'");
    out.push_back(prepared[static_cast<std::size_t>(it - sites.begin())]);
  }
  return out;
}

std::uint64_t partition_hash(const SitePartition& p) {
  std::string s;
  for (const auto& id : p.train_sites) s += id + ",";
  s += "|";
  for (const auto& id : p.eval_sites) s += id + ",";
  return fnv1a(s);
}

SitePartition choose_partition(const RunConfig& cfg, std::span<const SiteSeries> sites) {
  std::vector<std::string> train = cfg.train_sites;
  if (train.empty()) {
    if (cfg.n_train_sites >= sites.size()) {
      throw ConfigError(fmt::format("{} training sites leave no evaluation sites among {}", cfg.n_train_sites,
                                    sites.size()));
    }
    std::vector<std::string> ids;
    for (const auto& s : sites) ids.push_back(s.site_id);
    std::sort(ids.begin(), ids.end());
    Rng rng(stream_seed(cfg, "partition"));
    rng.shuffle(ids.begin(), ids.end());
    train.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(cfg.n_train_sites));
  }
  std::sort(train.begin(), train.end());
  SitePartition p = partition_sites(sites, train);
  if (p.eval_sites.empty()) throw ConfigError("partition leaves no evaluation sites");
  return p;
}

namespace {

fs::path observations_path(const RunConfig& cfg) {
  return cfg.observations_csv ? *cfg.observations_csv : cfg.out / "data" / "observations.csv";
}
fs::path nwp_path(const RunConfig& cfg) { return cfg.nwp_csv ? *cfg.nwp_csv : cfg.out / "data" / "nwp.csv"; }

}  // namespace

Workspace load_workspace(const RunConfig& cfg) {
  const std::vector<fs::path> files{observations_path(cfg), nwp_path(cfg)};
  for (const auto& f : files) {
    if (!fs::exists(f)) throw DataError("dataset file " + f.string() + " not found; run gen-data first");
  }
  Workspace w;
  w.sites = load_sites(files, {cfg.synth.linke_turbidity, false});
  w.prepared.resize(w.sites.size());
  parallel_for(w.sites.size(), [&](std::size_t i) { w.prepared[i] = prepare_site(w.sites[i], cfg.min_elevation_deg); });
  w.partition = choose_partition(cfg, w.sites);
  w.partition_hash = partition_hash(w.partition);
  return w;
}

namespace {

// Issue hours of the evaluation protocol: retained hours inside `days` whose
// six targets are retained too.
SampleSet protocol_samples(const PreparedSite& site, const DateRange& days) {
  FeatureConfig f;
  f.use_nwp = false;
  f.use_sat = false;
  f.use_clearsky = true;
  return build_samples(*site.series, f, site.retained, days);
}

ForecastMap merge(std::vector<ForecastMap>& parts) {
  ForecastMap out;
  for (auto& p : parts) out.merge(p);
  return out;
}

}  // namespace

ForecastMap forecast_persistence(std::span<const PreparedSite> sites, const DateRange& days) {
  std::vector<ForecastMap> parts(sites.size());
  parallel_for(sites.size(), [&](std::size_t i) {
    const SiteSeries& s = *sites[i].series;
    for (const auto& sample : protocol_samples(sites[i], days).samples) {
      const std::size_t h = *s.index_of(sample.issue);
      auto& row = parts[i][{s.site_id, sample.issue}];
      for (int p = 1; p <= kHorizons; ++p) {
        row[static_cast<std::size_t>(p - 1)] =
            persistence_forecast(s.ground.value(h), s.clearsky[h], s.clearsky[h + static_cast<std::size_t>(p)]).value;
      }
    }
  });
  return merge(parts);
}

ForecastMap forecast_nwp(std::span<const PreparedSite> sites, const DateRange& days) {
  std::vector<ForecastMap> parts(sites.size());
  parallel_for(sites.size(), [&](std::size_t i) {
    const SiteSeries& s = *sites[i].series;
    for (const auto& sample : protocol_samples(sites[i], days).samples) {
      const std::size_t h = *s.index_of(sample.issue);
      auto& row = parts[i][{s.site_id, sample.issue}];
      for (int p = 1; p <= kHorizons; ++p) row[static_cast<std::size_t>(p - 1)] = s.nwp_ghi.latest_for(h, p);
    }
  });
  return merge(parts);
}

ForecastMap forecast_neural(const NeuralForecaster& model, std::span<const PreparedSite> sites, const DateRange& days) {
  std::vector<ForecastMap> parts(sites.size());
  parallel_for(sites.size(), [&](std::size_t i) {
    const SampleSet set = build_samples(*sites[i].series, model.features, sites[i].retained, days);
    if (set.empty()) return;
    const Eigen::MatrixXd y = model.predict_batch(set);
    for (std::size_t k = 0; k < set.size(); ++k) {
      auto& row = parts[i][{set.samples[k].site_id, set.samples[k].issue}];
      for (int p = 0; p < kHorizons; ++p) row[static_cast<std::size_t>(p)] = y(p, static_cast<Eigen::Index>(k));
    }
  });
  return merge(parts);
}

ForecastMap forecast_local(const LocalSuite& suite, std::span<const PreparedSite> sites, const DateRange& days) {
  if (suite.family == LocalFamily::local_mlp) {
    std::vector<ForecastMap> parts(sites.size());
    parallel_for(sites.size(), [&](std::size_t i) {
      const auto it = suite.neural.find(sites[i].series->site_id);
      if (it == suite.neural.end()) return;
      parts[i] = forecast_neural(it->second, std::span(&sites[i], 1), days);
    });
    return merge(parts);
  }
  std::vector<ForecastMap> parts(sites.size());
  parallel_for(sites.size(), [&](std::size_t i) {
    const SampleSet set = build_samples(*sites[i].series, suite.features, sites[i].retained, days);
    for (const auto& s : set.samples) parts[i][{s.site_id, s.issue}] = suite.predict(s);
  });
  return merge(parts);
}

ModelRecords build_records(const std::vector<std::pair<std::string, ForecastMap>>& forecasts,
                           std::span<const PreparedSite> sites, const DateRange& days) {
  ModelRecords out;
  for (const auto& [name, f] : forecasts) out.emplace_back(name, std::vector<EvalRecord>{});
  std::vector<std::size_t> clipped(forecasts.size(), 0);

  std::vector<const PreparedSite*> ordered;
  for (const auto& s : sites) ordered.push_back(&s);
  std::sort(ordered.begin(), ordered.end(),
            [](const PreparedSite* a, const PreparedSite* b) { return a->series->site_id < b->series->site_id; });

  for (const PreparedSite* site : ordered) {
    const SiteSeries& s = *site->series;
    for (const auto& sample : protocol_samples(*site, days).samples) {
      const std::size_t h = *s.index_of(sample.issue);
      const double k_now = s.clearsky[h] > kClearSkyEpsilon ? s.ground.value(h) / s.clearsky[h] : 1.0;
      for (int p = 1; p <= kHorizons; ++p) {
        const auto pi = static_cast<std::size_t>(p - 1);
        bool all = true;
        for (const auto& [name, f] : forecasts) {
          const auto it = f.find({s.site_id, sample.issue});
          if (it == f.end() || !it->second[pi]) {
            all = false;
            break;
          }
        }
        if (!all) continue;
        const std::size_t t = h + static_cast<std::size_t>(p);
        const double y = s.ground.value(t);
        const double cs = s.clearsky[t];
        const double step = cs > kClearSkyEpsilon ? y / cs - k_now : 0.0;
        for (std::size_t m = 0; m < forecasts.size(); ++m) {
          double pred = *forecasts[m].second.at({s.site_id, sample.issue})[pi];
          if (pred < 0.0) {
            pred = 0.0;
            ++clipped[m];
          }
          out[m].second.push_back({s.site_id, sample.issue, p, y, pred, cs, step});
        }
      }
    }
  }
  for (std::size_t m = 0; m < forecasts.size(); ++m) {
    if (clipped[m] > 0) spdlog::info("{}: {} negative forecasts clipped to 0", forecasts[m].first, clipped[m]);
  }
  return out;
}

void apply_point(const HyperPoint& p, FeatureConfig& f) {
  auto flag = [&](const char* k, bool& field) {
    if (auto it = p.find(k); it != p.end()) field = it->second != 0.0;
  };
  flag("use_nwp", f.use_nwp);
  flag("use_clearsky", f.use_clearsky);
  flag("use_sat", f.use_sat);
  flag("use_temp_hist", f.use_temp_hist);
  flag("use_humid_hist", f.use_humid_hist);
  flag("use_temp_fc", f.use_temp_fc);
  flag("use_humid_fc", f.use_humid_fc);
  flag("sat_daily_lag", f.sat_daily_lag);
  if (auto it = p.find("sat_lags_current"); it != p.end()) f.sat_lags_current = static_cast<int>(it->second);
}

void apply_point(const HyperPoint& p, NeuralSettings& s) {
  apply_point(p, s.features);
  if (auto it = p.find("hidden_layers"); it != p.end()) {
    s.hidden.clear();
    for (int k = 1; k <= static_cast<int>(it->second); ++k) {
      const auto n = p.find("neurons_" + std::to_string(k));
      if (n == p.end()) throw ParameterError("search point lacks neurons_" + std::to_string(k));
      s.hidden.push_back(static_cast<int>(n->second));
    }
  }
  if (auto it = p.find("learning_rate"); it != p.end()) s.train.learning_rate = it->second;
  if (auto it = p.find("dropout"); it != p.end()) s.train.dropout_rate = it->second;
}

HyperPoint table1_point() {
  return {{"hidden_layers", 2},  {"neurons_1", 208},     {"neurons_2", 63},      {"learning_rate", 1.16e-3},
          {"dropout", 0.14},     {"use_nwp", 1},         {"use_clearsky", 1},    {"use_sat", 1},
          {"use_temp_hist", 0},  {"use_humid_hist", 0},  {"use_temp_fc", 0},     {"use_humid_fc", 0},
          {"sat_lags_current", 4}, {"sat_daily_lag", 1}};
}

SearchSpace search_space(const std::string& family) {
  if (family == "global-dnn" || family == "local-dnn") return SearchSpace::paper_default();
  SearchSpace s;
  if (family == "linear") {
    s.dimensions.push_back(Dimension::log_uniform("ridge_lambda", 1e-6, 10.0));
  } else if (family == "gbt") {
    s.dimensions.push_back(Dimension::integer("n_trees", 10, 300));
    s.dimensions.push_back(Dimension::integer("max_depth", 1, 8));
    s.dimensions.push_back(Dimension::log_uniform("shrinkage", 0.01, 0.5));
    s.dimensions.push_back(Dimension::integer("min_leaf", 2, 50));
  } else {
    throw ConfigError("no search space for family '" + family + "'");
  }
  for (const auto& d : SearchSpace::paper_default().dimensions) {
    if (d.kind == DimKind::categorical || d.name == "sat_lags_current") s.dimensions.push_back(d);
  }
  return s;
}

namespace {

fs::path model_dir(const RunConfig& cfg, const std::string& family) { return cfg.out / "models" / family; }
fs::path search_dir(const RunConfig& cfg, const std::string& family) { return cfg.out / "search" / family; }

std::optional<HyperPoint> searched_point(const RunConfig& cfg, const std::string& family) {
  const fs::path p = search_dir(cfg, family) / "best.json";
  if (!fs::exists(p)) return std::nullopt;
  const Json j = read_json(p);
  HyperPoint point;
  for (const auto& [k, v] : j.at("theta").items()) point[k] = v.get<double>();
  if (!search_space(family).contains(point)) throw IntegrityError(p.string() + " holds a point outside the space");
  return point;
}

struct FamilySettings {
  NeuralSettings neural;
  LocalSuiteParams local;
};

// Settings for a family with an optional search point applied on top of the
// configuration.
FamilySettings family_settings(const RunConfig& cfg, const std::string& family, const HyperPoint* point) {
  FamilySettings s;
  s.neural = family == "local-dnn" ? cfg.local_dnn : cfg.global;
  s.neural.train.seed = stream_seed(cfg, family);
  s.local.features = family == "local-dnn" ? cfg.local_dnn.features : cfg.local_features;
  s.local.ridge_lambda = cfg.ridge_lambda;
  s.local.gbt = cfg.gbt;
  s.local.issue_hours = cfg.issue_hours;
  if (point) {
    apply_point(*point, s.neural);
    apply_point(*point, s.local.features);
    if (auto it = point->find("ridge_lambda"); it != point->end()) s.local.ridge_lambda = it->second;
    if (auto it = point->find("n_trees"); it != point->end()) s.local.gbt.n_trees = static_cast<int>(it->second);
    if (auto it = point->find("max_depth"); it != point->end()) s.local.gbt.max_depth = static_cast<int>(it->second);
    if (auto it = point->find("shrinkage"); it != point->end()) s.local.gbt.shrinkage = it->second;
    if (auto it = point->find("min_leaf"); it != point->end()) s.local.gbt.min_leaf = static_cast<int>(it->second);
  }
  s.local.neural = s.neural;
  s.local.neural.features = s.local.features;
  if (family == "local-dnn") s.local.features = s.neural.features;
  return s;
}

Json run_manifest(const RunConfig& cfg, const Workspace& w, const std::string& family) {
  return {{"family", family},
          {"seed", cfg.seed},
          {"stream", family},
          {"stream_seed", stream_seed(cfg, family)},
          {"train_sites", w.partition.train_sites},
          {"eval_sites", w.partition.eval_sites},
          {"partition_hash", w.partition_hash}};
}

double validation_rrmse(const std::string& name, ForecastMap forecasts, std::span<const PreparedSite> sites,
                        const DateRange& days) {
  std::vector<std::pair<std::string, ForecastMap>> one;
  one.emplace_back(name, std::move(forecasts));
  const auto records = build_records(one, sites, days);
  return rrmse(records.front().second);
}

}  // namespace

void cmd_gen_data(const RunConfig& cfg) {
  set_thread_count(cfg.threads);
  SynthConfig synth = cfg.synth;
  synth.seed = stream_seed(cfg, "synth");
  const auto sites = gen_dataset(synth);
  const fs::path dir = cfg.out / "data";
  fs::create_directories(dir);
  write_observations_csv(sites, dir / "observations.csv");
  write_nwp_csv(sites, dir / "nwp.csv");
  const Json synth_json = synth_to_json(cfg.synth);
  write_json(dir / "manifest.json", {{"seed", cfg.seed},
                                     {"streams", {{"synth", synth.seed}}},
                                     {"config_hash", fnv1a(synth_json.dump())},
                                     {"synth", synth_json},
                                     {"files", {"observations.csv", "nwp.csv"}}});
  spdlog::info("wrote {} sites to {}", sites.size(), dir.string());
}

SmboResult cmd_hypersearch(const RunConfig& cfg, const std::string& family, bool restart) {
  set_thread_count(cfg.threads);
  const SearchSpace space = search_space(family);
  const Workspace w = load_workspace(cfg);
  const bool global = family == "global-dnn";
  const auto sites = w.select(global ? w.partition.train_sites : w.partition.eval_sites);

  const Objective objective = [&](const HyperPoint& theta) {
    FamilySettings s = family_settings(cfg, family, &theta);
    s.neural.train.max_epochs = std::min(s.neural.train.max_epochs, cfg.search.max_epochs);
    s.neural.train.patience = std::min(s.neural.train.patience, s.neural.train.max_epochs - 1);
    s.local.neural.train = s.neural.train;
    if (global) {
      const auto model = train_global(sites, cfg.split, s.neural);
      return validation_rrmse(family, forecast_neural(model, sites, cfg.split.validation), sites,
                              cfg.split.validation);
    }
    const auto suite = train_local_suite(sites, cfg.split, parse_local_family(family), s.local);
    return validation_rrmse(family, forecast_local(suite, sites, cfg.split.validation), sites, cfg.split.validation);
  };

  const fs::path dir = search_dir(cfg, family);
  fs::create_directories(dir);
  SmboOptions options;
  options.trials = cfg.search.trials;
  options.seed = stream_seed(cfg, "hypersearch/" + family);
  options.tpe = cfg.search.tpe;
  options.log_path = dir / "trials.jsonl";
  options.restart = restart;
  SmboResult result = smbo_optimize(objective, space, options);
  Json theta = Json::object();
  for (const auto& [k, v] : result.best) theta[k] = v;
  write_json(dir / "best.json", {{"family", family},
                                 {"theta", theta},
                                 {"performance", result.best_performance},
                                 {"trials", result.history.size()}});
  return result;
}

void cmd_train(const RunConfig& cfg, const std::string& family) {
  set_thread_count(cfg.threads);
  if (std::find(kAllModels.begin(), kAllModels.end(), family) == kAllModels.end()) {
    throw ConfigError("unknown model family '" + family + "'");
  }
  const fs::path dir = model_dir(cfg, family);
  const Workspace w = load_workspace(cfg);
  fs::remove_all(dir);
  fs::create_directories(dir);
  Json manifest = run_manifest(cfg, w, family);

  if (family == "persistence" || family == "nwp") {
    manifest["stateless"] = true;
    write_json(dir / "manifest.json", manifest);
    return;
  }

  const auto point = searched_point(cfg, family);
  if (point) spdlog::info("{}: using searched hyperparameters", family);
  const FamilySettings s = family_settings(cfg, family, point ? &*point : nullptr);
  manifest["hyperparameters"] = point ? "search" : "config";

  if (family == "global-dnn") {
    const auto sites = w.select(w.partition.train_sites);
    const NeuralForecaster model = train_global(sites, cfg.split, s.neural);
    write_json(dir / "model.json", to_json(model));
    write_json(dir / "trace.json", to_json(model.trace));
    manifest["layer_sizes"] = model.mlp.layer_sizes;
    write_json(dir / "manifest.json", manifest);
    return;
  }

  const auto sites = w.select(w.partition.eval_sites);
  const LocalSuite suite = train_local_suite(sites, cfg.split, parse_local_family(family), s.local);
  if (suite.model_count() == 0) throw TrainingFailure(family + ": no model could be trained");
  save_local_suite(suite, dir / "suite");
  manifest["models"] = suite.model_count();
  manifest["untrained"] = suite.untrained.size();
  write_json(dir / "manifest.json", manifest);
  spdlog::info("{}: {} models trained", family, suite.model_count());
}

EvalReport cmd_evaluate(const RunConfig& cfg, const std::vector<std::string>& models) {
  set_thread_count(cfg.threads);
  if (models.empty()) throw ConfigError("no models to evaluate");
  const Workspace w = load_workspace(cfg);
  const auto sites = w.select(w.partition.eval_sites);

  std::vector<std::pair<std::string, ForecastMap>> forecasts;
  for (const auto& name : models) {
    if (std::find(kAllModels.begin(), kAllModels.end(), name) == kAllModels.end()) {
      throw ConfigError("unknown model '" + name + "'");
    }
    const fs::path dir = model_dir(cfg, name);
    if (!fs::exists(dir / "manifest.json")) {
      throw LookupError("model '" + name + "' has no trained artifacts in " + dir.string());
    }
    const Json manifest = read_json(dir / "manifest.json");
    if (manifest.at("partition_hash").get<std::uint64_t>() != w.partition_hash) {
      throw ConfigError("model '" + name + "' was trained for a different site partition");
    }
    if (name == "persistence") {
      forecasts.emplace_back(name, forecast_persistence(sites, cfg.split.test));
    } else if (name == "nwp") {
      forecasts.emplace_back(name, forecast_nwp(sites, cfg.split.test));
    } else if (name == "global-dnn") {
      const NeuralForecaster model = neural_from_json(read_json(dir / "model.json"));
      for (const auto& id : model.train_sites) {
        if (std::find(w.partition.eval_sites.begin(), w.partition.eval_sites.end(), id) !=
            w.partition.eval_sites.end()) {
          throw ConfigError("global model was trained on evaluation site " + id);
        }
      }
      forecasts.emplace_back(name, forecast_neural(model, sites, cfg.split.test));
    } else {
      forecasts.emplace_back(name, forecast_local(load_local_suite(dir / "suite"), sites, cfg.split.test));
    }
  }

  const ModelRecords records = build_records(forecasts, sites, cfg.split.test);
  if (records.front().second.empty()) {
    throw ParameterError("the test period holds no forecast common to all models");
  }
  const EvalReport report = aggregate_report(records, cfg.skill_window);
  const fs::path dir = cfg.out / "report";
  fs::create_directories(dir);
  write_records_csv(records, dir / "records.csv");
  write_report(report, dir);
  return report;
}

std::string cmd_report(const RunConfig& cfg) {
  const fs::path dir = cfg.out / "report";
  const ModelRecords records = read_records_csv(dir / "records.csv");
  const EvalReport report = aggregate_report(records, cfg.skill_window);
  write_report(report, dir);
  const std::string text = format_report(report);
  std::ofstream out(dir / "report.txt", std::ios::binary);
  out << text;
  return text;
}

void write_records_csv(const ModelRecords& records, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "model,site_id,issue_time,horizon,y_true,y_pred,clearsky_target,clearsky_index_step\n";
  for (const auto& [model, recs] : records) {
    for (const auto& r : recs) {
      out << fmt::format("{},{},{},{},{},{},{},{}\n", model, r.site_id, format_iso_hour(r.issue), r.horizon, r.y_true,
                         r.y_pred, r.clearsky_at_target, r.clearsky_index_step);
    }
  }
}

ModelRecords read_records_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw LookupError("no evaluation records at " + path.string() + "; run evaluate first");
  ModelRecords out;
  std::string line;
  std::size_t line_no = 1;
  std::getline(in, line);
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 8) throw ParseError(fmt::format("{}:{}: expected 8 fields", path.string(), line_no));
    auto number = [&](const std::string& s) {
      double v = 0.0;
      const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || p != s.data() + s.size()) {
        throw ParseError(fmt::format("{}:{}: bad number '{}'", path.string(), line_no, s));
      }
      return v;
    };
    if (out.empty() || out.back().first != f[0]) out.emplace_back(f[0], std::vector<EvalRecord>{});
    out.back().second.push_back({f[1], parse_iso_hour(f[2]), static_cast<int>(number(f[3])), number(f[4]),
                                 number(f[5]), number(f[6]), number(f[7])});
  }
  return out;
}

}  // namespace solarcast
