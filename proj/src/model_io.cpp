#include "solarcast/model_io.hpp"

#include <cmath>
#include <fstream>

#include "solarcast/errors.hpp"

namespace solarcast {

namespace {

template <typename T>
T get(const Json& j, const char* key) {
  if (!j.contains(key)) throw IntegrityError(std::string("artifact is missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError(std::string("artifact field '") + key + "': " + e.what());
  }
}

void expect_kind(const Json& j, const std::string& kind) {
  const auto k = get<std::string>(j, "kind");
  if (k != kind) throw IntegrityError("expected a '" + kind + "' artifact, found '" + k + "'");
}

std::vector<double> to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd from_vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void check_finite(const std::vector<double>& v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw IntegrityError(std::string(what) + " contains a non-finite value");
  }
}

}  // namespace

Json to_json(const FeatureConfig& c) {
  return {{"use_nwp", c.use_nwp},
          {"use_clearsky", c.use_clearsky},
          {"use_sat", c.use_sat},
          {"use_temp_hist", c.use_temp_hist},
          {"use_humid_hist", c.use_humid_hist},
          {"use_temp_fc", c.use_temp_fc},
          {"use_humid_fc", c.use_humid_fc},
          {"sat_lags_current", c.sat_lags_current},
          {"sat_daily_lag", c.sat_daily_lag},
          {"source", c.source == LagSource::satellite ? "satellite" : "ground"}};
}

FeatureConfig feature_config_from_json(const Json& j) {
  FeatureConfig c;
  c.use_nwp = get<bool>(j, "use_nwp");
  c.use_clearsky = get<bool>(j, "use_clearsky");
  c.use_sat = get<bool>(j, "use_sat");
  c.use_temp_hist = get<bool>(j, "use_temp_hist");
  c.use_humid_hist = get<bool>(j, "use_humid_hist");
  c.use_temp_fc = get<bool>(j, "use_temp_fc");
  c.use_humid_fc = get<bool>(j, "use_humid_fc");
  c.sat_lags_current = get<int>(j, "sat_lags_current");
  c.sat_daily_lag = get<bool>(j, "sat_daily_lag");
  const auto source = get<std::string>(j, "source");
  if (source == "satellite") {
    c.source = LagSource::satellite;
  } else if (source == "ground") {
    c.source = LagSource::ground;
  } else {
    throw IntegrityError("unknown lag source '" + source + "'");
  }
  try {
    c.validate();
  } catch (const ParameterError& e) {
    throw IntegrityError(std::string("feature config: ") + e.what());
  }
  return c;
}

Json to_json(const Normalization& n) { return {{"mean", n.mean}, {"scale", n.scale}}; }

Normalization normalization_from_json(const Json& j, std::size_t dim) {
  Normalization n;
  n.mean = get<std::vector<double>>(j, "mean");
  n.scale = get<std::vector<double>>(j, "scale");
  if (n.mean.size() != dim || n.scale.size() != dim) {
    throw IntegrityError("normalization has " + std::to_string(n.mean.size()) + " entries, expected " +
                         std::to_string(dim));
  }
  check_finite(n.mean, "normalization mean");
  check_finite(n.scale, "normalization scale");
  for (double s : n.scale) {
    if (s <= 0.0) throw IntegrityError("normalization scale must be positive");
  }
  return n;
}

Json to_json(const MlpModel& m) {
  Json layers = Json::array();
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    const auto& w = m.weights[l];
    std::vector<double> flat;  // row-major
    flat.reserve(static_cast<std::size_t>(w.size()));
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) flat.push_back(w(r, c));
    }
    layers.push_back({{"weights", flat}, {"bias", to_vec(m.biases[l])}});
  }
  return {{"kind", "mlp"}, {"layer_sizes", m.layer_sizes}, {"layers", layers}};
}

MlpModel mlp_from_json(const Json& j) {
  expect_kind(j, "mlp");
  MlpModel m;
  m.layer_sizes = get<std::vector<int>>(j, "layer_sizes");
  if (m.layer_sizes.size() < 2) throw IntegrityError("network needs at least two layers");
  for (int s : m.layer_sizes) {
    if (s < 1) throw IntegrityError("layer sizes must be positive");
  }
  const Json& layers = j.at("layers");
  if (!layers.is_array() || layers.size() + 1 != m.layer_sizes.size()) {
    throw IntegrityError("network layer count does not match layer_sizes");
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto rows = m.layer_sizes[l + 1], cols = m.layer_sizes[l];
    const auto flat = get<std::vector<double>>(layers[l], "weights");
    const auto bias = get<std::vector<double>>(layers[l], "bias");
    if (flat.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) ||
        bias.size() != static_cast<std::size_t>(rows)) {
      throw IntegrityError("layer " + std::to_string(l) + " has the wrong number of parameters");
    }
    Eigen::MatrixXd w(rows, cols);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) w(r, c) = flat[static_cast<std::size_t>(r) * cols + c];
    }
    m.weights.push_back(std::move(w));
    m.biases.push_back(from_vec(bias));
  }
  try {
    m.validate();
  } catch (const ParameterError& e) {
    throw IntegrityError(std::string("network: ") + e.what());
  }
  return m;
}

Json to_json(const LinearArxModel& m) {
  return {{"kind", "linear"}, {"coefficients", to_vec(m.coefficients)}, {"intercept", m.intercept}};
}

LinearArxModel linear_from_json(const Json& j, std::size_t dim) {
  expect_kind(j, "linear");
  LinearArxModel m;
  const auto coef = get<std::vector<double>>(j, "coefficients");
  if (coef.size() != dim) {
    throw IntegrityError("linear model has " + std::to_string(coef.size()) + " coefficients, expected " +
                         std::to_string(dim));
  }
  m.coefficients = from_vec(coef);
  m.intercept = get<double>(j, "intercept");
  if (!m.finite()) throw IntegrityError("linear model has non-finite parameters");
  return m;
}

Json to_json(const GbtModel& m) {
  Json trees = Json::array();
  for (const auto& t : m.trees) {
    Json nodes = Json::array();
    for (const auto& n : t.nodes) {
      if (n.feature < 0) {
        nodes.push_back({{"value", n.value}});
      } else {
        nodes.push_back({{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right}});
      }
    }
    trees.push_back(std::move(nodes));
  }
  return {{"kind", "gbt"}, {"base", m.base}, {"shrinkage", m.shrinkage}, {"trees", trees}};
}

GbtModel gbt_from_json(const Json& j, std::size_t dim) {
  expect_kind(j, "gbt");
  GbtModel m;
  m.base = get<double>(j, "base");
  m.shrinkage = get<double>(j, "shrinkage");
  if (!std::isfinite(m.base) || !std::isfinite(m.shrinkage)) throw IntegrityError("non-finite GBT constants");
  for (const auto& jt : j.at("trees")) {
    RegressionTree t;
    for (const auto& jn : jt) {
      TreeNode n;
      if (jn.contains("value")) {
        n.value = get<double>(jn, "value");
      } else {
        n.feature = get<int>(jn, "feature");
        n.threshold = get<double>(jn, "threshold");
        n.left = get<int>(jn, "left");
        n.right = get<int>(jn, "right");
      }
      t.nodes.push_back(n);
    }
    const auto size = static_cast<int>(t.nodes.size());
    if (size == 0) throw IntegrityError("empty regression tree");
    for (int i = 0; i < size; ++i) {
      const auto& n = t.nodes[static_cast<std::size_t>(i)];
      if (n.feature < 0) continue;
      // Children come after their parent, which also rules out cycles.
      if (static_cast<std::size_t>(n.feature) >= dim || n.left <= i || n.right <= i || n.left >= size ||
          n.right >= size) {
        throw IntegrityError("malformed regression tree node " + std::to_string(i));
      }
    }
    m.trees.push_back(std::move(t));
  }
  return m;
}

Json to_json(const TrainTrace& trace) {
  Json starts = Json::array();
  for (const auto& s : trace.starts) {
    Json epochs = Json::array();
    for (const auto& e : s.epochs) epochs.push_back({e.epoch, e.train_mse, e.val_mse});
    starts.push_back({{"aborted", s.aborted},
                      {"best_epoch", s.best_epoch},
                      {"best_val_mse", std::isfinite(s.best_val_mse) ? Json(s.best_val_mse) : Json(nullptr)},
                      {"epochs", epochs}});
  }
  return {{"best_start", trace.best_start}, {"starts", starts}};
}

Json to_json(const NeuralForecaster& f) {
  return {{"kind", "neural-forecaster"},
          {"features", to_json(f.features)},
          {"normalization", to_json(f.normalization)},
          {"network", to_json(f.mlp)},
          {"train_sites", f.train_sites}};
}

NeuralForecaster neural_from_json(const Json& j) {
  expect_kind(j, "neural-forecaster");
  NeuralForecaster f;
  f.features = feature_config_from_json(j.at("features"));
  const std::size_t dim = f.features.input_dim();
  f.normalization = normalization_from_json(j.at("normalization"), dim);
  f.mlp = mlp_from_json(j.at("network"));
  if (static_cast<std::size_t>(f.mlp.input_dim()) != dim || f.mlp.output_dim() != kHorizons) {
    throw IntegrityError("network shape does not match its feature layout");
  }
  f.train_sites = get<std::vector<std::string>>(j, "train_sites");
  return f;
}

std::string local_key_filename(const LocalKey& key) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "h%02d_p%d.json", key.issue_hour, key.horizon);
  return key.site_id + "_" + buf;
}

Json local_key_artifact(const LocalSuite& suite, const LocalKey& key) {
  Json model;
  if (suite.family == LocalFamily::linear) {
    model = to_json(suite.linear.at(key));
  } else if (suite.family == LocalFamily::gbt) {
    model = to_json(suite.gbt.at(key));
  } else {
    throw ParameterError("per-key artifacts exist only for linear and GBT suites");
  }
  return {{"kind", "local-model"},
          {"family", to_string(suite.family)},
          {"site_id", key.site_id},
          {"issue_hour", key.issue_hour},
          {"horizon", key.horizon},
          {"features", to_json(suite.features)},
          {"normalization", to_json(suite.normalization.at(key.site_id))},
          {"model", model}};
}

void save_local_suite(const LocalSuite& suite, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  Json files = Json::array();
  if (suite.family == LocalFamily::local_mlp) {
    for (const auto& [site, f] : suite.neural) {
      const std::string name = site + ".json";
      write_json(dir / name, to_json(f));
      write_json(dir / (site + ".trace.json"), to_json(f.trace));
      files.push_back(name);
    }
  } else {
    auto save = [&](const auto& models) {
      for (const auto& [key, m] : models) {
        const std::string name = local_key_filename(key);
        write_json(dir / name, local_key_artifact(suite, key));
        files.push_back(name);
      }
    };
    if (suite.family == LocalFamily::linear) {
      save(suite.linear);
    } else {
      save(suite.gbt);
    }
  }
  Json untrained = Json::array();
  for (const auto& k : suite.untrained) untrained.push_back({k.site_id, k.issue_hour, k.horizon});
  write_json(dir / "index.json", {{"kind", "local-suite"},
                                  {"family", to_string(suite.family)},
                                  {"features", to_json(suite.features)},
                                  {"artifacts", files},
                                  {"untrained", untrained}});
}

LocalSuite load_local_suite(const std::filesystem::path& dir) {
  const Json index = read_json(dir / "index.json");
  expect_kind(index, "local-suite");
  LocalSuite suite;
  suite.family = parse_local_family(get<std::string>(index, "family"));
  suite.features = feature_config_from_json(index.at("features"));
  const std::size_t dim = suite.features.input_dim();
  const std::size_t hdim = horizon_dim(suite.features);
  for (const auto& name : get<std::vector<std::string>>(index, "artifacts")) {
    const Json j = read_json(dir / name);
    if (suite.family == LocalFamily::local_mlp) {
      NeuralForecaster f = neural_from_json(j);
      if (f.train_sites.size() != 1) throw IntegrityError(name + ": a local network belongs to exactly one site");
      if (!(f.features == suite.features)) throw IntegrityError(name + ": feature layout differs from the index");
      suite.neural.emplace(f.train_sites.front(), std::move(f));
      continue;
    }
    expect_kind(j, "local-model");
    if (parse_local_family(get<std::string>(j, "family")) != suite.family) {
      throw IntegrityError(name + ": family differs from the index");
    }
    if (!(feature_config_from_json(j.at("features")) == suite.features)) {
      throw IntegrityError(name + ": feature layout differs from the index");
    }
    const LocalKey key{get<std::string>(j, "site_id"), get<int>(j, "issue_hour"), get<int>(j, "horizon")};
    if (key.issue_hour < 0 || key.issue_hour > 23 || key.horizon < 1 || key.horizon > kHorizons) {
      throw IntegrityError(name + ": key out of range");
    }
    auto norm = normalization_from_json(j.at("normalization"), dim);
    suite.normalization.try_emplace(key.site_id, std::move(norm));
    if (suite.family == LocalFamily::linear) {
      suite.linear.emplace(key, linear_from_json(j.at("model"), hdim));
    } else {
      suite.gbt.emplace(key, gbt_from_json(j.at("model"), hdim));
    }
  }
  for (const auto& u : index.at("untrained")) {
    suite.untrained.push_back({u.at(0).get<std::string>(), u.at(1).get<int>(), u.at(2).get<int>()});
  }
  return suite;
}

void write_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(1) << '\n';
  if (!out) throw DataError("write failed for " + path.string());
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LookupError("missing artifact " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace solarcast
