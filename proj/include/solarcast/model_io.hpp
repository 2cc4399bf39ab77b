#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "solarcast/features.hpp"
#include "solarcast/gbt.hpp"
#include "solarcast/linear_arx.hpp"
#include "solarcast/mlp.hpp"
#include "solarcast/suites.hpp"

namespace solarcast {

using Json = nlohmann::json;

// Artifacts are JSON documents tagged with a "kind". Readers re-check shapes
// and throw IntegrityError on anything inconsistent.

Json to_json(const FeatureConfig& cfg);
FeatureConfig feature_config_from_json(const Json& j);

Json to_json(const Normalization& norm);
Normalization normalization_from_json(const Json& j, std::size_t dim);

Json to_json(const MlpModel& model);
MlpModel mlp_from_json(const Json& j);

Json to_json(const LinearArxModel& model);
LinearArxModel linear_from_json(const Json& j, std::size_t dim);

Json to_json(const GbtModel& model);
GbtModel gbt_from_json(const Json& j, std::size_t dim);

Json to_json(const TrainTrace& trace);

Json to_json(const NeuralForecaster& f);
NeuralForecaster neural_from_json(const Json& j);

// One artifact per (site, issue hour, horizon) model for linear/GBT: the
// model plus the site's feature scaling and layout.
Json local_key_artifact(const LocalSuite& suite, const LocalKey& key);
std::string local_key_filename(const LocalKey& key);

// Writes a suite into `dir`: per-key artifacts (or per-site networks) and an
// index.json listing them and the untrained keys.
void save_local_suite(const LocalSuite& suite, const std::filesystem::path& dir);
LocalSuite load_local_suite(const std::filesystem::path& dir);

void write_json(const std::filesystem::path& path, const Json& j);
Json read_json(const std::filesystem::path& path);

}  // namespace solarcast
