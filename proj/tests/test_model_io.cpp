#include <gtest/gtest.h>

#include "small_world.hpp"
#include "solarcast/errors.hpp"
#include "solarcast/model_io.hpp"
#include "test_util.hpp"

using namespace solarcast;

namespace {

Eigen::MatrixXd random_rows(Rng& rng, int n, int d) {
  Eigen::MatrixXd m(n, d);
  for (Eigen::Index k = 0; k < m.size(); ++k) m(k) = rng.normal();
  return m;
}

// Serialises and parses back through text, as a file round trip would.
Json through_text(const Json& j) { return Json::parse(j.dump(1)); }

}  // namespace

TEST(ModelIo, FeatureConfigRoundTrip) {
  FeatureConfig c = FeatureConfig::local_default();
  c.use_temp_fc = true;
  c.sat_lags_current = 2;
  EXPECT_EQ(feature_config_from_json(through_text(to_json(c))), c);
  Json bad = to_json(c);
  bad["sat_lags_current"] = 9;
  EXPECT_THROW(feature_config_from_json(bad), IntegrityError);
  bad = to_json(c);
  bad.erase("use_nwp");
  EXPECT_THROW(feature_config_from_json(bad), IntegrityError);
}

TEST(ModelIo, MlpRoundTripIsExact) {
  Rng rng(3);
  const MlpModel m = make_mlp({5, 7, 4, 6}, rng);
  const MlpModel back = mlp_from_json(through_text(to_json(m)));
  ASSERT_EQ(back.layer_sizes, m.layer_sizes);
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    EXPECT_EQ(back.weights[l], m.weights[l]);
    EXPECT_EQ(back.biases[l], m.biases[l]);
  }
}

TEST(ModelIo, MlpShapeCorruptionRejected) {
  Rng rng(3);
  const Json good = to_json(make_mlp({3, 4, 6}, rng));
  Json j = good;
  j["layers"][0]["weights"].erase(0);
  EXPECT_THROW(mlp_from_json(j), IntegrityError);
  j = good;
  j["layer_sizes"] = {3, 5, 6};
  EXPECT_THROW(mlp_from_json(j), IntegrityError);
  j = good;
  j["kind"] = "gbt";
  EXPECT_THROW(mlp_from_json(j), IntegrityError);
  j = good;
  j["layers"].erase(1);
  EXPECT_THROW(mlp_from_json(j), IntegrityError);
}

TEST(ModelIo, LinearRoundTrip) {
  Rng rng(4);
  const Eigen::MatrixXd x = random_rows(rng, 40, 3);
  Eigen::VectorXd y(40);
  for (int i = 0; i < 40; ++i) y[i] = x(i, 0) - 2 * x(i, 2) + rng.normal();
  const LinearArxModel m = fit_linear_arx(x, y, 0.0);
  const LinearArxModel back = linear_from_json(through_text(to_json(m)), 3);
  EXPECT_EQ(back.coefficients, m.coefficients);
  EXPECT_EQ(back.intercept, m.intercept);
  EXPECT_THROW(linear_from_json(to_json(m), 4), IntegrityError);
}

TEST(ModelIo, GbtRoundTripPredictsIdentically) {
  Rng rng(5);
  const Eigen::MatrixXd x = random_rows(rng, 120, 2);
  Eigen::VectorXd y(120);
  for (int i = 0; i < 120; ++i) y[i] = (x(i, 0) > 0 ? 3.0 : -1.0) + x(i, 1) * x(i, 1);
  GbtParams params;
  params.n_trees = 20;
  const GbtModel m = fit_gbt(x, y, params);
  const GbtModel back = gbt_from_json(through_text(to_json(m)), 2);
  for (int i = 0; i < 120; ++i) {
    const double row[] = {x(i, 0), x(i, 1)};
    EXPECT_EQ(back.predict(row), m.predict(row));
  }
}

TEST(ModelIo, GbtNodeCorruptionRejected) {
  Rng rng(5);
  const Eigen::MatrixXd x = random_rows(rng, 60, 2);
  Eigen::VectorXd y = x.col(0);
  GbtParams params;
  params.n_trees = 2;
  const Json good = to_json(fit_gbt(x, y, params));
  EXPECT_THROW(gbt_from_json(good, 0), IntegrityError);  // split feature out of range
  Json j = good;
  j["trees"][0][0]["left"] = 0;  // child pointing at its parent
  EXPECT_THROW(gbt_from_json(j, 2), IntegrityError);
  j = good;
  j["trees"][0][0]["right"] = 999;
  EXPECT_THROW(gbt_from_json(j, 2), IntegrityError);
}

TEST(ModelIo, NormalizationChecks) {
  Normalization n{{1.0, 2.0}, {0.5, 1.0}};
  const Normalization back = normalization_from_json(through_text(to_json(n)), 2);
  EXPECT_EQ(back.mean, n.mean);
  EXPECT_EQ(back.scale, n.scale);
  EXPECT_THROW(normalization_from_json(to_json(n), 3), IntegrityError);
  n.scale[0] = 0.0;
  EXPECT_THROW(normalization_from_json(to_json(n), 2), IntegrityError);
}

TEST(ModelIo, NeuralForecasterRoundTrip) {
  SmallWorld w(1);
  NeuralSettings s;
  s.hidden = {6};
  s.train.max_epochs = 5;
  s.train.patience = 2;
  s.train.n_starts = 1;
  const NeuralForecaster f = train_global(w.prepared, w.split, s);
  const NeuralForecaster back = neural_from_json(through_text(to_json(f)));
  EXPECT_EQ(back.features, f.features);
  EXPECT_EQ(back.train_sites, f.train_sites);
  const auto test = build_samples(w.sites[0], f.features, w.prepared[0].retained, w.split.test);
  EXPECT_EQ(back.predict_batch(test), f.predict_batch(test));

  Json j = to_json(f);
  j["features"]["sat_lags_current"] = 2;  // network still expects 22 inputs
  EXPECT_THROW(neural_from_json(j), IntegrityError);
}

TEST(ModelIo, LocalSuiteDirectoryRoundTrip) {
  SmallWorld w(2);
  const auto dir = scratch_dir();
  for (auto family : {LocalFamily::linear, LocalFamily::gbt}) {
    LocalSuiteParams params;
    params.issue_hours = {10, 12, 2};
    params.gbt.n_trees = 5;
    const LocalSuite suite = train_local_suite(w.prepared, w.split, family, params);
    const auto sub = dir / to_string(family);
    save_local_suite(suite, sub);
    EXPECT_TRUE(std::filesystem::exists(sub / local_key_filename({w.sites[0].site_id, 10, 3})));
    const LocalSuite back = load_local_suite(sub);
    EXPECT_EQ(back.family, family);
    EXPECT_EQ(back.model_count(), suite.model_count());
    EXPECT_EQ(back.untrained, suite.untrained);
    for (std::size_t i = 0; i < w.sites.size(); ++i) {
      const auto test = build_samples(w.sites[i], suite.features, w.prepared[i].retained, w.split.test);
      for (const auto& s : test.samples) EXPECT_EQ(back.predict(s), suite.predict(s));
    }
  }
}

TEST(ModelIo, LocalKeyFilename) { EXPECT_EQ(local_key_filename({"S01", 8, 1}), "S01_h08_p1.json"); }

TEST(ModelIo, FileErrors) {
  const auto dir = scratch_dir();
  EXPECT_THROW(read_json(dir / "absent.json"), LookupError);
  write_text(dir / "broken.json", "{\"kind\": ");
  EXPECT_THROW(read_json(dir / "broken.json"), ParseError);
  EXPECT_THROW(load_local_suite(dir), LookupError);
  write_json(dir / "index.json", Json{{"kind", "mlp"}});
  EXPECT_THROW(load_local_suite(dir), IntegrityError);
}
