#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include <gtest/gtest.h>

#include "solarcast/errors.hpp"
#include "solarcast/hyperopt.hpp"
#include "test_util.hpp"

using namespace solarcast;

namespace {

SearchSpace interval(double lo, double hi) { return {{Dimension::uniform("theta", lo, hi)}}; }

double quadratic(const HyperPoint& p) { return std::pow(p.at("theta") - 3.0, 2); }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

TEST(SearchSpace, Validation) {
  EXPECT_NO_THROW(SearchSpace::paper_default().validate());
  EXPECT_THROW(interval(1, 1).validate(), ParameterError);
  EXPECT_THROW(SearchSpace{{Dimension::log_uniform("lr", 0, 1)}}.validate(), ParameterError);
  EXPECT_THROW(SearchSpace{{Dimension::categorical("c", {})}}.validate(), ParameterError);
  EXPECT_THROW((SearchSpace{{Dimension::uniform("a", 0, 1), Dimension::uniform("a", 0, 1)}}.validate()),
               ParameterError);
  EXPECT_THROW((SearchSpace{{Dimension::uniform("b", 0, 1).when("a", 1), Dimension::integer("a", 0, 2)}}.validate()),
               ParameterError);
}

TEST(SearchSpace, HashTracksDefinition) {
  EXPECT_EQ(interval(0, 1).hash(), interval(0, 1).hash());
  EXPECT_NE(interval(0, 1).hash(), interval(0, 2).hash());
}

TEST(SearchSpace, ConditionalDimensions) {
  const SearchSpace s = SearchSpace::paper_default();
  Rng rng(1);
  std::set<int> depths;
  for (int i = 0; i < 200; ++i) {
    const HyperPoint p = random_point(s, rng);
    ASSERT_TRUE(s.contains(p));
    const int layers = static_cast<int>(p.at("hidden_layers"));
    depths.insert(layers);
    EXPECT_EQ(p.count("neurons_2"), layers >= 2 ? 1u : 0u);
    EXPECT_EQ(p.count("neurons_3"), layers >= 3 ? 1u : 0u);
    EXPECT_EQ(p.count("neurons_4"), layers >= 4 ? 1u : 0u);
    EXPECT_EQ(p.at("neurons_1"), std::round(p.at("neurons_1")));
  }
  EXPECT_EQ(depths, (std::set<int>{1, 2, 3, 4}));
  HyperPoint p = random_point(s, rng);
  p["learning_rate"] = 0.5;
  EXPECT_FALSE(s.contains(p));
}

TEST(Smbo, TpeProposalsStayInsideConditionalSpace) {
  const SearchSpace s = SearchSpace::paper_default();
  SmboOptions opt;
  opt.trials = 30;
  opt.seed = 4;
  const auto r = smbo_optimize(
      [](const HyperPoint& p) { return std::abs(std::log10(p.at("learning_rate")) + 3) + p.at("dropout"); }, s, opt);
  for (const auto& t : r.history.trials) EXPECT_TRUE(s.contains(t.theta)) << t.index;
}

TEST(Smbo, SingleTrialReturnsIt) {
  int calls = 0;
  SmboOptions opt;
  opt.trials = 1;
  const auto r = smbo_optimize(
      [&](const HyperPoint& p) {
        ++calls;
        return quadratic(p);
      },
      interval(0, 10), opt);
  EXPECT_EQ(calls, 1);
  ASSERT_EQ(r.history.size(), 1u);
  EXPECT_EQ(r.best, r.history.trials[0].theta);
  EXPECT_EQ(r.best_performance, r.history.trials[0].performance);
}

TEST(Smbo, ExhaustsSmallCategoricalSpace) {
  const SearchSpace s{{Dimension::categorical("c", {0, 1, 2, 3, 4, 5, 6, 7})}};
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SmboOptions opt;
    opt.trials = 8;
    opt.seed = seed;
    const auto r = smbo_optimize([](const HyperPoint& p) { return std::abs(p.at("c") - 5.0); }, s, opt);
    std::set<double> seen;
    for (const auto& t : r.history.trials) seen.insert(t.theta.at("c"));
    EXPECT_EQ(seen.size(), 8u) << "seed " << seed;
    EXPECT_EQ(r.best.at("c"), 5.0);
    EXPECT_EQ(r.best_performance, 0.0);
  }
}

TEST(Smbo, SingleChoiceCategorical) {
  const SearchSpace s{{Dimension::categorical("c", {3}), Dimension::uniform("x", 0, 1)}};
  SmboOptions opt;
  opt.trials = 6;
  const auto r = smbo_optimize([](const HyperPoint& p) { return p.at("x"); }, s, opt);
  for (const auto& t : r.history.trials) EXPECT_EQ(t.theta.at("c"), 3.0);
}

TEST(Smbo, TpeBeatsRandomSearchOnQuadratic) {
  std::vector<double> tpe, rnd;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    SmboOptions opt;
    opt.trials = 50;
    opt.seed = seed;
    tpe.push_back(smbo_optimize(quadratic, interval(0, 10), opt).best_performance);
    Rng rng(derive_seed(seed, "random-search"));
    double best = INFINITY;
    for (int i = 0; i < 50; ++i) best = std::min(best, quadratic(random_point(interval(0, 10), rng)));
    rnd.push_back(best);
  }
  EXPECT_LE(median(tpe), median(rnd));
}

TEST(Tpe, ProposesNearTheGoodRegion) {
  const SearchSpace s = interval(0, 1);
  int low = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    TrialHistory h;
    for (int i = 0; i < 20; ++i) {
      const HyperPoint p = random_point(s, rng);
      h.trials.push_back({i, p, p.at("theta"), 0.0});
    }
    if (tpe_suggest(h, s, TpeParams{}, rng).at("theta") < 0.5) ++low;
  }
  EXPECT_GE(low, 90);
}

TEST(Smbo, ReproducibleForSeed) {
  SmboOptions opt;
  opt.trials = 15;
  opt.seed = 11;
  const auto a = smbo_optimize(quadratic, interval(0, 10), opt);
  const auto b = smbo_optimize(quadratic, interval(0, 10), opt);
  for (int i = 0; i < 15; ++i) EXPECT_EQ(a.history.trials[i].theta, b.history.trials[i].theta);
  opt.seed = 12;
  const auto c = smbo_optimize(quadratic, interval(0, 10), opt);
  EXPECT_NE(a.history.trials[0].theta, c.history.trials[0].theta);
}

TEST(Smbo, FirstPointIsUsed) {
  SmboOptions opt;
  opt.trials = 3;
  opt.first = HyperPoint{{"theta", 3.0}};
  const auto r = smbo_optimize(quadratic, interval(0, 10), opt);
  EXPECT_EQ(r.history.trials[0].theta.at("theta"), 3.0);
  EXPECT_EQ(r.best_performance, 0.0);
}

TEST(Smbo, FailedTrialsRecordedAsWorst) {
  SmboOptions opt;
  opt.trials = 6;
  int calls = 0;
  const auto r = smbo_optimize(
      [&](const HyperPoint& p) -> double {
        ++calls;
        if (calls == 2) throw TrainingFailure("diverged");
        if (calls == 3) return NAN;
        return quadratic(p);
      },
      interval(0, 10), opt);
  ASSERT_EQ(r.history.size(), 6u);
  EXPECT_EQ(r.history.trials[1].performance, kWorstPerformance);
  EXPECT_EQ(r.history.trials[2].performance, kWorstPerformance);
  EXPECT_LT(r.best_performance, kWorstPerformance);
}

TEST(Smbo, ResumeMatchesUninterruptedRun) {
  const auto dir = scratch_dir();
  SmboOptions opt;
  opt.seed = 21;
  opt.trials = 50;
  const auto full = smbo_optimize(quadratic, interval(0, 10), opt);

  opt.log_path = dir / "trials.jsonl";
  opt.trials = 10;
  smbo_optimize(quadratic, interval(0, 10), opt);
  EXPECT_EQ(read_trial_log(*opt.log_path, interval(0, 10), 21).size(), 10u);
  int calls = 0;
  opt.trials = 50;
  const auto resumed = smbo_optimize(
      [&](const HyperPoint& p) {
        ++calls;
        return quadratic(p);
      },
      interval(0, 10), opt);
  EXPECT_EQ(calls, 40);
  ASSERT_EQ(resumed.history.size(), 50u);
  for (int i = 0; i < 50; ++i) {
    EXPECT_EQ(resumed.history.trials[i].theta, full.history.trials[i].theta) << i;
    EXPECT_EQ(resumed.history.trials[i].performance, full.history.trials[i].performance) << i;
  }
  EXPECT_EQ(resumed.best, full.best);
}

TEST(Smbo, CorruptedLogIsRefused) {
  const auto dir = scratch_dir();
  SmboOptions opt;
  opt.trials = 4;
  opt.seed = 2;
  opt.log_path = dir / "trials.jsonl";
  smbo_optimize(quadratic, interval(0, 10), opt);
  const std::string good = read_text(*opt.log_path);

  write_text(*opt.log_path, good + "{\"index\": 4, \"theta\"\n");
  EXPECT_THROW(smbo_optimize(quadratic, interval(0, 10), opt), DataError);
  EXPECT_THROW(read_trial_log(*opt.log_path, interval(0, 10), 2), DataError);

  write_text(*opt.log_path, good);
  EXPECT_THROW(read_trial_log(*opt.log_path, interval(0, 10), 3), DataError);
  EXPECT_THROW(read_trial_log(*opt.log_path, interval(0, 11), 2), DataError);

  write_text(*opt.log_path, good + "{\"index\": 4, \"theta\"\n");
  opt.restart = true;
  opt.trials = 5;
  EXPECT_EQ(smbo_optimize(quadratic, interval(0, 10), opt).history.size(), 5u);
  EXPECT_EQ(read_trial_log(*opt.log_path, interval(0, 10), 2).size(), 5u);
}
