#include <gtest/gtest.h>

#include "solarcast/dataset.hpp"
#include "solarcast/errors.hpp"
#include "solarcast/synth.hpp"
#include "test_util.hpp"

using namespace solarcast;
using namespace std::chrono;
namespace fs = std::filesystem;

namespace {

const char* kObsHeader = "site_id,timestamp,lat,lon,ghi_ground,ghi_sat,temp,humidity\n";
const char* kNwpHeader = "site_id,issue_time,horizon_h,ghi_nwp,temp_nwp,humidity_nwp\n";

SynthConfig tiny_synth() {
  SynthConfig c;
  c.n_sites = 3;
  c.first_day = sys_days{2016y / 6 / 1};
  c.last_day = sys_days{2016y / 6 / 10};
  c.seed = 7;
  return c;
}

std::vector<SiteSeries> load(const fs::path& obs, const fs::path& nwp, LoadOptions o = {}) {
  const std::vector<fs::path> files{obs, nwp};
  return load_sites(files, o);
}

}  // namespace

TEST(MaybeSeries, PresenceIsExplicit) {
  MaybeSeries s(3);
  EXPECT_FALSE(s.has(1));
  EXPECT_FALSE(s[1].has_value());
  s.set(1, 4.5);
  EXPECT_EQ(*s[1], 4.5);
  EXPECT_EQ(s.count_present(), 1u);
  s.clear(1);
  EXPECT_EQ(s.count_present(), 0u);
}

TEST(NwpTable, LatestIssuanceWins) {
  NwpTable t(10, 6);
  t.mark_issued(2);
  for (int lead = 1; lead <= 6; ++lead) t.set(2, lead, 100.0 + lead);
  t.mark_issued(4);
  for (int lead = 1; lead <= 6; ++lead) t.set(4, lead, 200.0 + lead);
  // At h = 4 the issuance from 4 covers leads 1..6.
  EXPECT_EQ(*t.latest_for(4, 3), 203.0);
  // At h = 3 only the issuance from 2 is available: target 3 + 2 = lead 3.
  EXPECT_EQ(*t.latest_for(3, 2), 103.0);
  // Lead 6 from issue 2 reaches slot 8; at h = 3, p = 6 needs lead 7.
  EXPECT_FALSE(t.latest_for(3, 6).has_value());
  EXPECT_FALSE(t.latest_for(1, 1).has_value());
}

TEST(Dataset, CsvRoundTripPreservesChannels) {
  const fs::path dir = scratch_dir();
  const auto sites = gen_dataset(tiny_synth());
  write_observations_csv(sites, dir / "obs.csv");
  write_nwp_csv(sites, dir / "nwp.csv");
  const auto back = load(dir / "obs.csv", dir / "nwp.csv");
  ASSERT_EQ(back.size(), sites.size());
  for (std::size_t s = 0; s < sites.size(); ++s) {
    const auto& a = sites[s];
    const auto& b = back[s];
    EXPECT_EQ(a.site_id, b.site_id);
    ASSERT_EQ(a.size(), b.size());
    EXPECT_EQ(a.start, b.start);
    for (std::size_t i = 0; i < a.size(); ++i) {
      ASSERT_EQ(a.ground.has(i), b.ground.has(i));
      if (a.ground.has(i)) EXPECT_NEAR(a.ground.value(i), b.ground.value(i), 1e-9 * (1 + a.ground.value(i)));
      ASSERT_EQ(a.satellite.has(i), b.satellite.has(i));
      EXPECT_NEAR(a.clearsky[i], b.clearsky[i], 1e-6);
      for (int p = 1; p <= kHorizons; ++p) {
        const auto x = a.nwp_ghi.latest_for(i, p), y = b.nwp_ghi.latest_for(i, p);
        ASSERT_EQ(x.has_value(), y.has_value());
        if (x) EXPECT_NEAR(*x, *y, 1e-9 * (1 + *x));
      }
    }
  }
  // Writing the reloaded data reproduces the files byte for byte.
  write_observations_csv(back, dir / "obs2.csv");
  write_nwp_csv(back, dir / "nwp2.csv");
  EXPECT_EQ(read_text(dir / "obs.csv"), read_text(dir / "obs2.csv"));
  EXPECT_EQ(read_text(dir / "nwp.csv"), read_text(dir / "nwp2.csv"));
}

TEST(Dataset, UnorderedRowsAreCanonicalised) {
  const fs::path dir = scratch_dir();
  write_text(dir / "obs.csv", std::string(kObsHeader) +
                                  "B,2016-06-01T01:00:00Z,52,5,10,11,15,70\n"
                                  "A,2016-06-01T00:00:00Z,51,4,0,0,14,80\n"
                                  "B,2016-06-01T00:00:00Z,52,5,0,,15,71\n");
  write_text(dir / "nwp.csv", kNwpHeader);
  const auto sites = load(dir / "obs.csv", dir / "nwp.csv");
  ASSERT_EQ(sites.size(), 2u);
  EXPECT_EQ(sites[0].site_id, "A");
  EXPECT_EQ(sites[1].size(), 2u);
  EXPECT_FALSE(sites[1].satellite.has(0));
  EXPECT_EQ(sites[1].ground.value(1), 10.0);

  LoadOptions strict;
  strict.strict_order = true;
  EXPECT_THROW(load(dir / "obs.csv", dir / "nwp.csv", strict), IntegrityError);
}

TEST(Dataset, DuplicateTimestampIsIntegrityError) {
  const fs::path dir = scratch_dir();
  write_text(dir / "obs.csv", std::string(kObsHeader) +
                                  "A,2016-06-01T00:00:00Z,51,4,0,0,14,80\n"
                                  "A,2016-06-01T00:00:00Z,51,4,0,0,14,80\n");
  write_text(dir / "nwp.csv", kNwpHeader);
  EXPECT_THROW(load(dir / "obs.csv", dir / "nwp.csv"), IntegrityError);
}

TEST(Dataset, BadRowsReportFileAndLine) {
  const fs::path dir = scratch_dir();
  write_text(dir / "obs.csv", std::string(kObsHeader) +
                                  "A,2016-06-01T00:00:00Z,51,4,0,0,14,80\n"
                                  "A,2016-06-01T01:00:00Z,51,4,abc,0,14,80\n");
  write_text(dir / "nwp.csv", kNwpHeader);
  try {
    load(dir / "obs.csv", dir / "nwp.csv");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("obs.csv:3"), std::string::npos) << e.what();
  }
}

TEST(Dataset, NegativeIrradianceAndMovingSitesRejected) {
  const fs::path dir = scratch_dir();
  write_text(dir / "nwp.csv", kNwpHeader);
  write_text(dir / "neg.csv", std::string(kObsHeader) + "A,2016-06-01T00:00:00Z,51,4,-3,0,14,80\n");
  EXPECT_THROW(load(dir / "neg.csv", dir / "nwp.csv"), IntegrityError);
  write_text(dir / "move.csv", std::string(kObsHeader) +
                                   "A,2016-06-01T00:00:00Z,51,4,0,0,14,80\n"
                                   "A,2016-06-01T01:00:00Z,51.5,4,0,0,14,80\n");
  EXPECT_THROW(load(dir / "move.csv", dir / "nwp.csv"), IntegrityError);
}

TEST(Dataset, NwpForUnknownSiteIsLookupError) {
  const fs::path dir = scratch_dir();
  write_text(dir / "obs.csv", std::string(kObsHeader) + "A,2016-06-01T00:00:00Z,51,4,0,0,14,80\n");
  write_text(dir / "nwp.csv", std::string(kNwpHeader) + "Z,2016-06-01T00:00:00Z,1,0,14,80\n");
  EXPECT_THROW(load(dir / "obs.csv", dir / "nwp.csv"), LookupError);
}

TEST(Dataset, UnknownHeaderIsParseError) {
  const fs::path dir = scratch_dir();
  write_text(dir / "obs.csv", "a,b,c\n1,2,3\n");
  write_text(dir / "nwp.csv", kNwpHeader);
  EXPECT_THROW(load(dir / "obs.csv", dir / "nwp.csv"), ParseError);
}

TEST(Split, PartitionsByDay) {
  SiteSeries s;
  s.start = make_hour(2014, 1, 1, 0);
  s.allocate(24 * 365 * 4 + 24);
  const auto split = split_time(s, SplitBoundaries::paper_default());
  EXPECT_EQ(split.train.size(), 24u * 730);
  EXPECT_EQ(split.validation.size(), 24u * 366);
  EXPECT_EQ(split.test.size(), 24u * 365);
  EXPECT_EQ(s.timestamp(split.validation.front()), make_hour(2016, 1, 1, 0));
  EXPECT_EQ(s.timestamp(split.test.back()), make_hour(2017, 12, 31, 23));
}

TEST(Split, OverlapOrEmptyRangeRejected) {
  SiteSeries s;
  s.start = make_hour(2014, 1, 1, 0);
  s.allocate(48);
  auto b = SplitBoundaries::paper_default();
  b.validation.first = sys_days{2015y / 6 / 1};
  EXPECT_THROW(split_time(s, b), ParameterError);
  b = SplitBoundaries::paper_default();
  b.test = {sys_days{2017y / 2 / 1}, sys_days{2017y / 1 / 1}};
  EXPECT_THROW(split_time(s, b), ParameterError);
}

TEST(Partition, UnknownTrainSiteRejected) {
  const auto sites = gen_dataset(tiny_synth());
  const std::vector<std::string> ok{"S02"};
  const auto p = partition_sites(sites, ok);
  EXPECT_EQ(p.train_sites, ok);
  EXPECT_EQ(p.eval_sites, (std::vector<std::string>{"S01", "S03"}));
  const std::vector<std::string> bad{"S99"};
  EXPECT_THROW(partition_sites(sites, bad), LookupError);
}

TEST(Masks, ElevationAndCompleteness) {
  auto sites = gen_dataset(tiny_synth());
  SiteSeries& s = sites[0];
  const auto elev = elevation_filter(s, 3.0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_EQ(elev[i], slot_elevation_deg(s.location, s.timestamp(i)) >= 3.0);
  }
  const std::size_t noon = 12;
  s.ground.clear(noon);
  const Channel req[] = {Channel::ground, Channel::nwp_ghi};
  const auto complete = drop_incomplete(s, req);
  EXPECT_FALSE(complete[noon]);
  const auto both = mask_and(elev, complete);
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(both[i], elev[i] && complete[i]);
  EXPECT_THROW(mask_and(elev, SlotMask(3)), ParameterError);
}
