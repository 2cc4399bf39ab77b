#include <gtest/gtest.h>

#include "solarcast/errors.hpp"
#include "solarcast/time.hpp"

using namespace solarcast;
using namespace std::chrono;

TEST(Time, MakeHourAndFields) {
  const UtcHour h = make_hour(2017, 6, 21, 12);
  EXPECT_EQ(hour_of_day(h), 12);
  EXPECT_EQ(year_of(h), 2017);
  EXPECT_EQ(day_of_year(h), 172);
  EXPECT_EQ(day_of(h), sys_days{2017y / 6 / 21});
  EXPECT_EQ(make_hour(1970, 1, 1, 0).value, 0);
  EXPECT_EQ((h + 12) - h, 12);
  EXPECT_EQ(hour_of_day(h + 12), 0);
}

TEST(Time, SlotMidpointIsHalfPast) {
  const UtcHour h = make_hour(2016, 2, 29, 23);
  EXPECT_EQ(slot_midpoint(h) - slot_start(h), minutes{30});
}

TEST(Time, IsoRoundTrip) {
  const UtcHour h = parse_iso_hour("2015-12-31T23:00:00Z");
  EXPECT_EQ(format_iso_hour(h), "2015-12-31T23:00:00Z");
  EXPECT_EQ(h + 1, make_hour(2016, 1, 1, 0));
  EXPECT_EQ(format_date(parse_date("2016-02-29")), "2016-02-29");
}

TEST(Time, RejectsMalformedTimestamps) {
  EXPECT_THROW(parse_iso_hour("2015-12-31 23:00:00"), ParseError);
  EXPECT_THROW(parse_iso_hour("2015-12-31T23:30:00Z"), ParseError);
  EXPECT_THROW(parse_iso_hour("2015-02-30T01:00:00Z"), ParseError);
  EXPECT_THROW(parse_iso_hour("2015-12-31T24:00:00Z"), ParseError);
  EXPECT_THROW(parse_date("2015-13-01"), ParseError);
}
