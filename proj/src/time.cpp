#include "solarcast/time.hpp"

#include <atomic>
#include <charconv>
#include <cstdio>

#include "solarcast/errors.hpp"
#include "solarcast/parallel.hpp"

namespace solarcast {

namespace {

using namespace std::chrono;

int parse_fixed(std::string_view text, std::size_t pos, std::size_t len, std::string_view whole) {
  int value = 0;
  const char* first = text.data() + pos;
  const auto [ptr, ec] = std::from_chars(first, first + len, value);
  if (ec != std::errc{} || ptr != first + len) {
    throw ParseError("malformed timestamp '" + std::string(whole) + "'");
  }
  return value;
}

sys_days checked_date(int y, int m, int d, std::string_view whole) {
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(m)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) throw ParseError("invalid calendar date '" + std::string(whole) + "'");
  return sys_days{ymd};
}

std::atomic<unsigned> g_threads{1};

}  // namespace

void set_thread_count(unsigned n) { g_threads = n == 0 ? 1 : n; }
unsigned thread_count() { return g_threads; }

UtcHour make_hour(int y, unsigned m, unsigned d, int hour) {
  return make_hour(sys_days{year{y} / month{m} / day{d}}, hour);
}

UtcHour make_hour(sys_days day, int hour) {
  return {day.time_since_epoch().count() * 24 + hour};
}

sys_days day_of(UtcHour h) {
  auto days = h.value >= 0 ? h.value / 24 : (h.value - 23) / 24;
  return sys_days{std::chrono::days{days}};
}

int hour_of_day(UtcHour h) { return static_cast<int>(h.value - day_of(h).time_since_epoch().count() * 24); }

int year_of(UtcHour h) { return static_cast<int>(year_month_day{day_of(h)}.year()); }

int day_of_year(UtcHour h) {
  const auto d = day_of(h);
  const year_month_day ymd{d};
  return static_cast<int>((d - sys_days{ymd.year() / January / 1}).count()) + 1;
}

sys_seconds slot_start(UtcHour h) { return sys_seconds{seconds{h.value * 3600}}; }
sys_seconds slot_midpoint(UtcHour h) { return slot_start(h) + minutes{30}; }

UtcHour parse_iso_hour(std::string_view text) {
  // YYYY-MM-DDTHH:00:00Z
  if (text.size() != 20 || text[4] != '-' || text[7] != '-' || text[10] != 'T' || text[13] != ':' ||
      text.substr(13) != ":00:00Z") {
    throw ParseError("timestamp '" + std::string(text) + "' is not YYYY-MM-DDTHH:00:00Z");
  }
  const int y = parse_fixed(text, 0, 4, text);
  const int m = parse_fixed(text, 5, 2, text);
  const int d = parse_fixed(text, 8, 2, text);
  const int hh = parse_fixed(text, 11, 2, text);
  if (hh > 23) throw ParseError("hour out of range in '" + std::string(text) + "'");
  return make_hour(checked_date(y, m, d, text), hh);
}

std::string format_iso_hour(UtcHour h) {
  const year_month_day ymd{day_of(h)};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:00:00Z", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), hour_of_day(h));
  return buf;
}

sys_days parse_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
    throw ParseError("date '" + std::string(text) + "' is not YYYY-MM-DD");
  }
  return checked_date(parse_fixed(text, 0, 4, text), parse_fixed(text, 5, 2, text),
                      parse_fixed(text, 8, 2, text), text);
}

std::string format_date(sys_days d) {
  const year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

}  // namespace solarcast
