#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace solarcast {

// One hourly UTC slot, counted from 1970-01-01T00:00Z. Slot h covers [h, h+1).
struct UtcHour {
  std::int64_t value = 0;

  constexpr auto operator<=>(const UtcHour&) const = default;
  constexpr UtcHour operator+(std::int64_t hours) const { return {value + hours}; }
  constexpr UtcHour operator-(std::int64_t hours) const { return {value - hours}; }
  constexpr std::int64_t operator-(UtcHour other) const { return value - other.value; }
};

UtcHour make_hour(int year, unsigned month, unsigned day, int hour = 0);
UtcHour make_hour(std::chrono::sys_days day, int hour = 0);

std::chrono::sys_days day_of(UtcHour h);
int hour_of_day(UtcHour h);
int year_of(UtcHour h);
int day_of_year(UtcHour h);

std::chrono::sys_seconds slot_start(UtcHour h);
std::chrono::sys_seconds slot_midpoint(UtcHour h);

// Strict "YYYY-MM-DDTHH:00:00Z". Throws ParseError.
UtcHour parse_iso_hour(std::string_view text);
std::string format_iso_hour(UtcHour h);

// "YYYY-MM-DD". Throws ParseError.
std::chrono::sys_days parse_date(std::string_view text);
std::string format_date(std::chrono::sys_days d);

}  // namespace solarcast
