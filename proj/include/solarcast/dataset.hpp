#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "solarcast/solar_geometry.hpp"
#include "solarcast/time.hpp"

namespace solarcast {

inline constexpr int kHorizons = 6;

// Per-slot series with explicit presence. Missing entries never carry a value.
class MaybeSeries {
 public:
  MaybeSeries() = default;
  explicit MaybeSeries(std::size_t n) : values_(n, 0.0), present_(n, false) {}

  std::size_t size() const { return values_.size(); }
  bool has(std::size_t i) const { return present_[i]; }
  // Precondition: has(i).
  double value(std::size_t i) const { return values_[i]; }
  std::optional<double> operator[](std::size_t i) const {
    return present_[i] ? std::optional<double>{values_[i]} : std::nullopt;
  }
  void set(std::size_t i, double v) {
    values_[i] = v;
    present_[i] = true;
  }
  void clear(std::size_t i) {
    values_[i] = 0.0;
    present_[i] = false;
  }
  void resize(std::size_t n) {
    values_.resize(n, 0.0);
    present_.resize(n, false);
  }
  std::size_t count_present() const;
  bool operator==(const MaybeSeries&) const = default;

 private:
  std::vector<double> values_;
  std::vector<bool> present_;
};

// Forecasts keyed by (issue slot, lead hour). Issue slots share the site's
// hourly grid; leads run 1..max_lead.
class NwpTable {
 public:
  NwpTable() = default;
  NwpTable(std::size_t n_slots, int max_lead);

  std::size_t slots() const { return issued_.size(); }
  int max_lead() const { return max_lead_; }
  bool issued(std::size_t issue) const { return issued_[issue]; }
  std::optional<double> at(std::size_t issue, int lead) const;
  void set(std::size_t issue, int lead, double v);
  void mark_issued(std::size_t issue) { issued_[issue] = true; }

  // Value for target slot h + p as seen at slot h: taken from the most recent
  // issuance at or before h whose lead range reaches h + p.
  std::optional<double> latest_for(std::size_t h, int p) const;

  bool operator==(const NwpTable&) const = default;

 private:
  std::vector<bool> issued_;
  MaybeSeries values_;
  int max_lead_ = kHorizons;
};

// One site's hourly channels on a contiguous grid starting at `start`.
struct SiteSeries {
  std::string site_id;
  GeoPoint location;
  UtcHour start;
  MaybeSeries ground;       // measured GHI
  MaybeSeries satellite;    // satellite-pixel GHI
  MaybeSeries temperature;  // deg C
  MaybeSeries humidity;     // %
  std::vector<double> clearsky;  // modelled GHI, never missing
  NwpTable nwp_ghi;
  NwpTable nwp_temperature;
  NwpTable nwp_humidity;

  std::size_t size() const { return clearsky.size(); }
  UtcHour timestamp(std::size_t i) const { return start + static_cast<std::int64_t>(i); }
  std::optional<std::size_t> index_of(UtcHour t) const;

  // Allocates every channel for n slots, all missing.
  void allocate(std::size_t n, int max_lead = kHorizons);
  // Fills the clear-sky channel from location and timestamps.
  void compute_clearsky(double linke_turbidity = kDefaultTurbidity);
};

using SlotMask = std::vector<bool>;

enum class Channel { ground, satellite, temperature, humidity, nwp_ghi, nwp_temperature, nwp_humidity };

struct DateRange {
  std::chrono::sys_days first;
  std::chrono::sys_days last;  // inclusive
};

struct SplitBoundaries {
  DateRange train;
  DateRange validation;
  DateRange test;

  // 2014-2015 / 2016 / 2017.
  static SplitBoundaries paper_default();
};

struct DatasetSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

struct SitePartition {
  std::vector<std::string> train_sites;
  std::vector<std::string> eval_sites;
};

struct LoadOptions {
  double linke_turbidity = kDefaultTurbidity;
  // When set, a site's timestamps must be strictly ascending in each file.
  bool strict_order = false;
};

// Reads observation and NWP CSV files (schema detected from the header).
// Throws ParseError / IntegrityError / LookupError with file:line context.
std::vector<SiteSeries> load_sites(std::span<const std::filesystem::path> paths,
                                   const LoadOptions& options = {});

// Writes the two CSV schemas. Values use 12 significant digits.
void write_observations_csv(std::span<const SiteSeries> sites, const std::filesystem::path& path);
void write_nwp_csv(std::span<const SiteSeries> sites, const std::filesystem::path& path);

DatasetSplit split_time(const SiteSeries& series, const SplitBoundaries& boundaries,
                        const SlotMask* retained = nullptr);

SitePartition partition_sites(std::span<const SiteSeries> sites, std::span<const std::string> train_ids);

SlotMask elevation_filter(const SiteSeries& series, double min_elevation_deg);
SlotMask drop_incomplete(const SiteSeries& series, std::span<const Channel> required);
SlotMask mask_and(const SlotMask& a, const SlotMask& b);

const SiteSeries& find_site(std::span<const SiteSeries> sites, const std::string& id);

}  // namespace solarcast
