#include "solarcast/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "solarcast/errors.hpp"

namespace solarcast {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kObservationHeader = "site_id,timestamp,lat,lon,ghi_ground,ghi_sat,temp,humidity";
constexpr std::string_view kNwpHeader = "site_id,issue_time,horizon_h,ghi_nwp,temp_nwp,humidity_nwp";
constexpr int kMaxLead = 48;

enum class Schema { observations, nwp };

struct Location {
  const fs::path* file;
  std::size_t line;
  std::string str() const { return file->string() + ":" + std::to_string(line); }
};

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto comma = line.find(',', pos);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(pos));
      return out;
    }
    out.push_back(line.substr(pos, comma - pos));
    pos = comma + 1;
  }
}

std::string_view chomp(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

double parse_number(std::string_view field, const Location& where, std::string_view column) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size() || !std::isfinite(v)) {
    throw ParseError(where.str() + ": column " + std::string(column) + ": cannot parse '" +
                     std::string(field) + "'");
  }
  return v;
}

std::optional<double> parse_optional(std::string_view field, const Location& where, std::string_view column) {
  if (field.empty()) return std::nullopt;
  return parse_number(field, where, column);
}

void check_irradiance(std::optional<double> v, const Location& where, std::string_view column) {
  if (v && *v < 0.0) {
    throw IntegrityError(where.str() + ": negative irradiance in column " + std::string(column));
  }
}

UtcHour parse_time(std::string_view field, const Location& where) {
  try {
    return parse_iso_hour(field);
  } catch (const ParseError& e) {
    throw ParseError(where.str() + ": " + e.what());
  }
}

Schema detect_schema(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string header;
  std::getline(in, header);
  const auto h = chomp(header);
  if (h == kObservationHeader) return Schema::observations;
  if (h == kNwpHeader) return Schema::nwp;
  throw ParseError(path.string() + ":1: unrecognised header '" + std::string(h) + "'");
}

struct ObservationRow {
  UtcHour t;
  std::optional<double> ground, sat, temp, humidity;
};

struct PendingSite {
  GeoPoint location;
  Location first_seen;
  std::vector<ObservationRow> rows;
};

void read_observations(const fs::path& path, std::map<std::string, PendingSite>& sites, bool strict_order) {
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  std::size_t line_no = 1;
  std::map<std::string, UtcHour> last_seen;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = chomp(line);
    if (text.empty()) continue;
    const Location where{&path, line_no};
    const auto f = split_fields(text);
    if (f.size() != 8) {
      throw ParseError(where.str() + ": expected 8 fields, found " + std::to_string(f.size()));
    }
    if (f[0].empty()) throw ParseError(where.str() + ": empty site_id");
    std::string id(f[0]);
    ObservationRow row;
    row.t = parse_time(f[1], where);
    const GeoPoint loc{parse_number(f[2], where, "lat"), parse_number(f[3], where, "lon")};
    try {
      loc.validate();
    } catch (const ParameterError& e) {
      throw ParseError(where.str() + ": " + e.what());
    }
    row.ground = parse_optional(f[4], where, "ghi_ground");
    row.sat = parse_optional(f[5], where, "ghi_sat");
    row.temp = parse_optional(f[6], where, "temp");
    row.humidity = parse_optional(f[7], where, "humidity");
    check_irradiance(row.ground, where, "ghi_ground");
    check_irradiance(row.sat, where, "ghi_sat");

    if (strict_order) {
      auto [it, fresh] = last_seen.try_emplace(id, row.t);
      if (!fresh) {
        if (row.t <= it->second) {
          throw IntegrityError(where.str() + ": timestamp regression for site " + id);
        }
        it->second = row.t;
      }
    }

    auto [it, fresh] = sites.try_emplace(id, PendingSite{loc, where, {}});
    if (!fresh && !(it->second.location == loc)) {
      throw IntegrityError(where.str() + ": coordinates of site " + id + " differ from " +
                           it->second.first_seen.str());
    }
    it->second.rows.push_back(row);
  }
}

void read_nwp(const fs::path& path, std::vector<SiteSeries>& sites) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < sites.size(); ++i) index[sites[i].site_id] = i;

  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  std::size_t line_no = 1;
  std::size_t outside = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = chomp(line);
    if (text.empty()) continue;
    const Location where{&path, line_no};
    const auto f = split_fields(text);
    if (f.size() != 6) {
      throw ParseError(where.str() + ": expected 6 fields, found " + std::to_string(f.size()));
    }
    const auto it = index.find(std::string(f[0]));
    if (it == index.end()) {
      throw LookupError(where.str() + ": NWP row for unknown site '" + std::string(f[0]) + "'");
    }
    SiteSeries& s = sites[it->second];
    const UtcHour issue = parse_time(f[1], where);
    const double lead_raw = parse_number(f[2], where, "horizon_h");
    const int lead = static_cast<int>(lead_raw);
    if (lead != lead_raw || lead < 1 || lead > kMaxLead) {
      throw ParseError(where.str() + ": horizon_h must be an integer in 1.." + std::to_string(kMaxLead));
    }
    const auto ghi = parse_optional(f[3], where, "ghi_nwp");
    check_irradiance(ghi, where, "ghi_nwp");
    const auto temp = parse_optional(f[4], where, "temp_nwp");
    const auto hum = parse_optional(f[5], where, "humidity_nwp");

    const auto slot = s.index_of(issue);
    if (!slot) {
      ++outside;
      continue;
    }
    if (lead > s.nwp_ghi.max_lead()) {
      throw ParseError(where.str() + ": horizon_h exceeds the lead range of this file set");
    }
    if (s.nwp_ghi.issued(*slot) && (s.nwp_ghi.at(*slot, lead) || s.nwp_temperature.at(*slot, lead) ||
                                    s.nwp_humidity.at(*slot, lead))) {
      throw IntegrityError(where.str() + ": duplicate NWP entry for site " + s.site_id);
    }
    // Any row marks the issuance as received for all three variables.
    s.nwp_ghi.mark_issued(*slot);
    s.nwp_temperature.mark_issued(*slot);
    s.nwp_humidity.mark_issued(*slot);
    if (ghi) s.nwp_ghi.set(*slot, lead, *ghi);
    if (temp) s.nwp_temperature.set(*slot, lead, *temp);
    if (hum) s.nwp_humidity.set(*slot, lead, *hum);
  }
  if (outside > 0) {
    spdlog::warn("{}: {} NWP rows fall outside the observation grid and were ignored", path.string(), outside);
  }
}

// Maximum lead present in an NWP file, scanned before allocation.
int scan_max_lead(const fs::path& path) {
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  int max_lead = kHorizons;
  while (std::getline(in, line)) {
    const auto f = split_fields(chomp(line));
    if (f.size() < 3) continue;
    int lead = 0;
    std::from_chars(f[2].data(), f[2].data() + f[2].size(), lead);
    if (lead > max_lead && lead <= kMaxLead) max_lead = lead;
  }
  return max_lead;
}

void append_number(std::string& out, double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 12);
  out.append(buf, ptr);
}

void append_optional(std::string& out, std::optional<double> v) {
  if (v) append_number(out, *v);
}

}  // namespace

std::size_t MaybeSeries::count_present() const {
  return static_cast<std::size_t>(std::count(present_.begin(), present_.end(), true));
}

NwpTable::NwpTable(std::size_t n_slots, int max_lead)
    : issued_(n_slots, false), values_(n_slots * static_cast<std::size_t>(max_lead)), max_lead_(max_lead) {}

std::optional<double> NwpTable::at(std::size_t issue, int lead) const {
  if (lead < 1 || lead > max_lead_ || issue >= issued_.size()) return std::nullopt;
  return values_[issue * static_cast<std::size_t>(max_lead_) + static_cast<std::size_t>(lead - 1)];
}

void NwpTable::set(std::size_t issue, int lead, double v) {
  issued_[issue] = true;
  values_.set(issue * static_cast<std::size_t>(max_lead_) + static_cast<std::size_t>(lead - 1), v);
}

std::optional<double> NwpTable::latest_for(std::size_t h, int p) const {
  if (h >= issued_.size()) return std::nullopt;
  // Candidate issuances: h, h-1, ... while the lead h + p - issue stays in range.
  for (int back = 0; p + back <= max_lead_; ++back) {
    if (static_cast<std::size_t>(back) > h) break;
    const std::size_t issue = h - static_cast<std::size_t>(back);
    if (issued_[issue]) return at(issue, p + back);
  }
  return std::nullopt;
}

std::optional<std::size_t> SiteSeries::index_of(UtcHour t) const {
  const auto d = t - start;
  if (d < 0 || static_cast<std::size_t>(d) >= size()) return std::nullopt;
  return static_cast<std::size_t>(d);
}

void SiteSeries::allocate(std::size_t n, int max_lead) {
  ground = MaybeSeries(n);
  satellite = MaybeSeries(n);
  temperature = MaybeSeries(n);
  humidity = MaybeSeries(n);
  clearsky.assign(n, 0.0);
  nwp_ghi = NwpTable(n, max_lead);
  nwp_temperature = NwpTable(n, max_lead);
  nwp_humidity = NwpTable(n, max_lead);
}

void SiteSeries::compute_clearsky(double linke_turbidity) {
  for (std::size_t i = 0; i < size(); ++i) {
    clearsky[i] = slot_clearsky_ghi(location, timestamp(i), linke_turbidity);
  }
}

SplitBoundaries SplitBoundaries::paper_default() {
  using namespace std::chrono;
  return {{sys_days{2014y / 1 / 1}, sys_days{2015y / 12 / 31}},
          {sys_days{2016y / 1 / 1}, sys_days{2016y / 12 / 31}},
          {sys_days{2017y / 1 / 1}, sys_days{2017y / 12 / 31}}};
}

std::vector<SiteSeries> load_sites(std::span<const fs::path> paths, const LoadOptions& options) {
  std::vector<const fs::path*> obs_files, nwp_files;
  for (const auto& p : paths) {
    (detect_schema(p) == Schema::observations ? obs_files : nwp_files).push_back(&p);
  }

  std::map<std::string, PendingSite> pending;
  for (const auto* p : obs_files) read_observations(*p, pending, options.strict_order);

  int max_lead = kHorizons;
  for (const auto* p : nwp_files) max_lead = std::max(max_lead, scan_max_lead(*p));

  std::vector<SiteSeries> out;
  out.reserve(pending.size());
  for (auto& [id, site] : pending) {
    auto& rows = site.rows;
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
    for (std::size_t i = 1; i < rows.size(); ++i) {
      if (rows[i].t == rows[i - 1].t) {
        throw IntegrityError("duplicate row for site " + id + " at " + format_iso_hour(rows[i].t));
      }
    }
    SiteSeries s;
    s.site_id = id;
    s.location = site.location;
    s.start = rows.front().t;
    s.allocate(static_cast<std::size_t>(rows.back().t - rows.front().t) + 1, max_lead);
    for (const auto& r : rows) {
      const auto i = static_cast<std::size_t>(r.t - s.start);
      if (r.ground) s.ground.set(i, *r.ground);
      if (r.sat) s.satellite.set(i, *r.sat);
      if (r.temp) s.temperature.set(i, *r.temp);
      if (r.humidity) s.humidity.set(i, *r.humidity);
    }
    s.compute_clearsky(options.linke_turbidity);
    out.push_back(std::move(s));
  }
  for (const auto* p : nwp_files) read_nwp(*p, out);
  return out;
}

void write_observations_csv(std::span<const SiteSeries> sites, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  std::string buf;
  buf.append(kObservationHeader).push_back('\n');
  for (const auto& s : sites) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      buf.append(s.site_id).push_back(',');
      buf.append(format_iso_hour(s.timestamp(i))).push_back(',');
      append_number(buf, s.location.latitude_deg);
      buf.push_back(',');
      append_number(buf, s.location.longitude_deg);
      buf.push_back(',');
      append_optional(buf, s.ground[i]);
      buf.push_back(',');
      append_optional(buf, s.satellite[i]);
      buf.push_back(',');
      append_optional(buf, s.temperature[i]);
      buf.push_back(',');
      append_optional(buf, s.humidity[i]);
      buf.push_back('\n');
      if (buf.size() > (1u << 20)) {
        out << buf;
        buf.clear();
      }
    }
  }
  out << buf;
  if (!out) throw DataError("write failed for " + path.string());
}

void write_nwp_csv(std::span<const SiteSeries> sites, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  std::string buf;
  buf.append(kNwpHeader).push_back('\n');
  for (const auto& s : sites) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (!s.nwp_ghi.issued(i) && !s.nwp_temperature.issued(i) && !s.nwp_humidity.issued(i)) continue;
      const auto stamp = format_iso_hour(s.timestamp(i));
      for (int lead = 1; lead <= s.nwp_ghi.max_lead(); ++lead) {
        const auto g = s.nwp_ghi.at(i, lead);
        const auto t = s.nwp_temperature.at(i, lead);
        const auto h = s.nwp_humidity.at(i, lead);
        if (!g && !t && !h) continue;
        buf.append(s.site_id).push_back(',');
        buf.append(stamp).push_back(',');
        buf.append(std::to_string(lead)).push_back(',');
        append_optional(buf, g);
        buf.push_back(',');
        append_optional(buf, t);
        buf.push_back(',');
        append_optional(buf, h);
        buf.push_back('\n');
      }
      if (buf.size() > (1u << 20)) {
        out << buf;
        buf.clear();
      }
    }
  }
  out << buf;
  if (!out) throw DataError("write failed for " + path.string());
}

DatasetSplit split_time(const SiteSeries& series, const SplitBoundaries& b, const SlotMask* retained) {
  const DateRange* ranges[] = {&b.train, &b.validation, &b.test};
  for (const auto* r : ranges) {
    if (r->last < r->first) throw ParameterError("split range ends before it starts");
  }
  if (!(b.train.last < b.validation.first) || !(b.validation.last < b.test.first)) {
    throw ParameterError("split ranges must be ascending and non-overlapping");
  }
  DatasetSplit split;
  std::vector<std::size_t>* sets[] = {&split.train, &split.validation, &split.test};
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (retained && !(*retained)[i]) continue;
    const auto day = day_of(series.timestamp(i));
    for (int k = 0; k < 3; ++k) {
      if (day >= ranges[k]->first && day <= ranges[k]->last) {
        sets[k]->push_back(i);
        break;
      }
    }
  }
  return split;
}

SitePartition partition_sites(std::span<const SiteSeries> sites, std::span<const std::string> train_ids) {
  std::set<std::string> wanted(train_ids.begin(), train_ids.end());
  for (const auto& id : wanted) {
    const bool known = std::any_of(sites.begin(), sites.end(), [&](const auto& s) { return s.site_id == id; });
    if (!known) throw LookupError("unknown training site '" + id + "'");
  }
  SitePartition part;
  for (const auto& s : sites) {
    (wanted.count(s.site_id) ? part.train_sites : part.eval_sites).push_back(s.site_id);
  }
  return part;
}

SlotMask elevation_filter(const SiteSeries& series, double min_elevation_deg) {
  return elevation_mask(series.location, series.start, series.size(), min_elevation_deg);
}

SlotMask drop_incomplete(const SiteSeries& s, std::span<const Channel> required) {
  SlotMask mask(s.size(), true);
  auto nwp_complete = [](const NwpTable& t, std::size_t i) {
    for (int p = 1; p <= kHorizons; ++p) {
      if (!t.latest_for(i, p)) return false;
    }
    return true;
  };
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (Channel c : required) {
      bool ok = true;
      switch (c) {
        case Channel::ground: ok = s.ground.has(i); break;
        case Channel::satellite: ok = s.satellite.has(i); break;
        case Channel::temperature: ok = s.temperature.has(i); break;
        case Channel::humidity: ok = s.humidity.has(i); break;
        case Channel::nwp_ghi: ok = nwp_complete(s.nwp_ghi, i); break;
        case Channel::nwp_temperature: ok = nwp_complete(s.nwp_temperature, i); break;
        case Channel::nwp_humidity: ok = nwp_complete(s.nwp_humidity, i); break;
      }
      if (!ok) {
        mask[i] = false;
        break;
      }
    }
  }
  return mask;
}

SlotMask mask_and(const SlotMask& a, const SlotMask& b) {
  if (a.size() != b.size()) throw ParameterError("mask sizes differ");
  SlotMask out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] && b[i];
  return out;
}

const SiteSeries& find_site(std::span<const SiteSeries> sites, const std::string& id) {
  for (const auto& s : sites) {
    if (s.site_id == id) return s;
  }
  throw LookupError("unknown site '" + id + "'");
}

}  // namespace solarcast
