// Raw smart-meter CSV -> validated per-consumer-day profiles -> canonical
// dataset file.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "tarifflens/core.hpp"
#include "tarifflens/csv.hpp"
#include "tarifflens/io.hpp"

namespace tarifflens {

struct MeterReading {
  ConsumerId consumer_id;
  DayDate day;
  int hour = 1;  // 1..24, hour h covers [h-1, h) local time
  double kwh = 0.0;
};

struct Dataset {
  using Key = std::pair<ConsumerId, DayDate>;
  std::map<Key, DailyProfile> profiles;
  std::vector<ConsumerId> consumers;  // sorted, deduplicated
  std::vector<DayDate> days;          // sorted, deduplicated

  void rebuild_index() {
    std::set<ConsumerId> cs;
    std::set<DayDate> ds;
    for (const auto& [key, profile] : profiles) {
      cs.insert(key.first);
      ds.insert(key.second);
    }
    consumers.assign(cs.begin(), cs.end());
    days.assign(ds.begin(), ds.end());
  }

  bool has_day(const DayDate& d) const {
    return std::binary_search(days.begin(), days.end(), d);
  }

  // Consumers present on `day`, in ConsumerId order.
  std::vector<std::pair<ConsumerId, const DailyProfile*>> day_profiles(
      const DayDate& day) const {
    if (!has_day(day)) {
      throw Error(Errc::unknown_day, "no profiles for " + day.to_string());
    }
    std::vector<std::pair<ConsumerId, const DailyProfile*>> out;
    for (const auto& [key, profile] : profiles) {
      if (key.second == day) out.emplace_back(key.first, &profile);
    }
    return out;
  }
};

enum class GapPolicy {
  drop_incomplete,    // a consumer-day is kept only if all 24 hours are usable
  interpolate_up_to2  // linearly fill runs of <=2 missing interior hours
};

struct IngestReport {
  long rows = 0;
  long readings = 0;
  long accepted_days = 0;
  long dropped_days = 0;
  long repaired_hours = 0;
  long duplicates_merged = 0;
};

// ---------------------------------------------------------------------------
// parse_readings
// ---------------------------------------------------------------------------

namespace detail {

// "YYYY-MM-DDTHH:MM" with optional ":SS"; minutes and seconds must be zero.
inline std::pair<DayDate, int> parse_hour_timestamp(const std::string& ts,
                                                    long line_no) {
  int y = 0, mo = 0, d = 0, hh = -1, mi = -1, ss = 0;
  const int n =
      std::sscanf(ts.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d", &y, &mo, &d, &hh,
                  &mi, &ss);
  const bool shape_ok =
      (n == 5 && ts.size() == 16) || (n == 6 && ts.size() == 19);
  DayDate date{y, mo, d};
  if (!shape_ok || !date.valid() || hh < 0 || hh > 23 || mi != 0 || ss != 0) {
    throw Error(Errc::malformed_row, "bad hourly timestamp: '" + ts + "'",
                line_no);
  }
  return {date, hh + 1};
}

}  // namespace detail

inline std::vector<MeterReading> parse_readings(const std::string& csv_text) {
  std::vector<std::string> lines = split_lines(csv_text);
  if (lines.empty() || lines.front() != "consumer_id,timestamp,kwh") {
    throw Error(Errc::missing_header,
                "expected header 'consumer_id,timestamp,kwh'");
  }
  std::vector<MeterReading> readings;
  readings.reserve(lines.size() - 1);
  for (size_t i = 1; i < lines.size(); ++i) {
    const long line_no = static_cast<long>(i + 1);
    if (lines[i].empty()) continue;
    std::vector<std::string> fields = split_csv_record(lines[i], line_no);
    if (fields.size() != 3) {
      throw Error(Errc::malformed_row,
                  "expected 3 fields, got " + std::to_string(fields.size()),
                  line_no);
    }
    if (fields[0].empty()) {
      throw Error(Errc::malformed_row, "empty consumer_id", line_no);
    }
    MeterReading r;
    r.consumer_id = fields[0];
    std::tie(r.day, r.hour) = detail::parse_hour_timestamp(fields[1], line_no);
    r.kwh = parse_double_field(fields[2], line_no, "kwh");
    if (!std::isfinite(r.kwh)) {
      throw Error(Errc::malformed_row, "kwh is not finite", line_no);
    }
    readings.push_back(std::move(r));
  }
  return readings;
}

// ---------------------------------------------------------------------------
// build_dataset
// ---------------------------------------------------------------------------

inline std::pair<Dataset, IngestReport> build_dataset(
    const std::vector<MeterReading>& readings,
    GapPolicy policy = GapPolicy::drop_incomplete) {
  constexpr double kDuplicateTolKwh = 1e-9;

  IngestReport report;
  report.rows = static_cast<long>(readings.size());
  report.readings = static_cast<long>(readings.size());

  struct DayBuild {
    std::array<double, kHoursPerDay> value{};
    std::array<bool, kHoursPerDay> present{};
  };
  std::map<Dataset::Key, DayBuild> groups;
  for (const MeterReading& r : readings) {
    DayBuild& g = groups[{r.consumer_id, r.day}];
    const int h = r.hour - 1;
    if (g.present[h]) {
      if (std::fabs(g.value[h] - r.kwh) > kDuplicateTolKwh) {
        throw Error(Errc::duplicate_conflict,
                    "conflicting readings for " + r.consumer_id + " " +
                        r.day.to_string() + " hour " + std::to_string(r.hour),
                    r.hour);
      }
      ++report.duplicates_merged;
    } else {
      g.value[h] = r.kwh;
      g.present[h] = true;
    }
  }

  Dataset dataset;
  for (auto& [key, g] : groups) {
    // Non-positive readings are unusable under the strictly-positive demand
    // model: treated as missing when repairing, fatal for the day otherwise.
    std::array<bool, kHoursPerDay> usable{};
    for (int h = 0; h < kHoursPerDay; ++h) {
      usable[h] = g.present[h] && g.value[h] > 0.0;
    }

    bool keep = true;
    long repaired = 0;
    if (policy == GapPolicy::drop_incomplete) {
      keep = std::all_of(usable.begin(), usable.end(), [](bool u) { return u; });
    } else {
      int h = 0;
      while (h < kHoursPerDay && keep) {
        if (usable[h]) {
          ++h;
          continue;
        }
        int run_end = h;
        while (run_end < kHoursPerDay && !usable[run_end]) ++run_end;
        const int run_len = run_end - h;
        if (run_len > 2 || h == 0 || run_end == kHoursPerDay) {
          keep = false;  // no neighbor to interpolate from, or gap too wide
          break;
        }
        const double lo = g.value[h - 1];
        const double hi = g.value[run_end];
        for (int j = 0; j < run_len; ++j) {
          g.value[h + j] = lo + (hi - lo) * (j + 1) / (run_len + 1);
          usable[h + j] = true;
          ++repaired;
        }
        h = run_end;
      }
    }

    if (!keep) {
      ++report.dropped_days;
      continue;
    }
    dataset.profiles.emplace(key, validate_profile(g.value));
    report.repaired_hours += repaired;
    ++report.accepted_days;
  }
  dataset.rebuild_index();
  return {std::move(dataset), report};
}

// Expands a dataset back into hourly readings (canonical order).
inline std::vector<MeterReading> to_readings(const Dataset& d) {
  std::vector<MeterReading> out;
  out.reserve(d.profiles.size() * kHoursPerDay);
  for (const auto& [key, profile] : d.profiles) {
    for (int h = 0; h < kHoursPerDay; ++h) {
      out.push_back({key.first, key.second, h + 1, profile.hours[h]});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Canonical dataset file: consumer_id,date,h01..h24
// ---------------------------------------------------------------------------

inline std::string dataset_header() {
  std::string h = "consumer_id,date";
  for (int i = 1; i <= kHoursPerDay; ++i) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), ",h%02d", i);
    h += buf;
  }
  return h;
}

inline std::string serialize_dataset(const Dataset& d) {
  std::string out = dataset_header() + "\n";
  for (const auto& [key, profile] : d.profiles) {
    out += csv_escape(key.first);
    out += ',';
    out += key.second.to_string();
    for (int h = 0; h < kHoursPerDay; ++h) {
      out += ',';
      out += format_sig9(profile.hours[h]);
    }
    out += '\n';
  }
  return out;
}

inline void write_dataset(const Dataset& d, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_dataset(d));
}

inline Dataset parse_dataset(const std::string& text) {
  std::vector<std::string> lines = split_lines(text);
  if (lines.empty() || lines.front() != dataset_header()) {
    throw Error(Errc::schema_mismatch, "bad dataset header");
  }
  Dataset d;
  for (size_t i = 1; i < lines.size(); ++i) {
    const long line_no = static_cast<long>(i + 1);
    if (lines[i].empty()) continue;
    std::vector<std::string> fields = split_csv_record(lines[i], line_no);
    if (fields.size() != 2 + kHoursPerDay) {
      throw Error(Errc::schema_mismatch,
                  "expected 26 fields at line " + std::to_string(line_no));
    }
    if (fields[0].empty()) {
      throw Error(Errc::schema_mismatch,
                  "empty consumer_id at line " + std::to_string(line_no));
    }
    DayDate day;
    try {
      day = DayDate::parse(fields[1]);
    } catch (const Error&) {
      throw Error(Errc::schema_mismatch,
                  "bad date '" + fields[1] + "' at line " +
                      std::to_string(line_no));
    }
    std::array<double, kHoursPerDay> hours{};
    for (int h = 0; h < kHoursPerDay; ++h) {
      try {
        hours[h] = parse_double_field(fields[2 + h], line_no, "hour value");
      } catch (const Error&) {
        throw Error(Errc::schema_mismatch,
                    "bad hour value at line " + std::to_string(line_no));
      }
    }
    Dataset::Key key{fields[0], day};
    if (d.profiles.count(key) != 0) {
      throw Error(Errc::schema_mismatch,
                  "duplicate row for " + fields[0] + " " + fields[1]);
    }
    d.profiles.emplace(std::move(key), validate_profile(hours));
  }
  d.rebuild_index();
  return d;
}

inline Dataset read_dataset(const std::filesystem::path& path) {
  return parse_dataset(read_file(path));
}

}  // namespace tarifflens
