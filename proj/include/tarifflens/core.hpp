// Shared domain types for daily smart-meter demand profiles.
#pragma once

#include <array>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tarifflens {

inline constexpr int kHoursPerDay = 24;

using HourSeries = std::array<double, kHoursPerDay>;
using ConsumerId = std::string;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

enum class Errc {
  wrong_length,
  non_positive_demand,
  non_finite,
  empty_collection,
  missing_header,
  malformed_row,
  duplicate_conflict,
  io_failure,
  schema_mismatch,
  k_too_large,
  unknown_day,
  consumer_set_mismatch,
  too_few_consumers,
  non_finite_rate,
  interiority_violated,
  no_convergence,
  bad_input,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::wrong_length: return "WrongLength";
    case Errc::non_positive_demand: return "NonPositiveDemand";
    case Errc::non_finite: return "NonFinite";
    case Errc::empty_collection: return "EmptyCollection";
    case Errc::missing_header: return "MissingHeader";
    case Errc::malformed_row: return "MalformedRow";
    case Errc::duplicate_conflict: return "DuplicateConflict";
    case Errc::io_failure: return "IoFailure";
    case Errc::schema_mismatch: return "SchemaMismatch";
    case Errc::k_too_large: return "KTooLarge";
    case Errc::unknown_day: return "UnknownDay";
    case Errc::consumer_set_mismatch: return "ConsumerSetMismatch";
    case Errc::too_few_consumers: return "TooFewConsumers";
    case Errc::non_finite_rate: return "NonFiniteRate";
    case Errc::interiority_violated: return "InteriorityViolated";
    case Errc::no_convergence: return "NoConvergence";
    case Errc::bad_input: return "BadInput";
  }
  return "Unknown";
}

// Single exception type; `detail` carries the offending hour/line/index when
// one exists, -1 otherwise.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& msg, long detail = -1)
      : std::runtime_error(std::string(errc_name(code)) + ": " + msg),
        code_(code),
        detail_(detail) {}

  Errc code() const { return code_; }
  long detail() const { return detail_; }

 private:
  Errc code_;
  long detail_;
};

// ---------------------------------------------------------------------------
// Calendar dates
// ---------------------------------------------------------------------------

struct DayDate {
  int year = 1970;
  int month = 1;
  int day = 1;

  friend auto operator<=>(const DayDate&, const DayDate&) = default;

  static bool is_leap(int y) {
    return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
  }

  static int days_in_month(int y, int m) {
    static constexpr int days[12] = {31, 28, 31, 30, 31, 30,
                                     31, 31, 30, 31, 30, 31};
    if (m == 2 && is_leap(y)) return 29;
    return days[m - 1];
  }

  bool valid() const {
    return month >= 1 && month <= 12 && day >= 1 &&
           day <= days_in_month(year, month);
  }

  DayDate next() const {
    DayDate d = *this;
    if (++d.day > days_in_month(d.year, d.month)) {
      d.day = 1;
      if (++d.month > 12) {
        d.month = 1;
        ++d.year;
      }
    }
    return d;
  }

  std::string to_string() const {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
    return buf;
  }

  // Parses "YYYY-MM-DD"; throws Errc::bad_input on anything else.
  static DayDate parse(const std::string& s) {
    DayDate d;
    char extra = 0;
    if (std::sscanf(s.c_str(), "%4d-%2d-%2d%c", &d.year, &d.month, &d.day,
                    &extra) != 3 ||
        s.size() != 10 || !d.valid()) {
      throw Error(Errc::bad_input, "not a calendar date: '" + s + "'");
    }
    return d;
  }
};

// ---------------------------------------------------------------------------
// Profiles
// ---------------------------------------------------------------------------

// One consumer-day of hourly demand, kWh per hour, all strictly positive.
struct DailyProfile {
  HourSeries hours{};

  double total() const {
    return std::accumulate(hours.begin(), hours.end(), 0.0);
  }
};

// Direction of a daily profile: hours divided by the daily total, so the
// weights sum to one and are level-free.
struct NormalizedProfile {
  HourSeries weights{};
};

// Hour-wise sum of many consumers' profiles.
struct AggregateProfile {
  HourSeries hours{};
  int consumer_count = 0;

  double total() const {
    return std::accumulate(hours.begin(), hours.end(), 0.0);
  }
};

// Inclusive 1-based hour window [first, last].
struct HourRange {
  int first = 1;
  int last = kHoursPerDay;

  bool valid() const {
    return first >= 1 && last <= kHoursPerDay && first <= last;
  }
  bool contains(int hour) const { return hour >= first && hour <= last; }
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

inline DailyProfile validate_profile(std::span<const double> raw) {
  if (raw.size() != kHoursPerDay) {
    throw Error(Errc::wrong_length,
                "expected 24 hourly values, got " + std::to_string(raw.size()),
                static_cast<long>(raw.size()));
  }
  DailyProfile p;
  for (int h = 0; h < kHoursPerDay; ++h) {
    const double v = raw[h];
    if (!std::isfinite(v)) {
      throw Error(Errc::non_finite,
                  "demand at hour " + std::to_string(h + 1) + " is not finite",
                  h + 1);
    }
    if (v <= 0.0) {
      throw Error(Errc::non_positive_demand,
                  "demand at hour " + std::to_string(h + 1) +
                      " must be strictly positive",
                  h + 1);
    }
    p.hours[h] = v;
  }
  return p;
}

inline NormalizedProfile normalize(const DailyProfile& p) {
  const double total = p.total();
  NormalizedProfile n;
  for (int h = 0; h < kHoursPerDay; ++h) n.weights[h] = p.hours[h] / total;
  return n;
}

inline AggregateProfile aggregate(const std::vector<DailyProfile>& profiles) {
  if (profiles.empty()) {
    throw Error(Errc::empty_collection, "aggregate of zero profiles");
  }
  AggregateProfile agg;
  for (const DailyProfile& p : profiles) {
    for (int h = 0; h < kHoursPerDay; ++h) agg.hours[h] += p.hours[h];
  }
  agg.consumer_count = static_cast<int>(profiles.size());
  return agg;
}

}  // namespace tarifflens
