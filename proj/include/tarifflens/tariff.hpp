// Retail price schemes, daily bills, daily average rates and rate binning.
#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "tarifflens/core.hpp"
#include "tarifflens/impact.hpp"
#include "tarifflens/ingest.hpp"
#include "tarifflens/io.hpp"
#include "tarifflens/jsonio.hpp"

namespace tarifflens {

struct Flat {
  double rate = 0.0;
};

struct TouBand {
  HourRange hours;
  double rate = 0.0;
};

struct TimeOfUse {
  std::vector<TouBand> bands;  // must cover hours 1..24 exactly once
};

struct Tiered {
  std::vector<double> thresholds;  // ascending daily-kWh breakpoints
  std::vector<double> rates;       // one more rate than thresholds
};

struct RealTime {
  HourSeries lambda{};
};

// Uniform daily rate equal to the profile's MCI against a reference set of
// real-time prices.
struct ProfileMenu {
  HourSeries lambda{};
};

using PriceScheme =
    std::variant<Flat, TimeOfUse, Tiered, RealTime, ProfileMenu>;

struct DailyBill {
  ConsumerId consumer;
  DayDate day;
  double amount = 0.0;
  double avg_rate = 0.0;
};

inline void validate_scheme(const PriceScheme& scheme) {
  auto check_rate = [](double r) {
    if (!std::isfinite(r) || r < 0.0) {
      throw Error(Errc::bad_input, "rates must be finite and non-negative");
    }
  };
  if (const Flat* f = std::get_if<Flat>(&scheme)) {
    check_rate(f->rate);
  } else if (const TimeOfUse* t = std::get_if<TimeOfUse>(&scheme)) {
    std::array<int, kHoursPerDay> covered{};
    for (const TouBand& b : t->bands) {
      check_rate(b.rate);
      if (!b.hours.valid()) {
        throw Error(Errc::bad_input, "TOU band outside [1,24]");
      }
      for (int h = b.hours.first; h <= b.hours.last; ++h) ++covered[h - 1];
    }
    for (int h = 0; h < kHoursPerDay; ++h) {
      if (covered[h] != 1) {
        throw Error(Errc::bad_input,
                    "TOU bands must cover every hour exactly once", h + 1);
      }
    }
  } else if (const Tiered* t = std::get_if<Tiered>(&scheme)) {
    if (t->rates.size() != t->thresholds.size() + 1) {
      throw Error(Errc::bad_input, "tiered needs one more rate than thresholds");
    }
    for (double r : t->rates) check_rate(r);
    for (size_t i = 0; i < t->thresholds.size(); ++i) {
      if (!std::isfinite(t->thresholds[i]) || t->thresholds[i] <= 0.0 ||
          (i > 0 && t->thresholds[i] <= t->thresholds[i - 1])) {
        throw Error(Errc::bad_input, "tier thresholds must ascend from > 0");
      }
    }
  } else if (const RealTime* r = std::get_if<RealTime>(&scheme)) {
    for (double v : r->lambda) check_rate(v);
  } else if (const ProfileMenu* p = std::get_if<ProfileMenu>(&scheme)) {
    for (double v : p->lambda) check_rate(v);
  }
}

inline DailyBill bill(const PriceScheme& scheme, const DailyProfile& p) {
  const double total = p.total();
  DailyBill b;
  if (const Flat* f = std::get_if<Flat>(&scheme)) {
    b.amount = f->rate * total;
    b.avg_rate = b.amount / total;
  } else if (const TimeOfUse* t = std::get_if<TimeOfUse>(&scheme)) {
    double amount = 0.0;
    for (const TouBand& band : t->bands) {
      double energy = 0.0;
      for (int h = band.hours.first; h <= band.hours.last; ++h) {
        energy += p.hours[h - 1];
      }
      amount += band.rate * energy;
    }
    b.amount = amount;
    b.avg_rate = amount / total;
  } else if (const Tiered* t = std::get_if<Tiered>(&scheme)) {
    double amount = 0.0;
    double prev = 0.0;
    for (size_t i = 0; i < t->thresholds.size(); ++i) {
      const double hi = t->thresholds[i];
      if (total <= prev) break;
      amount += t->rates[i] * (std::min(total, hi) - prev);
      prev = hi;
    }
    if (total > prev) amount += t->rates.back() * (total - prev);
    b.amount = amount;
    b.avg_rate = amount / total;
  } else if (const RealTime* r = std::get_if<RealTime>(&scheme)) {
    // Billing the hourly prices and billing the MCI-rate menu are the same
    // money; routing both through the MCI keeps their average rates
    // bit-identical.
    b.avg_rate = mci_from_rtp(p, r->lambda);
    b.amount = b.avg_rate * total;
  } else if (const ProfileMenu* m = std::get_if<ProfileMenu>(&scheme)) {
    b.avg_rate = mci_from_rtp(p, m->lambda);
    b.amount = b.avg_rate * total;
  }
  return b;
}

inline std::map<ConsumerId, double> avg_rate_table(const Dataset& d,
                                                   const DayDate& day,
                                                   const PriceScheme& scheme) {
  const auto rows = d.day_profiles(day);
  std::vector<double> rates(rows.size());
  parallel_for(rows.size(), [&](size_t i) {
    rates[i] = bill(scheme, *rows[i].second).avg_rate;
  });
  std::map<ConsumerId, double> out;
  for (size_t i = 0; i < rows.size(); ++i) out[rows[i].first] = rates[i];
  return out;
}

// Equal-width binning of daily average rates. A rate exactly on an interior
// edge goes to the upper bin; anything at or beyond the top lands in the last
// bin. All rates equal with no explicit range collapses to a single bin.
inline Partition partition_by_rate(
    const DayDate& day, const std::map<ConsumerId, double>& rates, int bins,
    std::optional<std::pair<double, double>> range = std::nullopt) {
  if (bins < 1) throw Error(Errc::bad_input, "bins must be >= 1");
  Partition part;
  part.day = day;
  for (const auto& [consumer, r] : rates) {
    if (!std::isfinite(r)) {
      throw Error(Errc::non_finite_rate, "rate for " + consumer);
    }
  }
  double lo, hi;
  if (range.has_value()) {
    lo = range->first;
    hi = range->second;
    if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
      throw Error(Errc::bad_input, "bad rate range");
    }
  } else {
    lo = std::numeric_limits<double>::infinity();
    hi = -std::numeric_limits<double>::infinity();
    for (const auto& [consumer, r] : rates) {
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    if (rates.empty()) lo = hi = 0.0;
  }

  if (hi <= lo) {
    part.k = 1;
    for (const auto& [consumer, r] : rates) part.labels[consumer] = 0;
    return part;
  }

  // Bin edges e_j = lo + (width * j) / bins; bin(r) = max { j : e_j <= r }.
  const double width = hi - lo;
  std::vector<double> edges(bins + 1);
  for (int j = 0; j <= bins; ++j) {
    edges[j] = lo + (width * j) / bins;
  }
  part.k = bins;
  for (const auto& [consumer, r] : rates) {
    int b = 0;
    for (int j = bins - 1; j >= 1; --j) {
      if (edges[j] <= r) {
        b = j;
        break;
      }
    }
    part.labels[consumer] = b;
  }
  return part;
}

// ---------------------------------------------------------------------------
// Scheme file: JSON tagged by "type"
// ---------------------------------------------------------------------------

inline nlohmann::json scheme_to_json(const PriceScheme& scheme) {
  nlohmann::json j;
  if (const Flat* f = std::get_if<Flat>(&scheme)) {
    j = {{"type", "flat"}, {"rate", f->rate}};
  } else if (const TimeOfUse* t = std::get_if<TimeOfUse>(&scheme)) {
    nlohmann::json bands = nlohmann::json::array();
    for (const TouBand& b : t->bands) {
      bands.push_back({{"hours", {b.hours.first, b.hours.last}},
                       {"rate", b.rate}});
    }
    j = {{"type", "tou"}, {"bands", bands}};
  } else if (const Tiered* t = std::get_if<Tiered>(&scheme)) {
    j = {{"type", "tiered"},
         {"thresholds", t->thresholds},
         {"rates", t->rates}};
  } else if (const RealTime* r = std::get_if<RealTime>(&scheme)) {
    j = {{"type", "rtp"},
         {"lambda", std::vector<double>(r->lambda.begin(), r->lambda.end())}};
  } else if (const ProfileMenu* m = std::get_if<ProfileMenu>(&scheme)) {
    j = {{"type", "ppm"},
         {"lambda", std::vector<double>(m->lambda.begin(), m->lambda.end())}};
  }
  return j;
}

inline PriceScheme scheme_from_json(const nlohmann::json& j) {
  PriceScheme scheme;
  try {
    const std::string type = j.at("type").get<std::string>();
    if (type == "flat") {
      scheme = Flat{j.at("rate").get<double>()};
    } else if (type == "tou") {
      TimeOfUse t;
      for (const auto& band : j.at("bands")) {
        const auto hrs = band.at("hours").get<std::vector<int>>();
        if (hrs.size() != 2) {
          throw Error(Errc::schema_mismatch, "band hours must be [first,last]");
        }
        t.bands.push_back({HourRange{hrs[0], hrs[1]},
                           band.at("rate").get<double>()});
      }
      scheme = std::move(t);
    } else if (type == "tiered") {
      scheme = Tiered{j.at("thresholds").get<std::vector<double>>(),
                      j.at("rates").get<std::vector<double>>()};
    } else if (type == "rtp") {
      scheme = RealTime{detail::hour_series_from_json(j.at("lambda"))};
    } else if (type == "ppm") {
      scheme = ProfileMenu{detail::hour_series_from_json(j.at("lambda"))};
    } else {
      throw Error(Errc::schema_mismatch, "unknown scheme type '" + type + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::schema_mismatch,
                std::string("bad scheme file: ") + e.what());
  }
  validate_scheme(scheme);
  return scheme;
}

inline void write_scheme(const PriceScheme& s,
                         const std::filesystem::path& path) {
  write_file_atomic(path, scheme_to_json(s).dump(2) + "\n");
}

inline PriceScheme read_scheme(const std::filesystem::path& path) {
  return scheme_from_json(parse_json_file(path, "scheme file"));
}

}  // namespace tarifflens
