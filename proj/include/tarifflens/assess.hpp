// Price-scheme efficiency scoring: the degree of consistency (normalized
// mutual information between the profile partition and the rate partition),
// the distortion index (share of consumer pairs whose MCI-index order and
// rate order disagree), and the per-consumer subsidy/tax ledger.
#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tarifflens/cluster.hpp"
#include "tarifflens/core.hpp"
#include "tarifflens/impact.hpp"
#include "tarifflens/ingest.hpp"
#include "tarifflens/tariff.hpp"

namespace tarifflens {

struct DocResult {
  DayDate day;
  double doc = 0.0;
  double h_profile = 0.0;    // bits
  double h_rate = 0.0;       // bits
  double mutual_info = 0.0;  // bits
};

struct DtResult {
  DayDate day;
  double dt_percent = 0.0;
  long discordant_pairs = 0;
  long comparable_pairs = 0;
  long total_pairs = 0;
};

enum class SubsidyFlag { subsidized, taxed, neutral };

inline const char* subsidy_flag_name(SubsidyFlag f) {
  switch (f) {
    case SubsidyFlag::subsidized: return "subsidized";
    case SubsidyFlag::taxed: return "taxed";
    case SubsidyFlag::neutral: return "neutral";
  }
  return "?";
}

struct SubsidyEntry {
  ConsumerId consumer;
  double mci = 0.0;
  double paid_rate = 0.0;
  double amount = 0.0;  // (mci - paid_rate) * daily total
  SubsidyFlag flag = SubsidyFlag::neutral;
};

struct SubsidyLedger {
  DayDate day;
  std::vector<SubsidyEntry> entries;
  double total_amount = 0.0;
};

// ---------------------------------------------------------------------------
// Degree of consistency (normalized mutual information, log base 2)
// ---------------------------------------------------------------------------

namespace detail {

// Sums after sorting, so the result depends only on the multiset of terms.
// That keeps DOC exactly symmetric and exactly invariant under relabeling.
inline double sorted_sum(std::vector<double>& terms) {
  std::sort(terms.begin(), terms.end());
  double s = 0.0;
  for (double t : terms) s += t;
  return s;
}

}  // namespace detail

inline DocResult doc(const Partition& profile_part,
                     const Partition& rate_part) {
  if (profile_part.day != rate_part.day) {
    throw Error(Errc::consumer_set_mismatch, "partitions are for different days");
  }
  const auto& pl = profile_part.labels;
  const auto& rl = rate_part.labels;
  if (pl.size() != rl.size()) {
    throw Error(Errc::consumer_set_mismatch, "consumer sets differ in size");
  }

  std::map<int, long> row_counts, col_counts;
  std::map<std::pair<int, int>, long> cell_counts;
  auto it_r = rl.begin();
  for (auto it_p = pl.begin(); it_p != pl.end(); ++it_p, ++it_r) {
    if (it_p->first != it_r->first) {
      throw Error(Errc::consumer_set_mismatch,
                  "consumer sets differ: " + it_p->first + " vs " +
                      it_r->first);
    }
    ++row_counts[it_p->second];
    ++col_counts[it_r->second];
    ++cell_counts[{it_p->second, it_r->second}];
  }
  const double n = static_cast<double>(pl.size());

  auto entropy_bits = [&](const std::map<int, long>& counts) {
    std::vector<double> terms;
    terms.reserve(counts.size());
    for (const auto& [label, c] : counts) {
      const double rho = static_cast<double>(c) / n;
      terms.push_back(rho * std::log2(rho));
    }
    return -detail::sorted_sum(terms);
  };

  DocResult out;
  out.day = profile_part.day;
  out.h_profile = entropy_bits(row_counts);
  out.h_rate = entropy_bits(col_counts);

  // Identical partitions up to label names: every occupied row meets exactly
  // one occupied column and vice versa. NMI is exactly 1 there; computing the
  // value keeps it free of rounding noise.
  const bool bijective = cell_counts.size() == row_counts.size() &&
                         cell_counts.size() == col_counts.size();
  if (bijective) {
    out.mutual_info = (out.h_profile + out.h_rate) / 2.0;
    out.doc = 1.0;
    return out;
  }

  std::vector<double> mi_terms;
  mi_terms.reserve(cell_counts.size());
  for (const auto& [cell, c] : cell_counts) {
    const double rho_ts = static_cast<double>(c) / n;
    const double rho_t = static_cast<double>(row_counts[cell.first]) / n;
    const double rho_s = static_cast<double>(col_counts[cell.second]) / n;
    mi_terms.push_back(rho_ts * std::log2(rho_ts / (rho_t * rho_s)));
  }
  out.mutual_info = std::max(0.0, detail::sorted_sum(mi_terms));

  const double denom = out.h_profile + out.h_rate;
  if (denom > 0.0) {
    out.doc = std::clamp(2.0 * out.mutual_info / denom, 0.0, 1.0);
  } else {
    out.doc = 1.0;  // both partitions single-cluster
  }
  return out;
}

// ---------------------------------------------------------------------------
// Distortion (Kendall-tau style discordance)
// ---------------------------------------------------------------------------

namespace detail {

struct Fenwick {
  std::vector<long> tree;
  explicit Fenwick(size_t n) : tree(n + 1, 0) {}
  void add(size_t i) {
    for (size_t x = i + 1; x < tree.size(); x += x & (~x + 1)) ++tree[x];
  }
  // Count of inserted slots in [0, i).
  long prefix(size_t i) const {
    long s = 0;
    for (size_t x = i; x > 0; x -= x & (~x + 1)) s += tree[x];
    return s;
  }
};

}  // namespace detail

// Counts unordered pairs ordered oppositely by phi and rate, with |delta| <=
// epsilon treated as a tie in either coordinate. The count matches the O(N^2)
// definition pair for pair: every comparison here evaluates the same
// floating-point expressions a direct double loop would.
inline DtResult dt(const std::map<ConsumerId, double>& phi,
                   const std::map<ConsumerId, double>& rates,
                   double epsilon = 1e-12, const DayDate& day = DayDate{}) {
  if (phi.size() != rates.size() ||
      !std::equal(phi.begin(), phi.end(), rates.begin(),
                  [](const auto& a, const auto& b) {
                    return a.first == b.first;
                  })) {
    throw Error(Errc::consumer_set_mismatch,
                "phi and rate tables cover different consumers");
  }
  const size_t n = phi.size();
  if (n < 2) {
    throw Error(Errc::too_few_consumers, "need at least 2 consumers");
  }

  std::vector<double> p(n), r(n);
  {
    size_t i = 0;
    auto it_r = rates.begin();
    for (auto it_p = phi.begin(); it_p != phi.end(); ++it_p, ++it_r, ++i) {
      p[i] = it_p->second;
      r[i] = it_r->second;
    }
  }

  std::vector<size_t> by_phi(n), by_rate(n);
  for (size_t i = 0; i < n; ++i) by_phi[i] = by_rate[i] = i;
  std::sort(by_phi.begin(), by_phi.end(),
            [&](size_t a, size_t b) { return p[a] < p[b]; });
  std::sort(by_rate.begin(), by_rate.end(),
            [&](size_t a, size_t b) { return r[a] < r[b]; });

  std::vector<size_t> rate_slot(n);
  std::vector<double> rate_sorted(n);
  for (size_t s = 0; s < n; ++s) {
    rate_slot[by_rate[s]] = s;
    rate_sorted[s] = r[by_rate[s]];
  }

  detail::Fenwick fen(n);
  long discordant = 0;
  long comparable = 0;
  long inserted = 0;
  size_t next = 0;
  for (size_t bi = 0; bi < n; ++bi) {
    const size_t b = by_phi[bi];
    while (next < bi && p[b] - p[by_phi[next]] > epsilon) {
      fen.add(rate_slot[by_phi[next]]);
      ++inserted;
      ++next;
    }
    if (inserted == 0) continue;
    const double rb = r[b];
    // First slot whose rate exceeds rb by more than epsilon.
    const auto hi_it = std::partition_point(
        rate_sorted.begin(), rate_sorted.end(),
        [&](double v) { return !(v - rb > epsilon); });
    // Slots whose rate falls below rb by more than epsilon.
    const auto lo_it = std::partition_point(
        rate_sorted.begin(), rate_sorted.end(),
        [&](double v) { return rb - v > epsilon; });
    const long above =
        inserted - fen.prefix(static_cast<size_t>(hi_it - rate_sorted.begin()));
    const long below =
        fen.prefix(static_cast<size_t>(lo_it - rate_sorted.begin()));
    discordant += above;  // lower phi but strictly higher rate
    comparable += above + below;
  }

  DtResult out;
  out.day = day;
  out.discordant_pairs = discordant;
  out.comparable_pairs = comparable;
  out.total_pairs = static_cast<long>(n) * static_cast<long>(n - 1) / 2;
  out.dt_percent =
      100.0 * static_cast<double>(discordant) / static_cast<double>(out.total_pairs);
  return out;
}

// ---------------------------------------------------------------------------
// Subsidy ledger
// ---------------------------------------------------------------------------

inline SubsidyLedger subsidy_ledger(const Dataset& d, const DayDate& day,
                                    const HourSeries& lambda,
                                    const PriceScheme& scheme) {
  constexpr double kNeutralTol = 1e-12;
  SubsidyLedger ledger;
  ledger.day = day;
  for (const auto& [consumer, profile] : d.day_profiles(day)) {
    SubsidyEntry e;
    e.consumer = consumer;
    e.mci = mci_from_rtp(*profile, lambda);
    e.paid_rate = bill(scheme, *profile).avg_rate;
    const double gap = e.mci - e.paid_rate;
    e.amount = gap * profile->total();
    if (std::fabs(gap) <= kNeutralTol) {
      e.flag = SubsidyFlag::neutral;
    } else {
      e.flag = gap > 0.0 ? SubsidyFlag::subsidized : SubsidyFlag::taxed;
    }
    ledger.total_amount += e.amount;
    ledger.entries.push_back(std::move(e));
  }
  return ledger;
}

// ---------------------------------------------------------------------------
// Whole-scheme assessment
// ---------------------------------------------------------------------------

struct AssessOptions {
  int bins = 1;
  // Eq.-style strict comparisons; raise to treat near-equal values as ties.
  double dt_epsilon = 0.0;
  // Rate bins span the range observed across all assessed days; set to bin
  // each day against its own min/max instead.
  bool per_day_range = false;
  std::optional<HourSeries> prices;  // reference RTPs; enables the ledger
};

struct DayAssessment {
  DayDate day;
  DocResult doc;
  DtResult dt;
  std::optional<SubsidyLedger> ledger;
};

inline std::vector<DayAssessment> assess_scheme(
    const Dataset& d, const ClusterModel& model, const PriceScheme& scheme,
    const FeatureSpec& spec, std::vector<DayDate> days,
    const AssessOptions& options) {
  std::sort(days.begin(), days.end());
  days.erase(std::unique(days.begin(), days.end()), days.end());

  std::map<DayDate, std::map<ConsumerId, double>> rates_by_day;
  for (const DayDate& day : days) {
    rates_by_day[day] = avg_rate_table(d, day, scheme);
  }

  std::optional<std::pair<double, double>> global_range;
  if (!options.per_day_range) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& [day, rates] : rates_by_day) {
      for (const auto& [consumer, rate] : rates) {
        lo = std::min(lo, rate);
        hi = std::max(hi, rate);
      }
    }
    if (lo <= hi) global_range = {lo, hi};
  }

  std::vector<DayAssessment> out;
  out.reserve(days.size());
  for (const DayDate& day : days) {
    const auto& rates = rates_by_day[day];
    DayAssessment a;
    a.day = day;

    const Partition profile_part = partition_by_profile(d, model, day);
    const Partition rate_part =
        partition_by_rate(day, rates, options.bins, global_range);
    a.doc = doc(profile_part, rate_part);

    std::map<ConsumerId, double> phi;
    for (const ImpactRecord& rec :
         impact_table(d, day, spec, std::nullopt, &model)) {
      phi[rec.consumer] = rec.phi;
    }
    a.dt = dt(phi, rates, options.dt_epsilon, day);

    if (options.prices.has_value()) {
      a.ledger = subsidy_ledger(d, day, *options.prices, scheme);
    }
    out.push_back(std::move(a));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Report files
// ---------------------------------------------------------------------------

inline nlohmann::json assessment_report_json(
    const PriceScheme& scheme, const AssessOptions& options,
    const std::vector<DayAssessment>& days,
    const std::optional<std::string>& ledger_path = std::nullopt) {
  nlohmann::json day_list = nlohmann::json::array();
  for (const DayAssessment& a : days) {
    day_list.push_back({{"date", a.day.to_string()},
                        {"doc", a.doc.doc},
                        {"h_profile", a.doc.h_profile},
                        {"h_rate", a.doc.h_rate},
                        {"dt_percent", a.dt.dt_percent},
                        {"discordant", a.dt.discordant_pairs},
                        {"comparable", a.dt.comparable_pairs}});
  }
  nlohmann::json j{{"scheme", scheme_to_json(scheme)},
                   {"bins", options.bins},
                   {"dt_epsilon", options.dt_epsilon},
                   {"rate_bin_range", options.per_day_range ? "per_day" : "global"},
                   {"days", day_list}};
  if (ledger_path.has_value()) j["ledger_path"] = *ledger_path;
  return j;
}

inline std::string assessment_plot_csv(const std::vector<DayAssessment>& days) {
  std::string out = "date,doc,dt_percent\n";
  for (const DayAssessment& a : days) {
    out += a.day.to_string() + "," + format_sig12(a.doc.doc) + "," +
           format_sig12(a.dt.dt_percent) + "\n";
  }
  return out;
}

inline std::string ledger_csv(const std::vector<DayAssessment>& days) {
  std::string out = "consumer_id,date,mci,paid_rate,amount,flag\n";
  for (const DayAssessment& a : days) {
    if (!a.ledger.has_value()) continue;
    for (const SubsidyEntry& e : a.ledger->entries) {
      out += csv_escape(e.consumer) + "," + a.day.to_string() + "," +
             format_sig12(e.mci) + "," + format_sig12(e.paid_rate) + "," +
             format_sig12(e.amount) + "," + subsidy_flag_name(e.flag) + "\n";
    }
  }
  return out;
}

}  // namespace tarifflens
