// Aggregate-profile features and marginal impacts.
//
// A feature is a piecewise-linear function of the aggregate day: peak demand,
// or the maximal rise within an hour window. A consumer's marginal feature
// impact (MFI) is the one-sided directional derivative of a feature along the
// consumer's l1-normalized profile; the marginal cost impact (MCI) under
// real-time prices is the demand-weighted average of the hourly prices.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "tarifflens/cluster.hpp"
#include "tarifflens/core.hpp"
#include "tarifflens/ingest.hpp"
#include "tarifflens/parallel.hpp"

namespace tarifflens {

struct FeatureSpec {
  HourRange morning{5, 12};
  HourRange evening{16, 22};
  // Feature weights (mr, er, pd) for the MCI index.
  std::array<double, 3> mu{1.0, 1.0, 1.0};

  void validate() const {
    if (!morning.valid() || !evening.valid()) {
      throw Error(Errc::bad_input, "feature windows must lie within [1,24]");
    }
    for (double m : mu) {
      if (!(m > 0.0) || !std::isfinite(m)) {
        throw Error(Errc::bad_input, "feature weights must be positive");
      }
    }
  }
};

struct FeatureValues {
  double mr = 0.0;  // morning ramp range, kWh
  double er = 0.0;  // evening ramp range, kWh
  double pd = 0.0;  // peak demand, kWh
};

struct MfiTriple {
  double mr = 0.0;
  double er = 0.0;
  double pd = 0.0;
};

struct ImpactRecord {
  ConsumerId consumer;
  DayDate day;
  MfiTriple mfi;
  double phi = 0.0;
  std::optional<double> mci;  // present only when prices are known
};

namespace detail {

// Maximal rise max_{h1 <= h2 in window} (L[h2] - L[h1]); the trivial h1 == h2
// pairs make the value non-negative.
inline double ramp_range(const HourSeries& hours, const HourRange& w) {
  double low = hours[w.first - 1];
  double best = 0.0;
  for (int h = w.first - 1; h <= w.last - 1; ++h) {
    low = std::min(low, hours[h]);
    best = std::max(best, hours[h] - low);
  }
  return best;
}

// One-sided derivative of the ramp range along direction u: the best
// per-pair derivative over all pairs attaining the maximum.
inline double ramp_derivative(const HourSeries& hours, const HourRange& w,
                              const HourSeries& u) {
  const double value = ramp_range(hours, w);
  double best = -std::numeric_limits<double>::infinity();
  for (int h1 = w.first - 1; h1 <= w.last - 1; ++h1) {
    for (int h2 = h1; h2 <= w.last - 1; ++h2) {
      if (hours[h2] - hours[h1] == value) {
        best = std::max(best, u[h2] - u[h1]);
      }
    }
  }
  return best;
}

inline double peak_derivative(const HourSeries& hours, const HourSeries& u) {
  const double peak = *std::max_element(hours.begin(), hours.end());
  double best = -std::numeric_limits<double>::infinity();
  for (int h = 0; h < kHoursPerDay; ++h) {
    if (hours[h] == peak) best = std::max(best, u[h]);
  }
  return best;
}

}  // namespace detail

inline FeatureValues features(const AggregateProfile& agg,
                              const FeatureSpec& spec) {
  FeatureValues f;
  f.mr = detail::ramp_range(agg.hours, spec.morning);
  f.er = detail::ramp_range(agg.hours, spec.evening);
  f.pd = *std::max_element(agg.hours.begin(), agg.hours.end());
  return f;
}

// Analytic MFIs along an already-normalized direction.
inline MfiTriple mfi_along(const AggregateProfile& agg,
                           const NormalizedProfile& u,
                           const FeatureSpec& spec) {
  MfiTriple m;
  m.mr = detail::ramp_derivative(agg.hours, spec.morning, u.weights);
  m.er = detail::ramp_derivative(agg.hours, spec.evening, u.weights);
  m.pd = detail::peak_derivative(agg.hours, u.weights);
  return m;
}

inline MfiTriple mfi(const AggregateProfile& agg, const DailyProfile& li,
                     const FeatureSpec& spec) {
  return mfi_along(agg, normalize(li), spec);
}

// Definitional one-sided difference quotient; the independent check on the
// analytic derivative.
inline MfiTriple mfi_fd(const AggregateProfile& agg, const DailyProfile& li,
                        const FeatureSpec& spec, double delta = 0.0) {
  if (delta <= 0.0) delta = 1e-6 * agg.total();
  const NormalizedProfile u = normalize(li);
  AggregateProfile bumped = agg;
  for (int h = 0; h < kHoursPerDay; ++h) {
    bumped.hours[h] += delta * u.weights[h];
  }
  const FeatureValues f0 = features(agg, spec);
  const FeatureValues f1 = features(bumped, spec);
  return {(f1.mr - f0.mr) / delta, (f1.er - f0.er) / delta,
          (f1.pd - f0.pd) / delta};
}

// Eq.-style weighted average of hourly prices with the consumer's demand
// shares as weights. Anchoring at the cheapest hour keeps the result exactly
// equal to a constant price and never below the price floor; the final min
// guards the ceiling against rounding.
inline double mci_from_rtp(const DailyProfile& li, const HourSeries& lambda) {
  const double lo = *std::min_element(lambda.begin(), lambda.end());
  const double hi = *std::max_element(lambda.begin(), lambda.end());
  const double total = li.total();
  double acc = 0.0;
  for (int h = 0; h < kHoursPerDay; ++h) {
    acc += (li.hours[h] / total) * (lambda[h] - lo);
  }
  return std::min(lo + acc, hi);
}

inline double mci_index(const MfiTriple& m, const FeatureSpec& spec) {
  return spec.mu[0] * m.mr + spec.mu[1] * m.er + spec.mu[2] * m.pd;
}

// Per-consumer impacts for one day. When a cluster model is supplied the
// MFIs are computed once per profile type at the type's kernel direction and
// shared by its members; MCI stays per-consumer.
inline std::vector<ImpactRecord> impact_table(
    const Dataset& d, const DayDate& day, const FeatureSpec& spec,
    const std::optional<HourSeries>& prices = std::nullopt,
    const ClusterModel* model = nullptr) {
  spec.validate();
  const auto day_rows = d.day_profiles(day);

  std::vector<DailyProfile> profiles;
  profiles.reserve(day_rows.size());
  for (const auto& [consumer, profile] : day_rows) {
    profiles.push_back(*profile);
  }
  const AggregateProfile agg = aggregate(profiles);

  std::vector<MfiTriple> kernel_mfi;
  if (model != nullptr) {
    kernel_mfi.resize(model->kernels.size());
    for (size_t j = 0; j < model->kernels.size(); ++j) {
      const HourSeries& kern = model->kernels[j];
      double sum = 0.0;
      for (double v : kern) sum += v;
      NormalizedProfile dir;
      for (int h = 0; h < kHoursPerDay; ++h) dir.weights[h] = kern[h] / sum;
      kernel_mfi[j] = mfi_along(agg, dir, spec);
    }
  }

  std::vector<ImpactRecord> records(day_rows.size());
  parallel_for(day_rows.size(), [&](size_t i) {
    ImpactRecord& rec = records[i];
    rec.consumer = day_rows[i].first;
    rec.day = day;
    const DailyProfile& li = *day_rows[i].second;
    if (model != nullptr) {
      rec.mfi = kernel_mfi[assign(*model, normalize(li))];
    } else {
      rec.mfi = mfi(agg, li, spec);
    }
    rec.phi = mci_index(rec.mfi, spec);
    if (prices.has_value()) rec.mci = mci_from_rtp(li, *prices);
  });
  return records;
}

}  // namespace tarifflens
