// Shared fixtures and independent oracles for the test suites. Everything
// here recomputes results by definition (pair scans, double loops) so the
// library implementations have something honest to disagree with.
#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <vector>

#include "tarifflens/core.hpp"
#include "tarifflens/impact.hpp"

namespace support {

using tarifflens::DailyProfile;
using tarifflens::FeatureSpec;
using tarifflens::HourRange;
using tarifflens::HourSeries;
using tarifflens::kHoursPerDay;

using Rng = std::mt19937_64;

inline double u01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
  return lo + u01(rng) * (hi - lo);
}

inline DailyProfile random_profile(Rng& rng, double lo = 0.2, double hi = 3.0) {
  DailyProfile p;
  for (int h = 0; h < kHoursPerDay; ++h) p.hours[h] = uniform(rng, lo, hi);
  return p;
}

inline HourSeries random_prices(Rng& rng, double lo = 0.3, double hi = 0.9) {
  HourSeries s{};
  for (int h = 0; h < kHoursPerDay; ++h) s[h] = uniform(rng, lo, hi);
  return s;
}

// ---------------------------------------------------------------------------
// Feature oracle: exhaustive O(24^2) pair scan
// ---------------------------------------------------------------------------

inline double ramp_by_pair_scan(const HourSeries& hours, const HourRange& w) {
  double best = -std::numeric_limits<double>::infinity();
  for (int h1 = w.first - 1; h1 <= w.last - 1; ++h1) {
    for (int h2 = h1; h2 <= w.last - 1; ++h2) {
      best = std::max(best, hours[h2] - hours[h1]);
    }
  }
  return best;
}

// Gap between the best and the second-best distinct candidate value; the
// margin that must dominate the finite-difference step for the analytic and
// numeric derivatives to agree.
inline double ramp_margin(const HourSeries& hours, const HourRange& w) {
  const double best = ramp_by_pair_scan(hours, w);
  double second = -std::numeric_limits<double>::infinity();
  for (int h1 = w.first - 1; h1 <= w.last - 1; ++h1) {
    for (int h2 = h1; h2 <= w.last - 1; ++h2) {
      const double v = hours[h2] - hours[h1];
      if (v != best) second = std::max(second, v);
    }
  }
  return best - second;  // +inf when every pair attains the maximum
}

inline double peak_margin(const HourSeries& hours) {
  const double best = *std::max_element(hours.begin(), hours.end());
  double second = -std::numeric_limits<double>::infinity();
  for (double v : hours) {
    if (v != best) second = std::max(second, v);
  }
  return best - second;
}

inline double min_feature_margin(const HourSeries& hours,
                                 const FeatureSpec& spec) {
  return std::min({ramp_margin(hours, spec.morning),
                   ramp_margin(hours, spec.evening), peak_margin(hours)});
}

// ---------------------------------------------------------------------------
// Distortion oracle: the literal O(N^2) double loop
// ---------------------------------------------------------------------------

struct DtBrute {
  long discordant = 0;
  long comparable = 0;
  long total = 0;
};

inline DtBrute dt_brute_force(const std::vector<double>& phi,
                              const std::vector<double>& r, double epsilon) {
  DtBrute out;
  const size_t n = phi.size();
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      const bool phi_ij = phi[i] - phi[j] > epsilon;
      const bool phi_ji = phi[j] - phi[i] > epsilon;
      const bool r_ij = r[i] - r[j] > epsilon;
      const bool r_ji = r[j] - r[i] > epsilon;
      if ((phi_ij && r_ji) || (phi_ji && r_ij)) ++out.discordant;
      if ((phi_ij || phi_ji) && (r_ij || r_ji)) ++out.comparable;
      ++out.total;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cluster-label agreement up to permutation (exhaustive over k! mappings)
// ---------------------------------------------------------------------------

inline double label_agreement(const std::vector<int>& truth,
                              const std::vector<int>& found, int k) {
  std::vector<int> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  long best = 0;
  do {
    long hits = 0;
    for (size_t i = 0; i < truth.size(); ++i) {
      if (perm[found[i]] == truth[i]) ++hits;
    }
    best = std::max(best, hits);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(best) / static_cast<double>(truth.size());
}

}  // namespace support
