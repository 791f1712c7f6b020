#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "support.hpp"
#include "tarifflens/core.hpp"

using namespace tarifflens;

namespace {

DailyProfile uniform_profile(double v = 1.0) {
  DailyProfile p;
  p.hours.fill(v);
  return p;
}

}  // namespace

TEST_CASE("validate_profile accepts a clean day") {
  std::vector<double> raw(24, 1.0);
  const DailyProfile p = validate_profile(raw);
  REQUIRE(p.total() == Catch::Approx(24.0));
}

TEST_CASE("validate_profile rejects bad input") {
  std::vector<double> raw(23, 1.0);
  try {
    validate_profile(raw);
    FAIL("expected WrongLength");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::wrong_length);
  }

  raw.assign(24, 1.0);
  raw[6] = 0.0;  // hour 7
  try {
    validate_profile(raw);
    FAIL("expected NonPositiveDemand");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::non_positive_demand);
    CHECK(e.detail() == 7);
  }

  raw[6] = std::numeric_limits<double>::quiet_NaN();
  try {
    validate_profile(raw);
    FAIL("expected NonFinite");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::non_finite);
  }
}

TEST_CASE("normalize: uniform day has uniform weights") {
  const NormalizedProfile n = normalize(uniform_profile());
  for (double w : n.weights) REQUIRE(w == 1.0 / 24.0);
}

TEST_CASE("normalize is exactly scale invariant for dyadic factors") {
  const NormalizedProfile a = normalize(uniform_profile(1.0));
  const NormalizedProfile b = normalize(uniform_profile(2.0));
  for (int h = 0; h < kHoursPerDay; ++h) REQUIRE(a.weights[h] == b.weights[h]);

  support::Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const DailyProfile p = support::random_profile(rng);
    const int expo = static_cast<int>(support::uniform(rng, -20.0, 20.0));
    const double alpha = std::ldexp(1.0, expo);
    DailyProfile q;
    for (int h = 0; h < kHoursPerDay; ++h) q.hours[h] = alpha * p.hours[h];
    const NormalizedProfile np = normalize(p);
    const NormalizedProfile nq = normalize(q);
    for (int h = 0; h < kHoursPerDay; ++h) {
      REQUIRE(np.weights[h] == nq.weights[h]);
    }
  }
}

TEST_CASE("normalize scale invariance within 1e-12 for arbitrary factors") {
  support::Rng rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    const DailyProfile p = support::random_profile(rng);
    const double alpha = support::uniform(rng, 1e-3, 1e3);
    DailyProfile q;
    for (int h = 0; h < kHoursPerDay; ++h) q.hours[h] = alpha * p.hours[h];
    const NormalizedProfile np = normalize(p);
    const NormalizedProfile nq = normalize(q);
    for (int h = 0; h < kHoursPerDay; ++h) {
      REQUIRE(np.weights[h] == Catch::Approx(nq.weights[h]).margin(1e-12));
    }
  }
}

TEST_CASE("normalize divides by the total") {
  DailyProfile p = uniform_profile();
  p.hours[0] = 1.0;
  p.hours[1] = 3.0;  // total 26
  const NormalizedProfile n = normalize(p);
  REQUIRE(n.weights[0] == 1.0 / 26.0);
  REQUIRE(n.weights[1] == 3.0 / 26.0);
  REQUIRE(n.weights[2] == 1.0 / 26.0);

  double sum = 0.0;
  for (double w : n.weights) sum += w;
  REQUIRE(sum == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("normalize then rescale reconstructs the profile") {
  support::Rng rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    const DailyProfile p = support::random_profile(rng, 0.01, 50.0);
    const NormalizedProfile n = normalize(p);
    const double total = p.total();
    for (int h = 0; h < kHoursPerDay; ++h) {
      REQUIRE(n.weights[h] * total ==
              Catch::Approx(p.hours[h]).epsilon(1e-9));
    }
  }
}

TEST_CASE("aggregate: identity, additivity, column sums") {
  const DailyProfile one = uniform_profile();
  const AggregateProfile single = aggregate({one});
  REQUIRE(single.consumer_count == 1);
  for (double v : single.hours) REQUIRE(v == 1.0);

  const AggregateProfile two = aggregate({one, one});
  REQUIRE(two.consumer_count == 2);
  for (double v : two.hours) REQUIRE(v == 2.0);

  support::Rng rng(17);
  std::vector<DailyProfile> profiles;
  for (int i = 0; i < 40; ++i) profiles.push_back(support::random_profile(rng));
  const AggregateProfile agg = aggregate(profiles);
  for (int h = 0; h < kHoursPerDay; ++h) {
    double column = 0.0;
    for (const DailyProfile& p : profiles) column += p.hours[h];
    REQUIRE(agg.hours[h] == column);
  }
}

TEST_CASE("aggregate is permutation invariant") {
  support::Rng rng(19);
  std::vector<DailyProfile> profiles;
  for (int i = 0; i < 64; ++i) profiles.push_back(support::random_profile(rng));
  const AggregateProfile a = aggregate(profiles);
  std::shuffle(profiles.begin(), profiles.end(), rng);
  const AggregateProfile b = aggregate(profiles);
  for (int h = 0; h < kHoursPerDay; ++h) {
    REQUIRE(a.hours[h] == Catch::Approx(b.hours[h]).epsilon(1e-12));
  }
}

TEST_CASE("aggregate rejects an empty collection") {
  try {
    aggregate({});
    FAIL("expected EmptyCollection");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::empty_collection);
  }
}

TEST_CASE("DayDate round trips and validates") {
  const DayDate d = DayDate::parse("2014-04-18");
  REQUIRE(d.to_string() == "2014-04-18");
  REQUIRE(DayDate{2016, 2, 29}.valid());
  REQUIRE_FALSE(DayDate{2014, 2, 29}.valid());
  REQUIRE_THROWS_AS(DayDate::parse("2014-02-29"), Error);
  REQUIRE_THROWS_AS(DayDate::parse("2014/02/01"), Error);

  REQUIRE(DayDate{2014, 1, 31}.next() == DayDate{2014, 2, 1});
  REQUIRE(DayDate{2014, 12, 31}.next() == DayDate{2015, 1, 1});
}
