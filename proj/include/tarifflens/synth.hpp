// Deterministic synthetic populations with known archetypes, known MCIs and
// known partitions; the ground truth behind the oracle tests.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "tarifflens/core.hpp"
#include "tarifflens/impact.hpp"
#include "tarifflens/ingest.hpp"
#include "tarifflens/jsonio.hpp"
#include "tarifflens/tariff.hpp"

namespace tarifflens {

struct Archetype {
  std::string name;
  NormalizedProfile base;  // strictly positive weights
  double jitter = 0.0;     // relative per-hour noise amplitude, <= 0.05
  std::pair<double, double> level_range{10.0, 100.0};  // daily kWh

  void validate() const {
    double sum = 0.0;
    for (double w : base.weights) {
      if (!(w > 0.0)) {
        throw Error(Errc::bad_input,
                    "archetype '" + name + "' needs strictly positive weights");
      }
      sum += w;
    }
    if (std::fabs(sum - 1.0) > 1e-9) {
      throw Error(Errc::bad_input, "archetype '" + name + "' is not normalized");
    }
    if (jitter < 0.0 || jitter > 0.05) {
      throw Error(Errc::bad_input, "jitter must lie in [0, 0.05]");
    }
    if (!(level_range.first > 0.0) ||
        !(level_range.second >= level_range.first)) {
      throw Error(Errc::bad_input, "bad level range");
    }
  }
};

struct SynthSpec {
  std::vector<Archetype> archetypes;
  int consumers_per_archetype = 1;
  int days = 1;
  std::uint64_t rng_seed = 1;
  HourSeries rtp_prices{};     // base prices, used for every day
  double price_day_jitter = 0.0;  // optional per-day multiplicative wobble
  DayDate start_day{2014, 1, 1};

  void validate() const {
    if (archetypes.empty()) throw Error(Errc::bad_input, "no archetypes");
    for (const Archetype& a : archetypes) a.validate();
    if (consumers_per_archetype < 1 || days < 1) {
      throw Error(Errc::bad_input, "need >= 1 consumer and >= 1 day");
    }
    for (double p : rtp_prices) {
      if (!std::isfinite(p) || p < 0.0) {
        throw Error(Errc::bad_input, "rtp prices must be finite and >= 0");
      }
    }
  }
};

struct GroundTruth {
  std::map<ConsumerId, int> labels;  // consumer -> archetype index
  std::map<DayDate, HourSeries> prices;
  std::map<DayDate, std::map<ConsumerId, double>> mcis;
};

namespace detail {

struct SplitMix64 {
  std::uint64_t state;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  double u01() { return uniform01(next()); }
};

// Per-(consumer, day) stream so generation is schedule independent.
inline std::uint64_t sub_seed(std::uint64_t root, std::uint64_t consumer,
                              std::uint64_t day) {
  SplitMix64 mix(root ^ (consumer + 1) * 0xd6e8feb86659fd93ULL ^
                 (day + 1) * 0xa5cb3a12f7e90b15ULL);
  return mix.next();
}

}  // namespace detail

inline NormalizedProfile make_base(const std::array<double, kHoursPerDay>& raw) {
  double sum = 0.0;
  for (double v : raw) sum += v;
  NormalizedProfile p;
  for (int h = 0; h < kHoursPerDay; ++h) p.weights[h] = raw[h] / sum;
  return p;
}

// Six stock shapes spanning negative and positive ramp impacts. The spacing
// of their MCIs against default_rtp_prices() is wide relative to the rate
// spread a 2% jitter produces, so rate bins separate cleanly.
inline std::vector<Archetype> default_archetypes(double jitter = 0.02) {
  std::vector<Archetype> out;
  auto add = [&](const std::string& name,
                 const std::array<double, kHoursPerDay>& raw,
                 std::pair<double, double> levels) {
    out.push_back(Archetype{name, make_base(raw), jitter, levels});
  };
  add("night_valley",
      {3.2, 3.3, 3.4, 3.4, 3.3, 3.0, 2.2, 1.2, 0.7, 0.5, 0.45, 0.4,
       0.4, 0.4, 0.4, 0.45, 0.5, 0.6, 0.7, 0.8, 1.0, 1.6, 2.4, 3.0},
      {20.0, 60.0});
  add("morning_peak",
      {0.5, 0.5, 0.5, 0.5, 0.6, 1.0, 2.0, 3.0, 3.6, 3.8, 3.6, 3.2,
       2.4, 1.8, 1.4, 1.1, 0.9, 0.8, 0.8, 0.7, 0.7, 0.6, 0.6, 0.5},
      {15.0, 80.0});
  add("flat",
      {1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0,
       1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0},
      {30.0, 120.0});
  add("double_peak",
      {0.6, 0.6, 0.6, 0.6, 0.7, 1.0, 1.8, 2.6, 2.9, 2.6, 2.0, 1.4,
       1.0, 0.9, 0.9, 1.1, 1.7, 2.5, 3.0, 2.9, 2.2, 1.4, 0.9, 0.7},
      {10.0, 50.0});
  add("industrial_two_shift",
      {0.8, 0.8, 0.8, 0.8, 0.9, 1.1, 1.8, 2.4, 2.5, 2.4, 2.4, 2.3,
       1.6, 2.2, 2.4, 2.5, 2.6, 2.7, 2.8, 2.7, 2.4, 1.8, 1.2, 0.9},
      {50.0, 200.0});
  add("evening_peak",
      {0.5, 0.5, 0.5, 0.5, 0.5, 0.6, 0.8, 1.0, 1.1, 1.1, 1.1, 1.1,
       1.1, 1.1, 1.2, 1.4, 2.2, 3.2, 3.9, 4.1, 3.8, 2.8, 1.6, 0.8},
      {15.0, 90.0});
  return out;
}

// Duck-curve shaped reference prices inside the 0.35..0.87 band.
inline HourSeries default_rtp_prices() {
  return HourSeries{0.38, 0.37, 0.36, 0.35, 0.36, 0.38, 0.42, 0.46,
                    0.50, 0.53, 0.55, 0.56, 0.55, 0.54, 0.53, 0.55,
                    0.61, 0.70, 0.80, 0.87, 0.84, 0.72, 0.56, 0.44};
}

inline std::pair<Dataset, GroundTruth> generate(const SynthSpec& spec) {
  spec.validate();
  Dataset dataset;
  GroundTruth truth;

  const int total_consumers =
      static_cast<int>(spec.archetypes.size()) * spec.consumers_per_archetype;
  int id_width = 4;
  for (int n = total_consumers; n >= 10000; n /= 10) ++id_width;

  auto consumer_name = [&](int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "c%0*d", std::min(id_width, 12), index);
    return ConsumerId(buf);
  };

  std::vector<DayDate> days(spec.days);
  DayDate day = spec.start_day;
  for (int di = 0; di < spec.days; ++di, day = day.next()) {
    days[di] = day;
    HourSeries prices = spec.rtp_prices;
    if (spec.price_day_jitter > 0.0) {
      detail::SplitMix64 rng(detail::sub_seed(spec.rng_seed, 0x7fffffff, di));
      const double f = 1.0 + spec.price_day_jitter * (2.0 * rng.u01() - 1.0);
      for (double& p : prices) p *= f;
    }
    truth.prices[days[di]] = prices;
  }

  for (int ci = 0; ci < total_consumers; ++ci) {
    const int ai = ci / spec.consumers_per_archetype;
    const Archetype& arch = spec.archetypes[ai];
    const ConsumerId id = consumer_name(ci);
    truth.labels[id] = ai;

    for (int di = 0; di < spec.days; ++di) {
      detail::SplitMix64 rng(detail::sub_seed(spec.rng_seed, ci, di));
      const double level =
          arch.level_range.first +
          rng.u01() * (arch.level_range.second - arch.level_range.first);
      HourSeries noisy{};
      double sum = 0.0;
      for (int h = 0; h < kHoursPerDay; ++h) {
        noisy[h] =
            arch.base.weights[h] * (1.0 + arch.jitter * (2.0 * rng.u01() - 1.0));
        sum += noisy[h];
      }
      DailyProfile profile;
      for (int h = 0; h < kHoursPerDay; ++h) {
        profile.hours[h] = level * (noisy[h] / sum);
      }
      dataset.profiles.emplace(Dataset::Key{id, days[di]}, profile);
      truth.mcis[days[di]][id] = mci_from_rtp(profile, truth.prices[days[di]]);
    }
  }
  dataset.rebuild_index();
  return {std::move(dataset), std::move(truth)};
}

// The ground-truth profile price menu: every consumer's rate is its own MCI.
inline PriceScheme optimal_scheme(const GroundTruth& gt, const DayDate& day) {
  auto it = gt.prices.find(day);
  if (it == gt.prices.end()) {
    throw Error(Errc::unknown_day, "no ground truth for " + day.to_string());
  }
  return ProfileMenu{it->second};
}

// ---------------------------------------------------------------------------
// Spec / ground-truth files
// ---------------------------------------------------------------------------

inline SynthSpec synth_spec_from_json(const nlohmann::json& j) {
  SynthSpec spec;
  try {
    const auto& arch = j.at("archetypes");
    double jitter = j.value("jitter", 0.02);
    if (arch.is_string() && arch.get<std::string>() == "default") {
      spec.archetypes = default_archetypes(jitter);
    } else {
      for (const auto& a : arch) {
        Archetype ar;
        ar.name = a.at("name").get<std::string>();
        ar.base.weights = detail::hour_series_from_json(a.at("base"));
        ar.jitter = a.value("jitter", jitter);
        const auto lv = a.at("level_range").get<std::vector<double>>();
        if (lv.size() != 2) {
          throw Error(Errc::schema_mismatch, "level_range must be [lo, hi]");
        }
        ar.level_range = {lv[0], lv[1]};
        spec.archetypes.push_back(std::move(ar));
      }
    }
    spec.consumers_per_archetype = j.at("consumers_per_archetype").get<int>();
    spec.days = j.at("days").get<int>();
    spec.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    if (j.contains("rtp_prices") && j.at("rtp_prices").is_array()) {
      spec.rtp_prices = detail::hour_series_from_json(j.at("rtp_prices"));
    } else if (j.contains("rtp_prices")) {
      spec.rtp_prices =
          detail::hour_series_from_json(j.at("rtp_prices").at("base"));
      spec.price_day_jitter = j.at("rtp_prices").value("day_jitter", 0.0);
    } else {
      spec.rtp_prices = default_rtp_prices();
    }
    if (j.contains("start_day")) {
      spec.start_day = DayDate::parse(j.at("start_day").get<std::string>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::schema_mismatch,
                std::string("bad synth spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

inline SynthSpec read_synth_spec(const std::filesystem::path& path) {
  return synth_spec_from_json(parse_json_file(path, "synth spec"));
}

inline nlohmann::json ground_truth_to_json(const GroundTruth& gt) {
  nlohmann::json labels = nlohmann::json::object();
  for (const auto& [id, ai] : gt.labels) labels[id] = ai;
  nlohmann::json prices = nlohmann::json::object();
  for (const auto& [day, lambda] : gt.prices) {
    prices[day.to_string()] = detail::to_vec(lambda);
  }
  nlohmann::json mcis = nlohmann::json::object();
  for (const auto& [day, table] : gt.mcis) {
    nlohmann::json row = nlohmann::json::object();
    for (const auto& [id, v] : table) row[id] = v;
    mcis[day.to_string()] = std::move(row);
  }
  return nlohmann::json{
      {"labels", labels}, {"prices", prices}, {"mcis", mcis}};
}

inline GroundTruth ground_truth_from_json(const nlohmann::json& j) {
  GroundTruth gt;
  try {
    for (const auto& [id, ai] : j.at("labels").items()) {
      gt.labels[id] = ai.get<int>();
    }
    for (const auto& [date, lambda] : j.at("prices").items()) {
      gt.prices[DayDate::parse(date)] = detail::hour_series_from_json(lambda);
    }
    for (const auto& [date, table] : j.at("mcis").items()) {
      auto& row = gt.mcis[DayDate::parse(date)];
      for (const auto& [id, v] : table.items()) row[id] = v.get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::schema_mismatch,
                std::string("bad ground truth: ") + e.what());
  }
  return gt;
}

inline GroundTruth read_ground_truth(const std::filesystem::path& path) {
  return ground_truth_from_json(parse_json_file(path, "ground truth"));
}

}  // namespace tarifflens
