// tarifflens: batch analytics over hourly smart-meter data.
//
// Subcommands: ingest, cluster, impact, assess, simulate, synth. Every
// command reads plain files, writes plain files into --out, and is safe to
// re-run; outputs are written atomically. Exit codes: 0 ok, 2 input
// validation, 3 clustering, 4 lookup, 5 convergence, 1 internal.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tarifflens/assess.hpp"
#include "tarifflens/cluster.hpp"
#include "tarifflens/core.hpp"
#include "tarifflens/equilibrium.hpp"
#include "tarifflens/impact.hpp"
#include "tarifflens/ingest.hpp"
#include "tarifflens/io.hpp"
#include "tarifflens/synth.hpp"
#include "tarifflens/tariff.hpp"

namespace tl = tarifflens;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int exit_code_for(tl::Errc code) {
  switch (code) {
    case tl::Errc::k_too_large:
      return 3;
    case tl::Errc::unknown_day:
      return 4;
    case tl::Errc::no_convergence:
    case tl::Errc::interiority_violated:
      return 5;
    default:
      return 2;
  }
}

void print_error(const tl::Error& e) {
  json j{{"error", tl::errc_name(e.code())}, {"message", e.what()}};
  if (e.detail() >= 0) j["detail"] = e.detail();
  std::cerr << j.dump() << "\n";
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

// "5-12" -> HourRange{5, 12}
tl::HourRange parse_window(const std::string& s) {
  int a = 0, b = 0;
  char extra = 0;
  if (std::sscanf(s.c_str(), "%d-%d%c", &a, &b, &extra) != 2) {
    throw tl::Error(tl::Errc::bad_input, "bad hour window '" + s + "'");
  }
  tl::HourRange r{a, b};
  if (!r.valid()) {
    throw tl::Error(tl::Errc::bad_input, "window '" + s + "' outside [1,24]");
  }
  return r;
}

tl::FeatureSpec parse_feature_spec(const std::string& windows,
                                   const std::string& mu) {
  tl::FeatureSpec spec;
  if (!windows.empty()) {
    const auto parts = split_list(windows);
    if (parts.size() != 2) {
      throw tl::Error(tl::Errc::bad_input,
                      "--windows wants 'M1-M2,E1-E2', got '" + windows + "'");
    }
    spec.morning = parse_window(parts[0]);
    spec.evening = parse_window(parts[1]);
  }
  if (!mu.empty()) {
    const auto parts = split_list(mu);
    if (parts.size() != 3) {
      throw tl::Error(tl::Errc::bad_input, "--mu wants three weights");
    }
    for (int i = 0; i < 3; ++i) {
      spec.mu[i] = std::strtod(parts[i].c_str(), nullptr);
    }
  }
  spec.validate();
  return spec;
}

// Prices file: a JSON array of 24 numbers, or an object with "lambda".
tl::HourSeries read_prices(const fs::path& path) {
  json j = tl::parse_json_file(path, "prices file");
  if (j.is_object() && j.contains("lambda")) j = j["lambda"];
  return tl::detail::hour_series_from_json(j);
}

std::vector<tl::DayDate> parse_days(const std::string& days_arg,
                                    const tl::Dataset& d) {
  if (days_arg.empty() || days_arg == "all") return d.days;
  std::vector<tl::DayDate> days;
  for (const std::string& s : split_list(days_arg)) {
    days.push_back(tl::DayDate::parse(s));
  }
  return days;
}

std::string impact_csv(const std::vector<tl::ImpactRecord>& records) {
  std::string out = "consumer_id,date,mfi_mr,mfi_er,mfi_pd,phi,mci\n";
  for (const tl::ImpactRecord& r : records) {
    out += tl::csv_escape(r.consumer) + "," + r.day.to_string() + "," +
           tl::format_sig12(r.mfi.mr) + "," + tl::format_sig12(r.mfi.er) + "," +
           tl::format_sig12(r.mfi.pd) + "," + tl::format_sig12(r.phi) + ",";
    if (r.mci.has_value()) out += tl::format_sig12(*r.mci);
    out += "\n";
  }
  return out;
}

std::string rates_csv(const tl::DayDate& day,
                      const std::map<tl::ConsumerId, double>& rates,
                      const tl::Partition& bins) {
  std::string out = "consumer_id,date,avg_rate,bin\n";
  for (const auto& [consumer, rate] : rates) {
    out += tl::csv_escape(consumer) + "," + day.to_string() + "," +
           tl::format_sig12(rate) + "," +
           std::to_string(bins.labels.at(consumer)) + "\n";
  }
  return out;
}

json equilibrium_json(const tl::EquilibriumResult& eq) {
  json demands = json::array();
  for (const tl::HourSeries& l : eq.demands) {
    demands.push_back(tl::detail::to_vec(l));
  }
  return json{{"prices", tl::detail::to_vec(eq.prices)},
              {"demands", demands},
              {"iterations", eq.iterations},
              {"residual", eq.residual}};
}

// --config run.json: a flat JSON object of long option names to values,
// injected ahead of the explicit command line so typed flags win.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string config_path;
  for (size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config_path = args[i + 1];
      args.erase(args.begin() + i, args.begin() + i + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
      args.erase(args.begin() + i);
      break;
    }
  }
  if (config_path.empty()) return args;

  json j = tl::parse_json_file(config_path, "config file");
  if (!j.is_object()) {
    throw tl::Error(tl::Errc::bad_input, "config must be a JSON object");
  }
  // Find the subcommand token, insert the config flags right after it.
  size_t insert_at = args.size();
  for (size_t i = 0; i < args.size(); ++i) {
    if (!args[i].empty() && args[i][0] != '-') {
      insert_at = i + 1;
      break;
    }
  }
  std::vector<std::string> injected;
  for (const auto& [key, value] : j.items()) {
    if (value.is_boolean()) {
      if (value.get<bool>()) injected.push_back("--" + key);
      continue;
    }
    injected.push_back("--" + key);
    injected.push_back(value.is_string() ? value.get<std::string>()
                                         : value.dump());
  }
  args.insert(args.begin() + insert_at, injected.begin(), injected.end());
  return args;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

struct IngestArgs {
  std::string input;
  std::string gap_policy = "drop";
  std::string out;
};

void run_ingest(const IngestArgs& a) {
  tl::GapPolicy policy;
  if (a.gap_policy == "drop") {
    policy = tl::GapPolicy::drop_incomplete;
  } else if (a.gap_policy == "interp2") {
    policy = tl::GapPolicy::interpolate_up_to2;
  } else {
    throw tl::Error(tl::Errc::bad_input,
                    "--gap-policy must be 'drop' or 'interp2'");
  }
  const auto readings = tl::parse_readings(tl::read_file(a.input));
  auto [dataset, report] = tl::build_dataset(readings, policy);
  const fs::path out(a.out);
  tl::write_dataset(dataset, out / "dataset.csv");
  json rj{{"rows", report.rows},
          {"readings", report.readings},
          {"accepted_days", report.accepted_days},
          {"dropped_days", report.dropped_days},
          {"repaired_hours", report.repaired_hours},
          {"duplicates_merged", report.duplicates_merged}};
  tl::write_file_atomic(out / "ingest_report.json", rj.dump(2) + "\n");
}

struct ClusterArgs {
  std::string dataset;
  double radius = 0.05;
  int k_min = 2;
  int k_max = 0;
  std::uint64_t seed = 1;
  std::string out;
};

void run_cluster(const ClusterArgs& a) {
  const tl::Dataset d = tl::read_dataset(a.dataset);
  std::vector<tl::NormalizedProfile> points;
  points.reserve(d.profiles.size());
  for (const auto& [key, profile] : d.profiles) {
    points.push_back(tl::normalize(profile));
  }
  std::vector<std::pair<int, double>> curve;
  const tl::ClusterModel model =
      tl::adaptive_fit(points, a.radius, a.k_min, a.k_max, a.seed, &curve);
  const fs::path out(a.out);
  tl::write_model(model, out / "model.json");
  std::string csv = "k,inertia\n";
  for (const auto& [k, inertia] : curve) {
    csv += std::to_string(k) + "," + tl::format_sig12(inertia) + "\n";
  }
  tl::write_file_atomic(out / "inertia.csv", csv);
  if (model.radius_unmet) {
    std::cerr << json{{"warning", "radius_unmet"},
                      {"message", "no k in range met the radius criterion"}}
                     .dump()
              << "\n";
  }
}

struct ImpactArgs {
  std::string dataset;
  std::string model;
  std::string windows;
  std::string mu;
  std::string prices;
  std::string day;
  std::string out;
};

void run_impact(const ImpactArgs& a) {
  const tl::Dataset d = tl::read_dataset(a.dataset);
  const tl::FeatureSpec spec = parse_feature_spec(a.windows, a.mu);
  const tl::DayDate day = tl::DayDate::parse(a.day);
  std::optional<tl::HourSeries> prices;
  if (!a.prices.empty()) prices = read_prices(a.prices);
  std::optional<tl::ClusterModel> model;
  if (!a.model.empty()) model = tl::read_model(a.model);
  const auto records = tl::impact_table(d, day, spec, prices,
                                        model ? &*model : nullptr);
  tl::write_file_atomic(fs::path(a.out) / "impact.csv", impact_csv(records));
}

struct AssessArgs {
  std::string dataset;
  std::string model;
  std::string scheme;
  int bins = 0;  // 0: use the model's cluster count
  std::string days = "all";
  std::string prices;
  std::string windows;
  std::string mu;
  double dt_epsilon = 0.0;
  bool per_day_range = false;
  std::string out;
};

void run_assess(const AssessArgs& a) {
  const tl::Dataset d = tl::read_dataset(a.dataset);
  const tl::ClusterModel model = tl::read_model(a.model);
  const tl::PriceScheme scheme = tl::read_scheme(a.scheme);
  const tl::FeatureSpec spec = parse_feature_spec(a.windows, a.mu);

  tl::AssessOptions options;
  options.bins = a.bins > 0 ? a.bins : model.k;
  options.dt_epsilon = a.dt_epsilon;
  options.per_day_range = a.per_day_range;
  if (!a.prices.empty()) options.prices = read_prices(a.prices);

  const auto days = parse_days(a.days, d);
  const auto results = tl::assess_scheme(d, model, scheme, spec, days, options);

  const fs::path out(a.out);
  std::optional<std::string> ledger_path;
  if (options.prices.has_value()) {
    ledger_path = "subsidy_ledger.csv";
    tl::write_file_atomic(out / *ledger_path, tl::ledger_csv(results));
  }
  tl::write_file_atomic(
      out / "assessment.json",
      tl::assessment_report_json(scheme, options, results, ledger_path)
              .dump(2) +
          "\n");
  tl::write_file_atomic(out / "assessment.csv",
                        tl::assessment_plot_csv(results));
}

struct SimulateArgs {
  std::string scenario;
  std::string mode;
  std::string out;
};

void run_simulate(const SimulateArgs& a) {
  const tl::Scenario scenario = tl::read_scenario(a.scenario);
  const std::string mode = a.mode.empty() ? scenario.pricing : a.mode;
  if (mode != "rtp" && mode != "ppm" && mode != "both") {
    throw tl::Error(tl::Errc::bad_input, "--mode must be rtp, ppm or both");
  }

  json eq_json = json::object();
  json verification = json::object();
  std::optional<tl::EquilibriumResult> rtp_eq, ppm_eq;
  if (mode == "rtp" || mode == "both") {
    rtp_eq = tl::market_equilibrium(scenario.consumers, scenario.supply,
                                    tl::PricingMode::rtp, scenario.tol);
    eq_json["rtp"] = equilibrium_json(*rtp_eq);
  }
  if (mode == "ppm" || mode == "both") {
    ppm_eq = tl::market_equilibrium(scenario.consumers, scenario.supply,
                                    tl::PricingMode::ppm, scenario.tol);
    eq_json["ppm"] = equilibrium_json(*ppm_eq);
  }

  if (rtp_eq && ppm_eq) {
    double demand_dev = 0.0, price_dev = 0.0;
    for (size_t i = 0; i < rtp_eq->demands.size(); ++i) {
      for (int h = 0; h < tl::kHoursPerDay; ++h) {
        demand_dev = std::max(demand_dev,
                              std::fabs(rtp_eq->demands[i][h] -
                                        ppm_eq->demands[i][h]));
      }
    }
    for (int h = 0; h < tl::kHoursPerDay; ++h) {
      price_dev =
          std::max(price_dev, std::fabs(rtp_eq->prices[h] - ppm_eq->prices[h]));
    }
    // Fixed-price leg: both demand routes at the rtp equilibrium prices.
    double fixed_dev = 0.0;
    for (const tl::QuadraticConsumer& u : scenario.consumers) {
      const tl::HourSeries lr = tl::rtp_demand(u, rtp_eq->prices);
      const tl::HourSeries lp =
          tl::ppm_demand(u, rtp_eq->prices, scenario.tol);
      for (int h = 0; h < tl::kHoursPerDay; ++h) {
        fixed_dev = std::max(fixed_dev, std::fabs(lr[h] - lp[h]));
      }
    }
    verification["theorem2"] = {
        {"max_demand_deviation", demand_dev},
        {"max_price_deviation", price_dev},
        {"fixed_price_max_demand_deviation", fixed_dev},
        {"pass", demand_dev < 1e-8 && price_dev < 1e-8 && fixed_dev < 1e-8}};
  }

  const tl::Theorem3Report t3 =
      tl::verify_theorem3(scenario.consumers, scenario.supply);
  json rows = json::array();
  for (const tl::Theorem3Row& r : t3.rows) {
    rows.push_back({{"consumer", r.consumer},
                    {"avg_rate", r.avg_rate},
                    {"mci", r.mci},
                    {"deviation", r.deviation},
                    {"pass", r.pass}});
  }
  verification["theorem3"] = {{"max_deviation", t3.max_deviation},
                              {"pass", t3.pass},
                              {"rows", rows}};

  const fs::path out(a.out);
  tl::write_file_atomic(out / "equilibrium.json", eq_json.dump(2) + "\n");
  tl::write_file_atomic(out / "verification.json",
                        verification.dump(2) + "\n");
}

struct SynthArgs {
  std::string spec;
  std::string out;
};

void run_synth(const SynthArgs& a) {
  const tl::SynthSpec spec = tl::read_synth_spec(a.spec);
  auto [dataset, truth] = tl::generate(spec);
  const fs::path out(a.out);
  tl::write_dataset(dataset, out / "dataset.csv");
  tl::write_file_atomic(out / "ground_truth.json",
                        tl::ground_truth_to_json(truth).dump(2) + "\n");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Marginal-impact analytics for hourly smart-meter data"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  IngestArgs ingest_args;
  CLI::App* ingest = app.add_subcommand("ingest", "Build a dataset from raw readings");
  ingest->add_option("readings", ingest_args.input, "Raw readings CSV")->required();
  ingest->add_option("--gap-policy", ingest_args.gap_policy,
                     "drop | interp2 (fill <=2 missing interior hours)");
  ingest->add_option("--out", ingest_args.out, "Output directory")->required();

  ClusterArgs cluster_args;
  CLI::App* cluster = app.add_subcommand("cluster", "Fit profile types by adaptive k-means");
  cluster->add_option("dataset", cluster_args.dataset, "Canonical dataset CSV")->required();
  cluster->add_option("--radius", cluster_args.radius,
                      "Cluster radius as a fraction of the kernel l2 norm");
  cluster->add_option("--k-min", cluster_args.k_min, "Smallest k to try");
  cluster->add_option("--k-max", cluster_args.k_max, "Largest k to try")->required();
  cluster->add_option("--seed", cluster_args.seed, "RNG seed");
  cluster->add_option("--out", cluster_args.out, "Output directory")->required();

  ImpactArgs impact_args;
  CLI::App* impact = app.add_subcommand("impact", "Per-consumer marginal impacts for one day");
  impact->add_option("dataset", impact_args.dataset, "Canonical dataset CSV")->required();
  impact->add_option("--model", impact_args.model,
                     "Cluster model; impacts memoized per profile type");
  impact->add_option("--windows", impact_args.windows,
                     "Ramp windows 'M1-M2,E1-E2' (default 5-12,16-22)");
  impact->add_option("--mu", impact_args.mu, "MCI-index weights 'a,b,c'");
  impact->add_option("--prices", impact_args.prices, "Hourly prices JSON");
  impact->add_option("--day", impact_args.day, "Day YYYY-MM-DD")->required();
  impact->add_option("--out", impact_args.out, "Output directory")->required();

  AssessArgs assess_args;
  CLI::App* assess = app.add_subcommand("assess", "Score a price scheme (DOC, Dt, ledger)");
  assess->add_option("dataset", assess_args.dataset, "Canonical dataset CSV")->required();
  assess->add_option("--model", assess_args.model, "Cluster model JSON")->required();
  assess->add_option("--scheme", assess_args.scheme, "Price scheme JSON")->required();
  assess->add_option("--bins", assess_args.bins,
                     "Rate bins (default: the model's cluster count)");
  assess->add_option("--days", assess_args.days, "Comma list or 'all'");
  assess->add_option("--prices", assess_args.prices,
                     "Reference RTPs JSON; enables the subsidy ledger");
  assess->add_option("--windows", assess_args.windows, "Ramp windows");
  assess->add_option("--mu", assess_args.mu, "MCI-index weights");
  assess->add_option("--dt-epsilon", assess_args.dt_epsilon,
                     "Tie tolerance for the distortion index");
  assess->add_flag("--per-day-range", assess_args.per_day_range,
                   "Bin each day against its own rate range");
  assess->add_option("--out", assess_args.out, "Output directory")->required();

  SimulateArgs sim_args;
  CLI::App* simulate = app.add_subcommand("simulate", "Equilibrium simulator and theorem checks");
  simulate->add_option("scenario", sim_args.scenario, "Scenario JSON")->required();
  simulate->add_option("--mode", sim_args.mode, "rtp | ppm | both");
  simulate->add_option("--out", sim_args.out, "Output directory")->required();

  SynthArgs synth_args;
  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic dataset + ground truth");
  synth->add_option("spec", synth_args.spec, "Synth spec JSON")->required();
  synth->add_option("--out", synth_args.out, "Output directory")->required();

  try {
    const std::vector<std::string> args = expand_config(argc, argv);
    // CLI11 parses reversed argv.
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);

    if (ingest->parsed()) run_ingest(ingest_args);
    if (cluster->parsed()) run_cluster(cluster_args);
    if (impact->parsed()) run_impact(impact_args);
    if (assess->parsed()) run_assess(assess_args);
    if (simulate->parsed()) run_simulate(sim_args);
    if (synth->parsed()) run_synth(synth_args);
    return 0;
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const tl::Error& e) {
    print_error(e);
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "Internal"}, {"message", e.what()}}.dump()
              << "\n";
    return 1;
  }
}
