// Desk-scale market simulator with per-hour quadratic utilities.
//
// Under real-time prices the consumer problem has the closed form
// l_h = (a_h - lambda_h) / b_h, and with linear supply the market clears in
// closed form per hour. Under the profile price menu the first-order system
// couples hours through the consumer's average rate; it is solved by damped
// Newton, and the market by a damped fixed point on prices. Agreement between
// the two routes is the numerical content of the pricing-equivalence theorem.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "tarifflens/core.hpp"
#include "tarifflens/impact.hpp"
#include "tarifflens/io.hpp"
#include "tarifflens/jsonio.hpp"

namespace tarifflens {

struct QuadraticConsumer {
  HourSeries a{};  // marginal-utility intercepts, currency/kWh
  HourSeries b{};  // curvatures, currency/kWh^2

  void validate() const {
    for (int h = 0; h < kHoursPerDay; ++h) {
      if (!(a[h] > 0.0) || !(b[h] > 0.0) || !std::isfinite(a[h]) ||
          !std::isfinite(b[h])) {
        throw Error(Errc::bad_input, "utility coefficients must be positive",
                    h + 1);
      }
    }
  }
};

struct SupplyCurve {
  HourSeries c{};  // intercepts, currency/kWh
  HourSeries d{};  // slopes, currency/kWh^2

  void validate() const {
    for (int h = 0; h < kHoursPerDay; ++h) {
      if (!(c[h] >= 0.0) || !(d[h] >= 0.0) || !std::isfinite(c[h]) ||
          !std::isfinite(d[h])) {
        throw Error(Errc::bad_input, "supply coefficients must be >= 0", h + 1);
      }
    }
  }
};

enum class PricingMode { rtp, ppm };

struct EquilibriumResult {
  std::vector<HourSeries> demands;  // one 24-vector per consumer
  HourSeries prices{};
  int iterations = 0;
  double residual = 0.0;  // max |dU/dl - lambda| at the solution
};

// ---------------------------------------------------------------------------
// Demand under fixed prices
// ---------------------------------------------------------------------------

inline HourSeries rtp_demand(const QuadraticConsumer& u,
                             const HourSeries& lambda) {
  HourSeries l{};
  for (int h = 0; h < kHoursPerDay; ++h) {
    l[h] = (u.a[h] - lambda[h]) / u.b[h];
    if (!(l[h] > 0.0)) {
      throw Error(Errc::interiority_violated,
                  "demand would hit zero at hour " + std::to_string(h + 1),
                  h + 1);
    }
  }
  return l;
}

namespace detail {

// PPM first-order residual: marginal utility minus (Term A + Term B), where
// Term A = dMCI/dl_h * total and Term B = MCI, both evaluated from the
// current iterate.
inline HourSeries ppm_foc_residual(const QuadraticConsumer& u,
                                   const HourSeries& lambda,
                                   const HourSeries& l) {
  double total = 0.0;
  double spend = 0.0;
  for (int h = 0; h < kHoursPerDay; ++h) {
    total += l[h];
    spend += lambda[h] * l[h];
  }
  HourSeries f{};
  for (int h = 0; h < kHoursPerDay; ++h) {
    const double term_a = (lambda[h] * total - spend) / (total * total) * total;
    const double term_b = spend / total;
    f[h] = (u.a[h] - u.b[h] * l[h]) - (term_a + term_b);
  }
  return f;
}

inline double inf_norm(const HourSeries& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

// Gaussian elimination with partial pivoting on a 24x24 system.
inline HourSeries solve_linear(std::array<HourSeries, kHoursPerDay>& mat,
                               HourSeries rhs) {
  constexpr int n = kHoursPerDay;
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int row = col + 1; row < n; ++row) {
      if (std::fabs(mat[row][col]) > std::fabs(mat[pivot][col])) pivot = row;
    }
    if (mat[pivot][col] == 0.0) {
      throw Error(Errc::no_convergence, "singular Jacobian");
    }
    std::swap(mat[col], mat[pivot]);
    std::swap(rhs[col], rhs[pivot]);
    for (int row = col + 1; row < n; ++row) {
      const double factor = mat[row][col] / mat[col][col];
      if (factor == 0.0) continue;
      for (int k = col; k < n; ++k) mat[row][k] -= factor * mat[col][k];
      rhs[row] -= factor * rhs[col];
    }
  }
  HourSeries x{};
  for (int row = n - 1; row >= 0; --row) {
    double s = rhs[row];
    for (int k = row + 1; k < n; ++k) s -= mat[row][k] * x[k];
    x[row] = s / mat[row][row];
  }
  return x;
}

}  // namespace detail

// Solves the profile-price-menu first-order system by damped Newton with a
// forward-difference Jacobian, starting from the fixed-price closed form.
inline HourSeries ppm_demand(const QuadraticConsumer& u,
                             const HourSeries& lambda, double tol = 1e-10,
                             int max_iter = 200) {
  HourSeries l = rtp_demand(u, lambda);
  HourSeries f = detail::ppm_foc_residual(u, lambda, l);
  double fnorm = detail::inf_norm(f);

  for (int iter = 0; iter < max_iter; ++iter) {
    if (fnorm < tol) return l;

    std::array<HourSeries, kHoursPerDay> jac{};
    for (int j = 0; j < kHoursPerDay; ++j) {
      const double step = 1e-7 * l[j];
      HourSeries lp = l;
      lp[j] += step;
      const HourSeries fp = detail::ppm_foc_residual(u, lambda, lp);
      for (int h = 0; h < kHoursPerDay; ++h) {
        jac[h][j] = (fp[h] - f[h]) / step;
      }
    }
    HourSeries rhs{};
    for (int h = 0; h < kHoursPerDay; ++h) rhs[h] = -f[h];
    const HourSeries step_dir = detail::solve_linear(jac, rhs);

    double damp = 1.0;
    bool accepted = false;
    for (int half = 0; half < 40; ++half, damp *= 0.5) {
      HourSeries trial{};
      bool interior = true;
      for (int h = 0; h < kHoursPerDay; ++h) {
        trial[h] = l[h] + damp * step_dir[h];
        interior = interior && trial[h] > 0.0;
      }
      if (!interior) continue;
      const HourSeries ft = detail::ppm_foc_residual(u, lambda, trial);
      const double ftnorm = detail::inf_norm(ft);
      if (ftnorm < fnorm) {
        l = trial;
        f = ft;
        fnorm = ftnorm;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      throw Error(Errc::no_convergence,
                  "Newton stalled at residual " + std::to_string(fnorm), iter);
    }
  }
  if (fnorm < tol) return l;
  throw Error(Errc::no_convergence,
              "residual " + std::to_string(fnorm) + " after " +
                  std::to_string(max_iter) + " iterations",
              max_iter);
}

// ---------------------------------------------------------------------------
// Market equilibrium
// ---------------------------------------------------------------------------

namespace detail {

inline double equilibrium_residual(const std::vector<QuadraticConsumer>& cs,
                                   const std::vector<HourSeries>& demands,
                                   const HourSeries& prices) {
  double worst = 0.0;
  for (size_t i = 0; i < cs.size(); ++i) {
    for (int h = 0; h < kHoursPerDay; ++h) {
      const double marginal = cs[i].a[h] - cs[i].b[h] * demands[i][h];
      worst = std::max(worst, std::fabs(marginal - prices[h]));
    }
  }
  return worst;
}

}  // namespace detail

inline EquilibriumResult market_equilibrium(
    const std::vector<QuadraticConsumer>& consumers, const SupplyCurve& supply,
    PricingMode mode, double tol = 1e-10, int max_iter = 500) {
  if (consumers.empty()) {
    throw Error(Errc::empty_collection, "no consumers in scenario");
  }
  for (const QuadraticConsumer& u : consumers) u.validate();
  supply.validate();

  EquilibriumResult res;
  if (mode == PricingMode::rtp) {
    // Per hour: sum_i (a_ih - lambda)/b_ih = L and lambda = c + d L.
    for (int h = 0; h < kHoursPerDay; ++h) {
      double sum_ab = 0.0;
      double sum_inv_b = 0.0;
      for (const QuadraticConsumer& u : consumers) {
        sum_ab += u.a[h] / u.b[h];
        sum_inv_b += 1.0 / u.b[h];
      }
      const double load = (sum_ab - supply.c[h] * sum_inv_b) /
                          (1.0 + supply.d[h] * sum_inv_b);
      res.prices[h] = supply.c[h] + supply.d[h] * load;
    }
    res.demands.reserve(consumers.size());
    for (const QuadraticConsumer& u : consumers) {
      res.demands.push_back(rtp_demand(u, res.prices));
    }
    res.iterations = 0;
    res.residual = detail::equilibrium_residual(consumers, res.demands,
                                                res.prices);
    return res;
  }

  // PPM: damped fixed point on prices, started at the supply floor so the
  // path is independent of the closed form it is checked against.
  HourSeries prices = supply.c;
  std::vector<HourSeries> demands(consumers.size());
  for (int iter = 1; iter <= max_iter; ++iter) {
    for (size_t i = 0; i < consumers.size(); ++i) {
      demands[i] = ppm_demand(consumers[i], prices, tol);
    }
    HourSeries load{};
    for (const HourSeries& l : demands) {
      for (int h = 0; h < kHoursPerDay; ++h) load[h] += l[h];
    }
    HourSeries next{};
    double change = 0.0;
    for (int h = 0; h < kHoursPerDay; ++h) {
      const double target = supply.c[h] + supply.d[h] * load[h];
      next[h] = 0.5 * prices[h] + 0.5 * target;
      change = std::max(change, std::fabs(next[h] - prices[h]));
    }
    prices = next;
    if (change < tol) {
      res.demands = std::move(demands);
      res.prices = prices;
      res.iterations = iter;
      res.residual = detail::equilibrium_residual(consumers, res.demands,
                                                  res.prices);
      return res;
    }
  }
  throw Error(Errc::no_convergence,
              "price fixed point did not settle in " +
                  std::to_string(max_iter) + " iterations",
              max_iter);
}

// ---------------------------------------------------------------------------
// Theorem-3 check: average daily rate under hourly billing equals the MCI
// ---------------------------------------------------------------------------

struct Theorem3Row {
  int consumer = 0;
  double avg_rate = 0.0;
  double mci = 0.0;
  double deviation = 0.0;
  bool pass = false;
};

struct Theorem3Report {
  std::vector<Theorem3Row> rows;
  double max_deviation = 0.0;
  bool pass = true;
};

// `rate_offsets` lets a test inject a billing fault for one consumer.
inline Theorem3Report verify_theorem3(
    const std::vector<QuadraticConsumer>& consumers, const SupplyCurve& supply,
    double tol = 1e-10,
    const std::map<int, double>& rate_offsets = {}) {
  const EquilibriumResult eq =
      market_equilibrium(consumers, supply, PricingMode::rtp);
  Theorem3Report report;
  for (size_t i = 0; i < consumers.size(); ++i) {
    Theorem3Row row;
    row.consumer = static_cast<int>(i);
    // Definitional hourly billing, independent of the MCI formula.
    double amount = 0.0;
    double total = 0.0;
    for (int h = 0; h < kHoursPerDay; ++h) {
      amount += eq.prices[h] * eq.demands[i][h];
      total += eq.demands[i][h];
    }
    row.avg_rate = amount / total;
    if (auto it = rate_offsets.find(row.consumer); it != rate_offsets.end()) {
      row.avg_rate += it->second;
    }
    DailyProfile p;
    p.hours = eq.demands[i];
    row.mci = mci_from_rtp(p, eq.prices);
    row.deviation = std::fabs(row.avg_rate - row.mci);
    row.pass = row.deviation < tol;
    report.max_deviation = std::max(report.max_deviation, row.deviation);
    report.pass = report.pass && row.pass;
    report.rows.push_back(row);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Scenario file
// ---------------------------------------------------------------------------

struct Scenario {
  std::vector<QuadraticConsumer> consumers;
  SupplyCurve supply;
  std::string pricing = "both";  // rtp | ppm | both
  double tol = 1e-10;
};

inline nlohmann::json scenario_to_json(const Scenario& s) {
  nlohmann::json consumers = nlohmann::json::array();
  for (const QuadraticConsumer& u : s.consumers) {
    consumers.push_back(
        {{"a", std::vector<double>(u.a.begin(), u.a.end())},
         {"b", std::vector<double>(u.b.begin(), u.b.end())}});
  }
  return nlohmann::json{
      {"consumers", consumers},
      {"supply",
       {{"c", std::vector<double>(s.supply.c.begin(), s.supply.c.end())},
        {"d", std::vector<double>(s.supply.d.begin(), s.supply.d.end())}}},
      {"pricing", s.pricing},
      {"tol", s.tol}};
}

inline Scenario scenario_from_json(const nlohmann::json& j) {
  Scenario s;
  try {
    for (const auto& c : j.at("consumers")) {
      QuadraticConsumer u;
      u.a = detail::hour_series_from_json(c.at("a"));
      u.b = detail::hour_series_from_json(c.at("b"));
      s.consumers.push_back(u);
    }
    s.supply.c = detail::hour_series_from_json(j.at("supply").at("c"));
    s.supply.d = detail::hour_series_from_json(j.at("supply").at("d"));
    s.pricing = j.value("pricing", std::string("both"));
    s.tol = j.value("tol", 1e-10);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::schema_mismatch,
                std::string("bad scenario file: ") + e.what());
  }
  if (s.pricing != "rtp" && s.pricing != "ppm" && s.pricing != "both") {
    throw Error(Errc::schema_mismatch, "pricing must be rtp, ppm or both");
  }
  return s;
}

inline Scenario read_scenario(const std::filesystem::path& path) {
  return scenario_from_json(parse_json_file(path, "scenario file"));
}

}  // namespace tarifflens
