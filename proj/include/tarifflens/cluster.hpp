// Adaptive k-means over normalized daily profiles and per-day consumer
// partitions. The sweep stops at the smallest k whose clusters all fit inside
// a radius of 5% of their kernel's l2 norm.
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <utility>
#include <vector>

#include "tarifflens/core.hpp"
#include "tarifflens/ingest.hpp"
#include "tarifflens/io.hpp"
#include "tarifflens/jsonio.hpp"
#include "tarifflens/parallel.hpp"

namespace tarifflens {

struct ClusterModel {
  int k = 0;
  std::uint64_t seed = 0;
  double radius_fraction = 0.0;  // 0 when fitted with a fixed k
  bool radius_unmet = false;
  double inertia = 0.0;
  std::vector<HourSeries> kernels;

  // Inertia after each Lloyd assignment; in-memory diagnostic only.
  std::vector<double> lloyd_inertia;
};

struct Partition {
  DayDate day;
  int k = 0;
  std::map<ConsumerId, int> labels;
};

namespace detail {

// 53-bit uniform in [0,1) straight off the engine, so draws do not depend on
// the standard library's distribution implementation.
inline double uniform01(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

inline double dist2(const HourSeries& a, const HourSeries& b) {
  double s = 0.0;
  for (int h = 0; h < kHoursPerDay; ++h) {
    const double d = a[h] - b[h];
    s += d * d;
  }
  return s;
}

inline double norm2(const HourSeries& a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return std::sqrt(s);
}

inline int nearest_kernel(const std::vector<HourSeries>& kernels,
                          const HourSeries& p) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (size_t j = 0; j < kernels.size(); ++j) {
    const double d = dist2(kernels[j], p);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(j);
    }
  }
  return best;
}

}  // namespace detail

// Lloyd iteration with k-means++ seeding. Deterministic for a given
// (points order, k, seed); the assignment step parallelizes but every
// reduction runs in point-index order.
inline ClusterModel kmeans_fit(const std::vector<NormalizedProfile>& points,
                               int k, std::uint64_t seed,
                               int max_iterations = 300) {
  const size_t n = points.size();
  if (n == 0) throw Error(Errc::empty_collection, "no points to cluster");
  if (k < 1 || static_cast<size_t>(k) > n) {
    throw Error(Errc::k_too_large,
                "k=" + std::to_string(k) + " for " + std::to_string(n) +
                    " points",
                k);
  }

  std::mt19937_64 rng(seed);
  auto draw01 = [&rng] { return detail::uniform01(rng()); };
  auto draw_index = [&](size_t m) {
    return std::min(m - 1, static_cast<size_t>(draw01() * static_cast<double>(m)));
  };

  // k-means++ seeding.
  std::vector<HourSeries> kernels;
  kernels.reserve(k);
  kernels.push_back(points[draw_index(n)].weights);
  std::vector<double> d2(n);
  for (size_t i = 0; i < n; ++i) {
    d2[i] = detail::dist2(points[i].weights, kernels[0]);
  }
  while (kernels.size() < static_cast<size_t>(k)) {
    double total = 0.0;
    for (double v : d2) total += v;
    size_t pick;
    if (total > 0.0) {
      const double r = draw01() * total;
      double acc = 0.0;
      pick = n - 1;
      for (size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc > r) {
          pick = i;
          break;
        }
      }
    } else {
      pick = draw_index(n);  // all remaining points coincide with a kernel
    }
    kernels.push_back(points[pick].weights);
    for (size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], detail::dist2(points[i].weights, kernels.back()));
    }
  }

  std::vector<int> labels(n, -1);
  std::vector<double> point_d2(n, 0.0);
  auto assign_all = [&](const std::vector<HourSeries>& ks,
                        std::vector<int>& out) {
    parallel_for(n, [&](size_t i) {
      const int j = detail::nearest_kernel(ks, points[i].weights);
      out[i] = j;
      point_d2[i] = detail::dist2(ks[j], points[i].weights);
    });
  };
  auto inertia_of = [&]() {
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) s += point_d2[i];
    return s;
  };

  ClusterModel model;
  model.k = k;
  model.seed = seed;

  assign_all(kernels, labels);
  model.lloyd_inertia.push_back(inertia_of());

  std::vector<int> new_labels(n, -1);
  for (int iter = 0; iter < max_iterations; ++iter) {
    // Means in point-index order.
    std::vector<HourSeries> sums(k, HourSeries{});
    std::vector<long> counts(k, 0);
    for (size_t i = 0; i < n; ++i) {
      const int j = labels[i];
      for (int h = 0; h < kHoursPerDay; ++h) {
        sums[j][h] += points[i].weights[h];
      }
      ++counts[j];
    }
    bool reseeded = false;
    std::vector<bool> claimed(n, false);
    for (int j = 0; j < k; ++j) {
      if (counts[j] > 0) {
        for (int h = 0; h < kHoursPerDay; ++h) {
          kernels[j][h] = sums[j][h] / static_cast<double>(counts[j]);
        }
        continue;
      }
      // Empty cluster: restart it at the point currently farthest from its
      // kernel. With coincident points there may be nothing left to split
      // off; the empty cluster then keeps its kernel.
      size_t far = n;
      double far_d = 0.0;
      for (size_t i = 0; i < n; ++i) {
        if (!claimed[i] && point_d2[i] > far_d) {
          far_d = point_d2[i];
          far = i;
        }
      }
      if (far < n) {
        kernels[j] = points[far].weights;
        claimed[far] = true;
        reseeded = true;
      }
    }

    assign_all(kernels, new_labels);
    model.lloyd_inertia.push_back(inertia_of());
    const bool stable = !reseeded && new_labels == labels;
    labels.swap(new_labels);
    if (stable) break;
  }

  model.kernels = std::move(kernels);
  model.inertia = model.lloyd_inertia.back();
  return model;
}

inline int assign(const ClusterModel& model, const NormalizedProfile& p) {
  return detail::nearest_kernel(model.kernels, p.weights);
}

// Smallest k in [k_min, k_max] whose fit puts every point strictly inside
// radius_fraction * ||kernel||_2 of its kernel. The sweep is clamped to the
// number of points; if no k qualifies the k_max model is returned with
// radius_unmet set.
inline ClusterModel adaptive_fit(
    const std::vector<NormalizedProfile>& points, double radius_fraction,
    int k_min, int k_max, std::uint64_t seed,
    std::vector<std::pair<int, double>>* inertia_curve = nullptr) {
  if (points.empty()) throw Error(Errc::empty_collection, "no points");
  if (k_min > k_max || k_min < 1) {
    throw Error(Errc::bad_input, "need 1 <= k_min <= k_max");
  }
  const int n = static_cast<int>(points.size());
  const int hi = std::min(k_max, n);
  const int lo = std::min(k_min, hi);

  auto within_radius = [&](const ClusterModel& m) {
    for (const NormalizedProfile& p : points) {
      const int j = assign(m, p);
      const double d = std::sqrt(detail::dist2(m.kernels[j], p.weights));
      if (!(d < radius_fraction * detail::norm2(m.kernels[j]))) return false;
    }
    return true;
  };

  ClusterModel last;
  for (int k = lo; k <= hi; ++k) {
    ClusterModel m = kmeans_fit(points, k, seed);
    if (inertia_curve != nullptr) inertia_curve->emplace_back(k, m.inertia);
    m.radius_fraction = radius_fraction;
    if (within_radius(m)) return m;
    last = std::move(m);
  }
  last.radius_unmet = true;
  return last;
}

inline Partition partition_by_profile(const Dataset& d,
                                      const ClusterModel& model,
                                      const DayDate& day) {
  Partition part;
  part.day = day;
  part.k = model.k;
  for (const auto& [consumer, profile] : d.day_profiles(day)) {
    part.labels[consumer] = assign(model, normalize(*profile));
  }
  return part;
}

// ---------------------------------------------------------------------------
// Model file
// ---------------------------------------------------------------------------

inline nlohmann::json model_to_json(const ClusterModel& m) {
  nlohmann::json kernels = nlohmann::json::array();
  for (const HourSeries& kern : m.kernels) {
    kernels.push_back(std::vector<double>(kern.begin(), kern.end()));
  }
  return nlohmann::json{{"k", m.k},
                        {"seed", m.seed},
                        {"radius_fraction", m.radius_fraction},
                        {"kernels", kernels},
                        {"inertia", m.inertia},
                        {"radius_unmet", m.radius_unmet}};
}

inline ClusterModel model_from_json(const nlohmann::json& j) {
  ClusterModel m;
  try {
    m.k = j.at("k").get<int>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.radius_fraction = j.at("radius_fraction").get<double>();
    m.inertia = j.at("inertia").get<double>();
    m.radius_unmet = j.at("radius_unmet").get<bool>();
    for (const auto& row : j.at("kernels")) {
      const auto vals = row.get<std::vector<double>>();
      if (vals.size() != kHoursPerDay) {
        throw Error(Errc::schema_mismatch, "kernel is not 24 values");
      }
      HourSeries kern{};
      std::copy(vals.begin(), vals.end(), kern.begin());
      m.kernels.push_back(kern);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::schema_mismatch,
                std::string("bad model file: ") + e.what());
  }
  if (m.k != static_cast<int>(m.kernels.size())) {
    throw Error(Errc::schema_mismatch, "k does not match kernel count");
  }
  return m;
}

inline void write_model(const ClusterModel& m,
                        const std::filesystem::path& path) {
  write_file_atomic(path, model_to_json(m).dump(2) + "\n");
}

inline ClusterModel read_model(const std::filesystem::path& path) {
  return model_from_json(parse_json_file(path, "model file"));
}

}  // namespace tarifflens
