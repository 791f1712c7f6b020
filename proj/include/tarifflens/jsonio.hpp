// JSON file helpers shared by the model/scheme/scenario readers.
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "tarifflens/core.hpp"
#include "tarifflens/io.hpp"

namespace tarifflens {

inline nlohmann::json parse_json_file(const std::filesystem::path& path,
                                      const char* what) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::schema_mismatch,
                std::string(what) + " is not JSON: " + e.what());
  }
}

namespace detail {

inline HourSeries hour_series_from_json(const nlohmann::json& j) {
  const auto vals = j.get<std::vector<double>>();
  if (vals.size() != kHoursPerDay) {
    throw Error(Errc::schema_mismatch, "expected 24 values");
  }
  HourSeries s{};
  std::copy(vals.begin(), vals.end(), s.begin());
  return s;
}

inline std::vector<double> to_vec(const HourSeries& s) {
  return std::vector<double>(s.begin(), s.end());
}

}  // namespace detail

}  // namespace tarifflens
