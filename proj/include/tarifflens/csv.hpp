// Minimal RFC-4180 CSV reading/writing used by ingest and the report files.
#pragma once

#include <cstdlib>
#include <string>
#include <vector>

#include "tarifflens/core.hpp"

namespace tarifflens {

// Splits one logical CSV record. Quoted fields may contain commas and ""
// escapes; embedded newlines are not supported (meter exports are line
// oriented).
inline std::vector<std::string> split_csv_record(const std::string& line,
                                                 long line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      if (!cur.empty()) {
        throw Error(Errc::malformed_row, "stray quote in field", line_no);
      }
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) {
    throw Error(Errc::malformed_row, "unterminated quote", line_no);
  }
  fields.push_back(std::move(cur));
  return fields;
}

inline std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

// Splits text into lines, tolerating CRLF and a missing trailing newline.
inline std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string cur;
  for (char c : text) {
    if (c == '\n') {
      if (!cur.empty() && cur.back() == '\r') cur.pop_back();
      lines.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) {
    if (cur.back() == '\r') cur.pop_back();
    lines.push_back(std::move(cur));
  }
  return lines;
}

inline double parse_double_field(const std::string& s, long line_no,
                                 const char* what) {
  const char* begin = s.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0') {
    throw Error(Errc::malformed_row,
                std::string(what) + " is not a number: '" + s + "'", line_no);
  }
  return v;
}

}  // namespace tarifflens
