#pragma once

// CSV plumbing for manifests, cohort tables and agreement inputs.
// Quoted fields with "" escapes are supported; lines starting with '#' are
// comments (the cohort summary block uses them) and are skipped on parse.

#include <cstdint>
#include <string>
#include <vector>

#include "alarm/types.hpp"

namespace alarmkit {

using CsvRow = std::vector<std::string>;

inline std::vector<CsvRow> parse_csv(const std::string& text) {
  std::vector<CsvRow> rows;
  CsvRow row;
  std::string field;
  bool in_quotes = false;
  bool line_has_data = false;
  bool line_is_comment = false;

  auto end_field = [&] {
    row.push_back(field);
    field.clear();
  };
  auto end_line = [&] {
    if (line_has_data && !line_is_comment) {
      end_field();
      rows.push_back(row);
    }
    row.clear();
    field.clear();
    line_has_data = false;
    line_is_comment = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        line_has_data = true;
        break;
      case ',':
        end_field();
        line_has_data = true;
        break;
      case '\r':
        break;
      case '\n':
        end_line();
        break;
      case '#':
        if (!line_has_data && row.empty() && field.empty())
          line_is_comment = true;
        else
          field += c;
        line_has_data = true;
        break;
      default:
        field += c;
        line_has_data = true;
    }
  }
  if (in_quotes)
    fail(ErrorCode::IoFailure, "unterminated quote in CSV input");
  end_line();  // final line without trailing newline
  return rows;
}

inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

inline std::string csv_line(const CsvRow& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += csv_quote(fields[i]);
  }
  out += '\n';
  return out;
}

// Column index by header name, or -1.
inline std::int64_t csv_column(const CsvRow& header, const std::string& name) {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<std::int64_t>(i);
  return -1;
}

}  // namespace alarmkit
