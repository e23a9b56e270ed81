#ifndef DPMOM_CSVIO_HPP
#define DPMOM_CSVIO_HPP

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dpmom/error.hpp"

namespace dpmom {

// Minimal CSV support: comma-separated, no quoting, '#' lines are comments.
// Every file this project reads or writes is plain numeric/identifier data.

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    // trim surrounding whitespace
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string()
                                         : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

// rows of cells; blank and comment lines skipped; 1-based source line kept
struct CsvRow {
  std::size_t line_number;
  std::vector<std::string> cells;
};

inline std::vector<CsvRow> read_csv_rows(const std::string& path) {
  std::ifstream in(path);
  check(in.good(), ErrorCode::IoError, "cannot open file: " + path);
  std::vector<CsvRow> rows;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    rows.push_back({line_number, split_csv_line(line)});
  }
  return rows;
}

// shortest round-trip representation of a double
inline std::string format_double(double v) {
  char buf[40];
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

}  // namespace dpmom

#endif  // DPMOM_CSVIO_HPP
