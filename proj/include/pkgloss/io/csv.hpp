#pragma once

// Minimal CSV: comma-separated, no quoting, '#' comment lines, first
// non-comment line is the header.

#include <charconv>
#include <cmath>
#include <filesystem>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "pkgloss/errors.hpp"
#include "pkgloss/io/ini.hpp"

namespace pkgloss::io {

/// Shortest text that reads back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::optional<double> try_parse_double(std::string_view s) {
  s = detail::trim(s);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

struct CsvRow {
  std::vector<std::string> cells;
  int line = 0;
};

struct CsvTable {
  std::string source;
  std::vector<std::string> header;
  std::vector<CsvRow> rows;

  std::size_t column(std::string_view name) const {
    for (std::size_t k = 0; k < header.size(); ++k)
      if (header[k] == name) return k;
    throw ConfigError("missing column '" + std::string(name) + "' in " + source, std::string(name));
  }

  double number(const CsvRow& row, std::size_t col) const {
    const auto v = try_parse_double(row.cells[col]);
    if (!v || !std::isfinite(*v))
      throw ConfigError("expected a number in " + source + ", got '" + row.cells[col] + "'", header[col], row.line);
    return *v;
  }
};

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.emplace_back(detail::trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline CsvTable parse_csv(std::string_view text, std::string source = "<string>") {
  CsvTable t;
  t.source = std::move(source);
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const auto trimmed = detail::trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    auto cells = split_csv_line(trimmed);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size())
      throw ConfigError("expected " + std::to_string(t.header.size()) + " cells in " + t.source, {}, line_no);
    t.rows.push_back(CsvRow{std::move(cells), line_no});
  }
  if (t.header.empty()) throw ConfigError("no header in " + t.source);
  return t;
}

inline CsvTable load_csv(const std::filesystem::path& path) { return parse_csv(read_text_file(path), path.string()); }

}  // namespace pkgloss::io
