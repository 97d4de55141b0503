#pragma once

// Trace files.
//   raw:        frequency_hz,re_s21,im_s21,scan_index   (one row per point per scan)
//   aggregated: frequency_hz,re_mean,im_mean,sigma_i,sigma_q
//               with "# n_scans=<int>" and optionally "# applied_power_w=<x>" comment lines

#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "pkgloss/errors.hpp"
#include "pkgloss/io/csv.hpp"
#include "pkgloss/io/ini.hpp"
#include "pkgloss/s21fit.hpp"

namespace pkgloss::io {

inline std::vector<fit::RawScan> parse_raw_trace(std::string_view text, std::string source = "<string>") {
  const CsvTable t = parse_csv(text, std::move(source));
  const auto cf = t.column("frequency_hz"), cr = t.column("re_s21"), ci = t.column("im_s21"),
             cs = t.column("scan_index");
  std::map<long, fit::RawScan> by_scan;
  for (const auto& row : t.rows) {
    const double idx = t.number(row, cs);
    if (idx < 0 || idx != static_cast<double>(static_cast<long>(idx)))
      throw ConfigError("scan_index must be a non-negative integer", "scan_index", row.line);
    auto& s = by_scan[static_cast<long>(idx)];
    s.frequencies.push_back(t.number(row, cf));
    s.s21.emplace_back(t.number(row, cr), t.number(row, ci));
  }
  if (by_scan.empty()) throw ConfigError("no data rows in " + t.source);
  std::vector<fit::RawScan> out;
  for (auto& [k, s] : by_scan) out.push_back(std::move(s));
  return out;
}

inline std::string raw_trace_to_csv(const std::vector<fit::RawScan>& scans) {
  std::ostringstream o;
  o << "frequency_hz,re_s21,im_s21,scan_index\n";
  for (std::size_t s = 0; s < scans.size(); ++s)
    for (std::size_t k = 0; k < scans[s].frequencies.size(); ++k)
      o << format_double(scans[s].frequencies[k]) << "," << format_double(scans[s].s21[k].real()) << ","
        << format_double(scans[s].s21[k].imag()) << "," << s << "\n";
  return o.str();
}

namespace detail {

// "# key=value" comment lines
inline std::map<std::string, std::string> comment_fields(std::string_view text) {
  std::map<std::string, std::string> out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    auto t = trim(line);
    if (t.empty() || t.front() != '#') continue;
    t = trim(t.substr(1));
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) continue;
    out[std::string(trim(t.substr(0, eq)))] = std::string(trim(t.substr(eq + 1)));
  }
  return out;
}

}  // namespace detail

inline fit::ComplexTrace parse_aggregated_trace(std::string_view text, std::string source = "<string>") {
  const CsvTable t = parse_csv(text, source);
  const auto cf = t.column("frequency_hz"), cr = t.column("re_mean"), ci = t.column("im_mean"),
             csi = t.column("sigma_i"), csq = t.column("sigma_q");
  fit::ComplexTrace tr;
  for (const auto& row : t.rows) {
    tr.frequencies.push_back(t.number(row, cf));
    tr.s21_mean.emplace_back(t.number(row, cr), t.number(row, ci));
    tr.sigma_i.push_back(t.number(row, csi));
    tr.sigma_q.push_back(t.number(row, csq));
  }
  const auto meta = detail::comment_fields(text);
  if (const auto it = meta.find("n_scans"); it != meta.end()) {
    const auto v = try_parse_double(it->second);
    if (!v || *v < 1 || *v != static_cast<double>(static_cast<int>(*v)))
      throw ConfigError("n_scans must be a positive integer in " + source, "n_scans");
    tr.n_scans = static_cast<int>(*v);
  }
  if (const auto it = meta.find("applied_power_w"); it != meta.end()) {
    const auto v = try_parse_double(it->second);
    if (!v || !(*v > 0.0)) throw ConfigError("applied_power_w must be positive in " + source, "applied_power_w");
    tr.applied_power_w = *v;
  }
  return tr;
}

inline std::string aggregated_trace_to_csv(const fit::ComplexTrace& tr) {
  std::ostringstream o;
  o << "# n_scans=" << tr.n_scans << "\n";
  if (tr.applied_power_w) o << "# applied_power_w=" << format_double(*tr.applied_power_w) << "\n";
  o << "frequency_hz,re_mean,im_mean,sigma_i,sigma_q\n";
  for (std::size_t k = 0; k < tr.size(); ++k)
    o << format_double(tr.frequencies[k]) << "," << format_double(tr.s21_mean[k].real()) << ","
      << format_double(tr.s21_mean[k].imag()) << "," << format_double(tr.sigma_i[k]) << ","
      << format_double(tr.sigma_q[k]) << "\n";
  return o.str();
}

/// Either layout, told apart by the header.
inline fit::ComplexTrace load_trace(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  const CsvTable t = parse_csv(text, path.string());
  for (const auto& h : t.header)
    if (h == "scan_index") return fit::aggregate_scans(parse_raw_trace(text, path.string()));
  return parse_aggregated_trace(text, path.string());
}

}  // namespace pkgloss::io
