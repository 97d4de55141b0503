#pragma once

// JSON and CSV reports. Every report carries the tool version and the
// SHA-256 of its inputs. Quantities are SI; field names carry the unit.
// Output is a pure function of the data: no timestamps, sorted keys.

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pkgloss/errors.hpp"
#include "pkgloss/gamma_table.hpp"
#include "pkgloss/io/csv.hpp"
#include "pkgloss/io/reference.hpp"
#include "pkgloss/lossbudget.hpp"
#include "pkgloss/s21fit.hpp"
#include "pkgloss/version.hpp"

namespace pkgloss::io {

using json = nlohmann::json;

struct ReportMeta {
  std::map<std::string, std::string> input_sha256;  // input name -> hash
};

inline json meta_json(const ReportMeta& m, std::string_view kind) {
  json j;
  j["tool"] = "pkgloss";
  j["version"] = std::string(version);
  j["report"] = std::string(kind);
  j["input_sha256"] = m.input_sha256;
  return j;
}

inline ReportMeta meta_from_json(const json& j) {
  ReportMeta m;
  if (j.contains("input_sha256")) m.input_sha256 = j.at("input_sha256").get<std::map<std::string, std::string>>();
  return m;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
  if (!out) throw ConfigError("write failed for " + path.string());
}

inline json opt_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline std::optional<double> opt_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

// ---------------------------------------------------------------------------
// gamma

struct SolveRecord {
  std::string resonator, package;
  std::size_t nodes = 0;
  int iterations = 0;
  double relative_residual = 0.0;
};

inline std::string gamma_to_json(const GammaTable& t, const ReportMeta& meta, const std::vector<SolveRecord>& solves = {}) {
  json j = meta_json(meta, "gamma");
  json rows = json::array();
  for (const auto& [k, v] : t.entries)
    rows.push_back({{"resonator", std::get<0>(k)},
                    {"package", std::get<1>(k)},
                    {"region", std::get<2>(k)},
                    {"gamma_per_m", v.value},
                    {"upper_bound", v.upper_bound}});
  j["entries"] = rows;
  json s = json::array();
  for (const auto& r : solves)
    s.push_back({{"resonator", r.resonator},
                 {"package", r.package},
                 {"nodes", r.nodes},
                 {"iterations", r.iterations},
                 {"relative_residual", r.relative_residual}});
  j["solves"] = s;
  return j.dump(2) + "\n";
}

inline GammaTable gamma_from_json(std::string_view text) {
  const json j = json::parse(text);
  GammaTable t;
  for (const auto& r : j.at("entries"))
    t.set(r.at("resonator").get<std::string>(), r.at("package").get<std::string>(), r.at("region").get<std::string>(),
          {r.at("gamma_per_m").get<double>(), r.at("upper_bound").get<bool>()});
  return t;
}

inline std::string gamma_to_csv(const GammaTable& t, const ReportMeta& meta) {
  std::ostringstream o;
  o << "# pkgloss " << version << " gamma";
  for (const auto& [k, v] : meta.input_sha256) o << " " << k << "=" << v;
  o << "\nresonator,package,region,gamma_per_m,upper_bound\n";
  for (const auto& [k, v] : t.entries)
    o << std::get<0>(k) << "," << std::get<1>(k) << "," << std::get<2>(k) << "," << format_double(v.value) << ","
      << (v.upper_bound ? "true" : "false") << "\n";
  return o.str();
}

inline GammaTable gamma_from_csv(std::string_view text) { return parse_gamma_table(parse_csv(text, "gamma csv")); }

// ---------------------------------------------------------------------------
// budget

inline json budget_json(const budget::LossBudget& b) {
  json c = json::array();
  for (const auto& x : b.contributions)
    c.push_back({{"label", x.label},
                 {"q_inverse", x.q_inverse},
                 {"material", x.material},
                 {"rs_ohm", x.rs_ohm},
                 {"f0_hz", x.f0_hz},
                 {"gamma_per_m", x.gamma_per_m},
                 {"upper_bound", x.upper_bound}});
  json j{{"resonator", b.resonator_id},
         {"package", b.package_id},
         {"contributions", c},
         {"total_q_inverse", b.total_q_inverse},
         {"total_q", b.total_q_inverse > 0.0 ? json(b.total_q()) : json(nullptr)},
         {"measured_q_i_m", opt_number(b.measured_q_i_m)},
         {"residual_q_inverse", opt_number(b.residual_q_inverse)},
         {"warnings", b.warnings}};
  return j;
}

inline std::string budgets_to_json(const std::vector<budget::LossBudget>& budgets, const ReportMeta& meta) {
  json j = meta_json(meta, "budget");
  j["budgets"] = json::array();
  for (const auto& b : budgets) j["budgets"].push_back(budget_json(b));
  return j.dump(2) + "\n";
}

inline std::vector<budget::LossBudget> budgets_from_json(std::string_view text) {
  const json j = json::parse(text);
  std::vector<budget::LossBudget> out;
  for (const auto& bj : j.at("budgets")) {
    budget::LossBudget b;
    b.resonator_id = bj.at("resonator").get<std::string>();
    b.package_id = bj.at("package").get<std::string>();
    for (const auto& c : bj.at("contributions"))
      b.contributions.push_back({c.at("label").get<std::string>(), c.at("q_inverse").get<double>(),
                                 c.at("material").get<std::string>(), c.at("rs_ohm").get<double>(),
                                 c.at("f0_hz").get<double>(), c.at("gamma_per_m").get<double>(),
                                 c.at("upper_bound").get<bool>()});
    b.total_q_inverse = bj.at("total_q_inverse").get<double>();
    b.measured_q_i_m = opt_from(bj, "measured_q_i_m");
    b.residual_q_inverse = opt_from(bj, "residual_q_inverse");
    b.warnings = bj.at("warnings").get<std::vector<std::string>>();
    out.push_back(std::move(b));
  }
  return out;
}

inline std::string budgets_to_csv(const std::vector<budget::LossBudget>& budgets, const ReportMeta& meta) {
  std::ostringstream o;
  o << "# pkgloss " << version << " budget";
  for (const auto& [k, v] : meta.input_sha256) o << " " << k << "=" << v;
  o << "\nresonator,package,label,material,q_inverse,rs_ohm,f0_hz,gamma_per_m,upper_bound,total_q_inverse,"
       "measured_q_i_m\n";
  for (const auto& b : budgets)
    for (const auto& c : b.contributions)
      o << b.resonator_id << "," << b.package_id << "," << c.label << "," << c.material << ","
        << format_double(c.q_inverse) << "," << format_double(c.rs_ohm) << "," << format_double(c.f0_hz) << ","
        << format_double(c.gamma_per_m) << "," << (c.upper_bound ? "true" : "false") << ","
        << format_double(b.total_q_inverse) << "," << (b.measured_q_i_m ? format_double(*b.measured_q_i_m) : "")
        << "\n";
  return o.str();
}

// ---------------------------------------------------------------------------
// fit

inline json fit_json(const fit::FitResult& r) {
  const auto& p = r.params;
  json params{{"f0_hz", p.f0_hz}, {"q_loaded", p.q_loaded}, {"q_c_mag", p.q_c_mag}, {"phi_rad", p.phi},
              {"amp", p.amp},     {"alpha_rad", p.alpha},   {"tau_s", p.tau_s}};
  json cov = json::array();
  for (int a = 0; a < fit::n_params; ++a) {
    json row = json::array();
    for (int b = 0; b < fit::n_params; ++b) row.push_back(r.covariance(a, b));
    cov.push_back(row);
  }
  json names = json::array();
  for (const char* n : fit::parameter_names) names.push_back(n);
  return json{{"params", params},
              {"parameter_order", names},
              {"covariance", cov},
              {"q_internal", r.q_internal},
              {"q_internal_stderr", r.q_internal_stderr},
              {"q_internal_physical", r.q_internal_physical},
              {"chi2", r.chi2},
              {"n_points", r.n_points},
              {"converged", r.converged},
              {"iterations", r.iterations},
              {"uniform_weights", r.uniform_weights},
              {"photon_number", opt_number(r.photon_number)},
              {"warnings", r.warnings}};
}

inline std::string fit_to_json(const fit::FitResult& r, const ReportMeta& meta) {
  json j = meta_json(meta, "fit");
  j["fit"] = fit_json(r);
  return j.dump(2) + "\n";
}

inline fit::FitResult fit_from_json_object(const json& f) {
  fit::FitResult r;
  const auto& p = f.at("params");
  r.params = {p.at("f0_hz").get<double>(), p.at("q_loaded").get<double>(), p.at("q_c_mag").get<double>(),
              p.at("phi_rad").get<double>(), p.at("amp").get<double>(), p.at("alpha_rad").get<double>(),
              p.at("tau_s").get<double>()};
  const auto& cov = f.at("covariance");
  for (int a = 0; a < fit::n_params; ++a)
    for (int b = 0; b < fit::n_params; ++b) r.covariance(a, b) = cov.at(a).at(b).get<double>();
  r.q_internal = f.at("q_internal").get<double>();
  r.q_internal_stderr = f.at("q_internal_stderr").get<double>();
  r.q_internal_physical = f.at("q_internal_physical").get<bool>();
  r.chi2 = f.at("chi2").get<double>();
  r.n_points = f.at("n_points").get<std::size_t>();
  r.converged = f.at("converged").get<bool>();
  r.iterations = f.at("iterations").get<int>();
  r.uniform_weights = f.at("uniform_weights").get<bool>();
  r.photon_number = opt_from(f, "photon_number");
  r.warnings = f.at("warnings").get<std::vector<std::string>>();
  return r;
}

inline fit::FitResult fit_from_json(std::string_view text) { return fit_from_json_object(json::parse(text).at("fit")); }

inline std::string fit_to_csv(const fit::FitResult& r, const ReportMeta& meta) {
  std::ostringstream o;
  o << "# pkgloss " << version << " fit";
  for (const auto& [k, v] : meta.input_sha256) o << " " << k << "=" << v;
  o << "\nquantity,value,stderr\n";
  const auto& p = r.params;
  const double values[fit::n_params] = {p.f0_hz, p.q_loaded, p.q_c_mag, p.phi, p.amp, p.alpha, p.tau_s};
  for (int k = 0; k < fit::n_params; ++k)
    o << fit::parameter_names[k] << "," << format_double(values[k]) << "," << format_double(r.stderr_of(k)) << "\n";
  o << "q_internal," << format_double(r.q_internal) << "," << format_double(r.q_internal_stderr) << "\n";
  o << "chi2," << format_double(r.chi2) << ",\n";
  o << "n_points," << r.n_points << ",\n";
  o << "converged," << (r.converged ? 1 : 0) << ",\n";
  if (r.photon_number) o << "photon_number," << format_double(*r.photon_number) << ",\n";
  return o.str();
}

// ---------------------------------------------------------------------------
// power sweep

struct SweepRow {
  std::string trace;
  double applied_power_w = 0.0;
  double photon_number = 0.0;
  double q_internal = 0.0;
  double q_internal_stderr = 0.0;
  double q_loaded = 0.0;
  double q_c_mag = 0.0;
  double f0_hz = 0.0;
  bool converged = false;
};

struct SweepReport {
  std::vector<SweepRow> rows;
  double q_i_max = 0.0;
  double power_law_exponent = 0.0;
  double n_min = 0.0, n_max = 0.0;
};

inline std::string sweep_to_json(const SweepReport& s, const ReportMeta& meta) {
  json j = meta_json(meta, "sweep");
  j["rows"] = json::array();
  for (const auto& r : s.rows)
    j["rows"].push_back({{"trace", r.trace},
                         {"applied_power_w", r.applied_power_w},
                         {"photon_number", r.photon_number},
                         {"q_internal", r.q_internal},
                         {"q_internal_stderr", r.q_internal_stderr},
                         {"q_loaded", r.q_loaded},
                         {"q_c_mag", r.q_c_mag},
                         {"f0_hz", r.f0_hz},
                         {"converged", r.converged}});
  j["q_i_max"] = s.q_i_max;
  j["power_law_exponent"] = s.power_law_exponent;
  j["photon_window"] = {s.n_min, s.n_max};
  return j.dump(2) + "\n";
}

inline SweepReport sweep_from_json(std::string_view text) {
  const json j = json::parse(text);
  SweepReport s;
  for (const auto& r : j.at("rows"))
    s.rows.push_back({r.at("trace").get<std::string>(), r.at("applied_power_w").get<double>(),
                      r.at("photon_number").get<double>(), r.at("q_internal").get<double>(),
                      r.at("q_internal_stderr").get<double>(), r.at("q_loaded").get<double>(),
                      r.at("q_c_mag").get<double>(), r.at("f0_hz").get<double>(), r.at("converged").get<bool>()});
  s.q_i_max = j.at("q_i_max").get<double>();
  s.power_law_exponent = j.at("power_law_exponent").get<double>();
  s.n_min = j.at("photon_window").at(0).get<double>();
  s.n_max = j.at("photon_window").at(1).get<double>();
  return s;
}

inline std::string sweep_to_csv(const SweepReport& s, const ReportMeta& meta) {
  std::ostringstream o;
  o << "# pkgloss " << version << " sweep q_i_max=" << format_double(s.q_i_max)
    << " power_law_exponent=" << format_double(s.power_law_exponent);
  for (const auto& [k, v] : meta.input_sha256) o << " " << k << "=" << v;
  o << "\ntrace,applied_power_w,photon_number,q_internal,q_internal_stderr,q_loaded,q_c_mag,f0_hz,converged\n";
  for (const auto& r : s.rows)
    o << r.trace << "," << format_double(r.applied_power_w) << "," << format_double(r.photon_number) << ","
      << format_double(r.q_internal) << "," << format_double(r.q_internal_stderr) << "," << format_double(r.q_loaded)
      << "," << format_double(r.q_c_mag) << "," << format_double(r.f0_hz) << "," << (r.converged ? "true" : "false")
      << "\n";
  return o.str();
}

}  // namespace pkgloss::io
