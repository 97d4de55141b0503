#pragma once

// Run configuration.
//
//   [run]         resonators (list, default all), packages (list), output_dir, format (json|csv)
//   [resolution]  cells_per_gap, edge_refinement, growth, max_spacing_m, solver_tolerance, max_iterations
//   [geometry]    overrides of the package dimensions; required keys hole, pcb and
//                 aluminum for the custom package
//   [budget]      gamma_source (reference|computed), fill_fraction, include_lid,
//                 measured_q_i_m, surface_layer_thickness_m, surface_layer_epsilon_r, surface_tan_delta
//   [output]      profile_depths_m (list), field_maps (bool)
//   [material]    repeated; replaces the bundled material of the same name
//
// Unknown sections and keys are errors. write_config emits every field, so
// parse(write(c)) reproduces c.

#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pkgloss/errors.hpp"
#include "pkgloss/geometry.hpp"
#include "pkgloss/grid.hpp"
#include "pkgloss/io/csv.hpp"
#include "pkgloss/io/ini.hpp"
#include "pkgloss/materials.hpp"
#include "pkgloss/solver.hpp"

namespace pkgloss::io {

struct ResolutionConfig {
  double cells_per_gap = 16.0;
  double edge_refinement = 4.0;
  double growth = 1.15;
  double max_spacing_m = 25e-6;
  double solver_tolerance = 1e-8;
  int max_iterations = 1'000'000;
};

struct BudgetConfig {
  std::string gamma_source = "reference";
  double fill_fraction = 0.7;
  bool include_lid = false;
  std::optional<double> measured_q_i_m;
  std::optional<double> surface_layer_thickness_m;
  double surface_layer_epsilon_r = 10.0;
  double surface_tan_delta = 1e-3;
};

struct OutputConfig {
  std::vector<double> profile_depths_m;
  bool field_maps = false;
};

struct RunConfig {
  std::string source = "<defaults>";
  std::vector<std::string> resonators;  // empty: all bundled designs
  std::vector<field::PackageVariant> packages{field::PackageVariant::cu_solid};
  std::string output_dir = "out";
  std::string format = "json";
  ResolutionConfig resolution;
  std::map<std::string, double> geometry;  // numeric overrides
  std::map<std::string, bool> geometry_flags;
  BudgetConfig budget;
  OutputConfig output;
  std::vector<materials::Material> materials;

  field::GridSpec grid_spec(const field::ResonatorDesign& d) const {
    field::GridSpec s = field::GridSpec::for_design(d, resolution.cells_per_gap, resolution.max_spacing_m);
    s.edge_refinement = resolution.edge_refinement;
    s.growth = resolution.growth;
    return s;
  }

  field::SolverOptions solver_options() const { return {resolution.solver_tolerance, resolution.max_iterations}; }

  /// Variant defaults (or `base` for the standard packages) with the [geometry] overrides applied.
  field::PackageGeometry package_geometry(field::PackageVariant v, field::PackageGeometry base) const {
    if (v == field::PackageVariant::custom)
      for (const char* k : {"hole", "pcb", "aluminum"})
        if (!geometry_flags.count(k))
          throw ConfigError("custom package needs geometry." + std::string(k), "geometry." + std::string(k));
    auto num = [&](const char* k, double& dst) {
      if (const auto it = geometry.find(k); it != geometry.end()) dst = it->second;
    };
    auto flag = [&](const char* k, bool& dst) {
      if (const auto it = geometry_flags.find(k); it != geometry_flags.end()) dst = it->second;
    };
    num("domain_width_m", base.domain_width_m);
    num("lid_height_m", base.lid_height_m);
    num("substrate_thickness_m", base.substrate_thickness_m);
    num("substrate_epsilon_r", base.substrate_epsilon_r);
    num("chip_width_m", base.chip_width_m);
    num("hole_width_m", base.hole_width_m);
    num("hole_depth_m", base.hole_depth_m);
    num("pcb_gap_m", base.pcb_gap_m);
    num("glue_fraction", base.glue_fraction);
    flag("hole", base.hole);
    flag("pcb", base.pcb);
    flag("aluminum", base.aluminum);
    return base;
  }

  materials::MaterialSet material_set(materials::MaterialSet base) const {
    for (const auto& m : materials) {
      auto* slot = base.find(m.name);
      if (!slot)
        throw ConfigError("material '" + m.name + "' does not replace a bundled conductor", "material.name");
      *slot = m;
    }
    return base;
  }
};

namespace detail {

inline const char* const geometry_number_keys[] = {"domain_width_m", "lid_height_m",  "substrate_thickness_m",
                                                   "substrate_epsilon_r", "chip_width_m", "hole_width_m",
                                                   "hole_depth_m", "pcb_gap_m", "glue_fraction"};
inline const char* const geometry_flag_keys[] = {"hole", "pcb", "aluminum"};

inline std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ", ") + s;
  return out;
}

}  // namespace detail

inline RunConfig parse_config(const IniDocument& doc) {
  RunConfig c;
  c.source = doc.source;
  for (const auto& s : doc.sections) {
    if (s.name != "run" && s.name != "resolution" && s.name != "geometry" && s.name != "budget" &&
        s.name != "output" && s.name != "material")
      throw ConfigError("unknown section '" + s.name + "' in " + doc.source, s.name.empty() ? s.entries[0].key : s.name,
                        s.name.empty() ? s.entries[0].line : s.line);
    if (s.name != "material" && doc.all(s.name).size() > 1)
      throw ConfigError("section appears more than once in " + doc.source, s.name, s.line);
  }

  if (const auto* s = doc.first("run")) {
    reject_unknown_keys(*s, {"resonators", "packages", "output_dir", "format"});
    if (const auto* e = s->find("resonators")) c.resonators = as_list(*e);
    if (const auto* e = s->find("packages")) {
      c.packages.clear();
      for (const auto& item : as_list(*e)) {
        const auto v = field::parse_package(item);
        if (!v) throw ConfigError("unknown package '" + item + "'", s->path("packages"), e->line);
        c.packages.push_back(*v);
      }
      if (c.packages.empty()) throw ConfigError("no package selected", s->path("packages"), e->line);
    }
    if (const auto* e = s->find("output_dir")) c.output_dir = e->value;
    if (const auto* e = s->find("format")) {
      if (e->value != "json" && e->value != "csv")
        throw ConfigError("format must be json or csv", s->path("format"), e->line);
      c.format = e->value;
    }
  }

  if (const auto* s = doc.first("resolution")) {
    reject_unknown_keys(*s, {"cells_per_gap", "edge_refinement", "growth", "max_spacing_m", "solver_tolerance",
                             "max_iterations"});
    auto& r = c.resolution;
    if (const auto* e = s->find("cells_per_gap")) r.cells_per_gap = as_double(*s, *e);
    if (const auto* e = s->find("edge_refinement")) r.edge_refinement = as_double(*s, *e);
    if (const auto* e = s->find("growth")) r.growth = as_double(*s, *e);
    if (const auto* e = s->find("max_spacing_m")) r.max_spacing_m = as_double(*s, *e);
    if (const auto* e = s->find("solver_tolerance")) r.solver_tolerance = as_double(*s, *e);
    if (const auto* e = s->find("max_iterations")) {
      const double v = as_double(*s, *e);
      if (!(v >= 1.0 && v <= 1e9) || v != static_cast<double>(static_cast<int>(v)))
        throw ConfigError("max_iterations must be a positive integer", s->path("max_iterations"), e->line);
      r.max_iterations = static_cast<int>(v);
    }
    if (!(r.cells_per_gap >= 8.0))
      throw ConfigError("cells_per_gap must be >= 8", s->path("cells_per_gap"), s->line);
    if (!(r.solver_tolerance > 0.0 && r.solver_tolerance < 1.0))
      throw ConfigError("solver_tolerance must lie in (0, 1)", s->path("solver_tolerance"), s->line);
  }

  if (const auto* s = doc.first("geometry")) {
    for (const auto& e : s->entries) {
      bool known = false;
      for (const char* k : detail::geometry_number_keys)
        if (e.key == k) {
          c.geometry[e.key] = as_double(*s, e);
          known = true;
        }
      for (const char* k : detail::geometry_flag_keys)
        if (e.key == k) {
          c.geometry_flags[e.key] = as_bool(*s, e);
          known = true;
        }
      if (!known) throw ConfigError("unknown key", s->path(e.key), e.line);
    }
  }

  if (const auto* s = doc.first("budget")) {
    reject_unknown_keys(*s, {"gamma_source", "fill_fraction", "include_lid", "measured_q_i_m",
                             "surface_layer_thickness_m", "surface_layer_epsilon_r", "surface_tan_delta"});
    auto& b = c.budget;
    if (const auto* e = s->find("gamma_source")) {
      if (e->value != "reference" && e->value != "computed")
        throw ConfigError("gamma_source must be reference or computed", s->path("gamma_source"), e->line);
      b.gamma_source = e->value;
    }
    if (const auto* e = s->find("fill_fraction")) {
      b.fill_fraction = as_double(*s, *e);
      if (!(b.fill_fraction >= 0.0 && b.fill_fraction <= 1.0))
        throw ConfigError("fill_fraction must lie in [0, 1]", s->path("fill_fraction"), e->line);
    }
    if (const auto* e = s->find("include_lid")) b.include_lid = as_bool(*s, *e);
    if (const auto* e = s->find("measured_q_i_m")) b.measured_q_i_m = as_double(*s, *e);
    if (const auto* e = s->find("surface_layer_thickness_m")) b.surface_layer_thickness_m = as_double(*s, *e);
    if (const auto* e = s->find("surface_layer_epsilon_r")) b.surface_layer_epsilon_r = as_double(*s, *e);
    if (const auto* e = s->find("surface_tan_delta")) b.surface_tan_delta = as_double(*s, *e);
  }

  if (const auto* s = doc.first("output")) {
    reject_unknown_keys(*s, {"profile_depths_m", "field_maps"});
    if (const auto* e = s->find("profile_depths_m"))
      for (const auto& item : as_list(*e)) {
        const auto v = try_parse_double(item);
        if (!v) throw ConfigError("expected a list of numbers", s->path("profile_depths_m"), e->line);
        c.output.profile_depths_m.push_back(*v);
      }
    if (const auto* e = s->find("field_maps")) c.output.field_maps = as_bool(*s, *e);
  }

  c.materials = materials::parse_materials(doc);
  return c;
}

inline RunConfig parse_config_text(std::string_view text, std::string source = "<string>") {
  return parse_config(parse_ini(text, std::move(source)));
}

inline RunConfig load_config(const std::filesystem::path& path) { return parse_config(load_ini(path)); }

/// Canonical text form with every field spelled out.
inline std::string write_config(const RunConfig& c) {
  std::ostringstream o;
  std::vector<std::string> pk;
  for (auto v : c.packages) pk.emplace_back(field::package_id(v));
  o << "[run]\n";
  o << "resonators = " << detail::join(c.resonators) << "\n";
  o << "packages = " << detail::join(pk) << "\n";
  o << "output_dir = " << c.output_dir << "\n";
  o << "format = " << c.format << "\n\n";
  const auto& r = c.resolution;
  o << "[resolution]\n";
  o << "cells_per_gap = " << format_double(r.cells_per_gap) << "\n";
  o << "edge_refinement = " << format_double(r.edge_refinement) << "\n";
  o << "growth = " << format_double(r.growth) << "\n";
  o << "max_spacing_m = " << format_double(r.max_spacing_m) << "\n";
  o << "solver_tolerance = " << format_double(r.solver_tolerance) << "\n";
  o << "max_iterations = " << r.max_iterations << "\n\n";
  if (!c.geometry.empty() || !c.geometry_flags.empty()) {
    o << "[geometry]\n";
    for (const auto& [k, v] : c.geometry) o << k << " = " << format_double(v) << "\n";
    for (const auto& [k, v] : c.geometry_flags) o << k << " = " << (v ? "true" : "false") << "\n";
    o << "\n";
  }
  const auto& b = c.budget;
  o << "[budget]\n";
  o << "gamma_source = " << b.gamma_source << "\n";
  o << "fill_fraction = " << format_double(b.fill_fraction) << "\n";
  o << "include_lid = " << (b.include_lid ? "true" : "false") << "\n";
  if (b.measured_q_i_m) o << "measured_q_i_m = " << format_double(*b.measured_q_i_m) << "\n";
  if (b.surface_layer_thickness_m)
    o << "surface_layer_thickness_m = " << format_double(*b.surface_layer_thickness_m) << "\n";
  o << "surface_layer_epsilon_r = " << format_double(b.surface_layer_epsilon_r) << "\n";
  o << "surface_tan_delta = " << format_double(b.surface_tan_delta) << "\n\n";
  o << "[output]\n";
  std::vector<std::string> depths;
  for (double d : c.output.profile_depths_m) depths.push_back(format_double(d));
  o << "profile_depths_m = " << detail::join(depths) << "\n";
  o << "field_maps = " << (c.output.field_maps ? "true" : "false") << "\n";
  for (const auto& m : c.materials) {
    o << "\n[material]\n";
    o << "name = " << m.name << "\n";
    o << "resistivity_ohm_m = " << (m.resistivity_ohm_m ? format_double(*m.resistivity_ohm_m) : "none") << "\n";
    o << "epsilon_r = " << format_double(m.relative_permittivity) << "\n";
    o << "temperature_k = " << format_double(m.reference_temperature_k) << "\n";
  }
  return o.str();
}

}  // namespace pkgloss::io
