#pragma once

// Bundled reference data: resonator designs, the simulated gamma table,
// material resistivities, package dimensions and measured maximum Q_i.
// Every file is checked against the compiled-in SHA-256 manifest on load.

#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pkgloss/errors.hpp"
#include "pkgloss/gamma_table.hpp"
#include "pkgloss/geometry.hpp"
#include "pkgloss/io/checksum.hpp"
#include "pkgloss/io/csv.hpp"
#include "pkgloss/io/ini.hpp"
#include "pkgloss/io/reference_manifest.hpp"
#include "pkgloss/materials.hpp"

#ifndef PKGLOSS_DATA_DIR
#define PKGLOSS_DATA_DIR "data"
#endif

namespace pkgloss::io {

struct PackageConstants {
  double chip_width_m = 0, chip_length_m = 0, chip_thickness_m = 0, chip_epsilon_r = 0;
  double hole_width_m = 0, hole_length_m = 0, hole_depth_m = 0;
  double pcb_width_m = 0, pcb_length_m = 0, pcb_gap_to_chip_m = 0;
  double pcb_metal_thickness_m = 0, pcb_dielectric_thickness_m = 0;
  double pcb_dielectric_epsilon_r = 0, pcb_dielectric_loss_tangent = 0;
};

struct ReferenceDataset {
  std::vector<field::ResonatorDesign> designs;
  GammaTable gamma;
  std::vector<materials::Material> materials;
  PackageConstants package;
  std::map<std::pair<std::string, std::string>, double> measured_q_i_m;  // (package, resonator)
  std::map<std::string, std::string> file_sha256;

  const field::ResonatorDesign& design(std::string_view id) const {
    for (const auto& d : designs)
      if (d.id == id) return d;
    throw DomainError("unknown resonator '" + std::string(id) + "'");
  }

  const materials::Material& material(std::string_view name) const {
    for (const auto& m : materials)
      if (m.name == name) return m;
    throw DomainError("unknown material '" + std::string(name) + "'");
  }

  materials::MaterialSet material_set() const {
    materials::MaterialSet s;
    s.glue = material("silver_glue");
    s.copper = material("ofhc_copper");
    s.pcb = material("pcb_copper");
    s.aluminum = material("aluminum");
    return s;
  }

  std::optional<double> measured(std::string_view package, std::string_view resonator) const {
    const auto it = measured_q_i_m.find({std::string(package), std::string(resonator)});
    if (it == measured_q_i_m.end()) return std::nullopt;
    return it->second;
  }
};

/// $PKGLOSS_DATA_DIR if set, else the directory fixed at build time.
inline std::filesystem::path default_data_dir() {
  if (const char* env = std::getenv("PKGLOSS_DATA_DIR"); env && *env) return env;
  return PKGLOSS_DATA_DIR;
}

/// Parses a gamma cell: a number, or "<bound" for a value only known to be below the bound.
inline budget::GammaValue parse_gamma_cell(const CsvTable& t, const CsvRow& row, std::size_t col) {
  std::string_view cell = row.cells[col];
  budget::GammaValue v;
  if (!cell.empty() && cell.front() == '<') {
    v.upper_bound = true;
    cell.remove_prefix(1);
  }
  const auto num = try_parse_double(cell);
  if (!num || !(*num >= 0.0))
    throw ConfigError("expected a non-negative gamma in " + t.source + ", got '" + row.cells[col] + "'",
                      t.header[col], row.line);
  v.value = *num;
  return v;
}

/// Reads a gamma table with columns resonator, package, region, gamma_per_m
/// and an optional upper_bound column (true/false).
inline GammaTable parse_gamma_table(const CsvTable& t) {
  const auto cr = t.column("resonator"), cp = t.column("package"), cg = t.column("region");
  const auto cv = t.column("gamma_per_m");
  std::optional<std::size_t> cb;
  for (std::size_t k = 0; k < t.header.size(); ++k)
    if (t.header[k] == "upper_bound") cb = k;
  GammaTable g;
  for (const auto& row : t.rows) {
    auto v = parse_gamma_cell(t, row, cv);
    if (cb) {
      const auto& s = row.cells[*cb];
      if (s == "true")
        v.upper_bound = true;
      else if (s != "false")
        throw ConfigError("upper_bound must be true or false", "upper_bound", row.line);
    }
    const auto key = std::make_tuple(row.cells[cr], row.cells[cp], row.cells[cg]);
    if (g.entries.count(key)) throw ConfigError("duplicate gamma entry in " + t.source, "gamma_per_m", row.line);
    g.set(row.cells[cr], row.cells[cp], row.cells[cg], v);
  }
  return g;
}

namespace detail {

inline double ini_number(const IniDocument& doc, std::string_view section, std::string_view key) {
  const auto* s = doc.first(section);
  if (!s) throw ConfigError("missing section in " + doc.source, std::string(section));
  const auto* e = s->find(key);
  if (!e) throw ConfigError("missing key in " + doc.source, s->path(key), s->line);
  return as_double(*s, *e);
}

}  // namespace detail

/// Loads and verifies the bundled data. Throws IntegrityError if any file is
/// missing or differs from the manifest.
inline ReferenceDataset load_reference(const std::filesystem::path& dir = default_data_dir()) {
  ReferenceDataset ds;
  std::map<std::string, std::string> text;
  for (const auto& entry : reference_manifest) {
    const auto path = dir / std::string(entry.file);
    std::string bytes;
    try {
      bytes = read_text_file(path);
    } catch (const ConfigError&) {
      throw IntegrityError("reference file missing: " + path.string());
    }
    const std::string hash = sha256_hex(bytes);
    if (hash != entry.sha256)
      throw IntegrityError("checksum mismatch for " + path.string() + ": expected " + std::string(entry.sha256) +
                           ", got " + hash);
    ds.file_sha256[std::string(entry.file)] = hash;
    text[std::string(entry.file)] = std::move(bytes);
  }

  const auto designs = parse_csv(text["designs.csv"], "designs.csv");
  const auto ci = designs.column("id"), cw = designs.column("width_m"), cg = designs.column("gap_m");
  const auto cf = designs.column("f0_hz"), cq = designs.column("qc_design");
  for (const auto& row : designs.rows) {
    field::ResonatorDesign d{row.cells[ci], designs.number(row, cw), designs.number(row, cg), designs.number(row, cf),
                             designs.number(row, cq)};
    d.validate();
    ds.designs.push_back(d);
  }

  ds.gamma = parse_gamma_table(parse_csv(text["gamma_table.csv"], "gamma_table.csv"));
  ds.materials = materials::parse_materials(parse_ini(text["materials.ini"], "materials.ini"));

  const auto pkg = parse_ini(text["package.ini"], "package.ini");
  auto& pc = ds.package;
  pc.chip_width_m = detail::ini_number(pkg, "chip", "width_m");
  pc.chip_length_m = detail::ini_number(pkg, "chip", "length_m");
  pc.chip_thickness_m = detail::ini_number(pkg, "chip", "thickness_m");
  pc.chip_epsilon_r = detail::ini_number(pkg, "chip", "epsilon_r");
  pc.hole_width_m = detail::ini_number(pkg, "hole", "width_m");
  pc.hole_length_m = detail::ini_number(pkg, "hole", "length_m");
  pc.hole_depth_m = detail::ini_number(pkg, "hole", "depth_m");
  pc.pcb_width_m = detail::ini_number(pkg, "pcb", "width_m");
  pc.pcb_length_m = detail::ini_number(pkg, "pcb", "length_m");
  pc.pcb_gap_to_chip_m = detail::ini_number(pkg, "pcb", "gap_to_chip_m");
  pc.pcb_metal_thickness_m = detail::ini_number(pkg, "pcb", "metal_thickness_m");
  pc.pcb_dielectric_thickness_m = detail::ini_number(pkg, "pcb", "dielectric_thickness_m");
  pc.pcb_dielectric_epsilon_r = detail::ini_number(pkg, "pcb", "dielectric_epsilon_r");
  pc.pcb_dielectric_loss_tangent = detail::ini_number(pkg, "pcb", "dielectric_loss_tangent");

  const auto meas = parse_csv(text["measured_qi.csv"], "measured_qi.csv");
  const auto mp = meas.column("package"), mr = meas.column("resonator"), mq = meas.column("q_i_m");
  for (const auto& row : meas.rows) ds.measured_q_i_m[{row.cells[mp], row.cells[mr]}] = meas.number(row, mq);
  return ds;
}

/// Package geometry for a standard variant, with dimensions from the reference data.
inline field::PackageGeometry reference_geometry(const ReferenceDataset& ds, field::PackageVariant v) {
  auto g = field::package_geometry(v);
  g.chip_width_m = ds.package.chip_width_m;
  g.substrate_thickness_m = ds.package.chip_thickness_m;
  g.substrate_epsilon_r = ds.package.chip_epsilon_r;
  g.hole_width_m = ds.package.hole_width_m;
  g.hole_depth_m = ds.package.hole_depth_m;
  g.pcb_gap_m = ds.package.pcb_gap_to_chip_m;
  return g;
}

}  // namespace pkgloss::io
