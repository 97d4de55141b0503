#pragma once

// Normal-metal surface resistance from dc resistivity.
//
// Resistivities are frequency-independent dc values: the anomalous skin
// effect is neglected, so R_S follows the classical sqrt(f) law. A material
// without a resistivity is an ideal superconductor and has R_S = 0.
//
// The silver-glue resistivity was characterized at 77 K but is applied at
// millikelvin temperatures unchanged; `reference_temperature_k` records where
// each value came from and is not used in any calculation.

#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pkgloss/constants.hpp"
#include "pkgloss/errors.hpp"
#include "pkgloss/io/ini.hpp"

namespace pkgloss::materials {

struct Material {
  std::string name;
  std::optional<double> resistivity_ohm_m;  // nullopt: ideal superconductor
  double relative_permittivity = 1.0;
  double reference_temperature_k = 0.0;

  bool is_superconductor() const { return !resistivity_ohm_m.has_value(); }
  double resistivity() const { return resistivity_ohm_m.value_or(0.0); }

  void validate() const {
    if (name.empty()) throw DomainError("material name must not be empty");
    if (resistivity_ohm_m && !(*resistivity_ohm_m >= 0.0 && std::isfinite(*resistivity_ohm_m)))
      throw DomainError("material '" + name + "': resistivity must be >= 0");
    if (!(relative_permittivity >= 1.0 && std::isfinite(relative_permittivity)))
      throw DomainError("material '" + name + "': relative permittivity must be >= 1");
    if (!(reference_temperature_k >= 0.0))
      throw DomainError("material '" + name + "': temperature must be >= 0");
  }
};

/// delta = sqrt(2 rho / (omega mu0)).
inline double skin_depth(double rho_ohm_m, double f_hz) {
  detail::require_positive(rho_ohm_m, "skin_depth: resistivity");
  detail::require_positive(f_hz, "skin_depth: frequency");
  return std::sqrt(2.0 * rho_ohm_m / (angular_frequency(f_hz) * PhysicalConstants::mu0));
}

/// R_S = rho / delta, in ohm per square. Zero resistivity is the superconducting limit.
inline double surface_resistance(double rho_ohm_m, double f_hz) {
  detail::require_non_negative(rho_ohm_m, "surface_resistance: resistivity");
  detail::require_positive(f_hz, "surface_resistance: frequency");
  if (rho_ohm_m == 0.0) return 0.0;
  return rho_ohm_m / skin_depth(rho_ohm_m, f_hz);
}

/// R_S / (omega mu0), a length. Multiplying by a geometric factor gamma gives Q^-1.
inline double rs_loss_ratio(double rho_ohm_m, double f_hz) {
  const double rs = surface_resistance(rho_ohm_m, f_hz);
  return rs / (angular_frequency(f_hz) * PhysicalConstants::mu0);
}

inline double surface_resistance(const Material& m, double f_hz) {
  return surface_resistance(m.resistivity(), f_hz);
}

inline double rs_loss_ratio(const Material& m, double f_hz) { return rs_loss_ratio(m.resistivity(), f_hz); }

// Bundled defaults. Values are cryogenic estimates except the glue (77 K).
namespace defaults {

inline Material silver_glue() { return {"silver_glue", 630e-8, 1.0, 77.0}; }
inline Material ofhc_copper() { return {"ofhc_copper", 0.6e-8, 1.0, 3.0}; }
inline Material pcb_copper() { return {"pcb_copper", 2.0e-8, 1.0, 3.0}; }
inline Material aluminum() { return {"aluminum", std::nullopt, 1.0, 0.02}; }
inline Material sapphire() { return {"sapphire", std::nullopt, 10.8, 0.02}; }
inline Material vacuum() { return {"vacuum", std::nullopt, 1.0, 0.0}; }

}  // namespace defaults

/// The conductors that appear in a package budget.
struct MaterialSet {
  Material glue = defaults::silver_glue();
  Material copper = defaults::ofhc_copper();
  Material pcb = defaults::pcb_copper();
  Material aluminum = defaults::aluminum();

  Material* find(std::string_view name) {
    for (Material* m : {&glue, &copper, &pcb, &aluminum})
      if (m->name == name) return m;
    return nullptr;
  }
  const Material* find(std::string_view name) const { return const_cast<MaterialSet*>(this)->find(name); }
};

/// Reads [material] blocks with keys name, resistivity_ohm_m ("none" for a
/// superconductor), epsilon_r and temperature_k.
inline std::vector<Material> parse_materials(const io::IniDocument& doc) {
  std::vector<Material> out;
  for (const auto* section : doc.all("material")) {
    io::reject_unknown_keys(*section, {"name", "resistivity_ohm_m", "epsilon_r", "temperature_k"});
    Material m;
    const auto* name = section->find("name");
    if (!name) throw ConfigError("material block without a name", "material.name", section->line);
    m.name = name->value;
    if (const auto* e = section->find("resistivity_ohm_m")) {
      if (e->value == "none" || e->value == "superconductor")
        m.resistivity_ohm_m.reset();
      else
        m.resistivity_ohm_m = io::as_double(*section, *e);
    }
    if (const auto* e = section->find("epsilon_r")) m.relative_permittivity = io::as_double(*section, *e);
    if (const auto* e = section->find("temperature_k")) m.reference_temperature_k = io::as_double(*section, *e);
    try {
      m.validate();
    } catch (const DomainError& err) {
      throw ConfigError(err.what(), "material.name", section->line);
    }
    out.push_back(std::move(m));
  }
  return out;
}

inline std::vector<Material> load_materials(const std::filesystem::path& path) {
  return parse_materials(io::load_ini(path));
}

}  // namespace pkgloss::materials
