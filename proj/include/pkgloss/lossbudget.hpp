#pragma once

// Surface-resistance loss budgets: Q^-1 = R_S * gamma / (omega * mu0) per
// conductor, combined per package and compared to a measured Q_i.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pkgloss/constants.hpp"
#include "pkgloss/errors.hpp"
#include "pkgloss/geometry.hpp"
#include "pkgloss/materials.hpp"

namespace pkgloss::budget {

struct LossContribution {
  std::string label;  // Base, PCB, Glue, Lid, SurfaceDielectric, ...
  double q_inverse = 0.0;
  std::string material;
  double rs_ohm = 0.0;
  double f0_hz = 0.0;
  double gamma_per_m = 0.0;
  bool upper_bound = false;  // built from a bound on gamma rather than a value
};

struct LossBudget {
  std::string resonator_id;
  std::string package_id;
  std::vector<LossContribution> contributions;
  double total_q_inverse = 0.0;
  std::optional<double> measured_q_i_m;
  std::optional<double> residual_q_inverse;  // measured^-1 - total, signed
  std::vector<std::string> warnings;

  double total_q() const { return total_q_inverse > 0.0 ? 1.0 / total_q_inverse : INFINITY; }
};

/// Q^-1 = R_S gamma / (2 pi f0 mu0).
inline double q_inverse_from_rs(double rs_ohm, double f0_hz, double gamma_per_m) {
  detail::require_non_negative(rs_ohm, "surface resistance");
  detail::require_positive(f0_hz, "f0");
  detail::require_non_negative(gamma_per_m, "gamma");
  return rs_ohm * gamma_per_m / (angular_frequency(f0_hz) * PhysicalConstants::mu0);
}

struct GluePartitionInput {
  double rs_base = 0.0, rs_pcb = 0.0, rs_glue = 0.0;
  double f0_hz = 0.0;
  double gamma_base_glue_absent = 0.0;
  double gamma_pcb_glue_absent = 0.0;
  double gamma_base_glue_present = 0.0;
  double gamma_pcb_glue_present = 0.0;
  double gamma_glue = 0.0;
};

struct GluePartition {
  double base = 0.0, pcb = 0.0, glue = 0.0;
  bool glue_clamped = false;
  double glue_unclamped = 0.0;
};

/// Base and PCB from the glue-free simulation; glue is the extra loss of the
/// glued simulation over the glue-free one. A negative glue term (possible
/// with inconsistent gamma inputs) is clamped to zero and flagged.
inline GluePartition budget_glue_partition(const GluePartitionInput& in) {
  GluePartition out;
  out.base = q_inverse_from_rs(in.rs_base, in.f0_hz, in.gamma_base_glue_absent);
  out.pcb = q_inverse_from_rs(in.rs_pcb, in.f0_hz, in.gamma_pcb_glue_absent);
  const double glued = q_inverse_from_rs(in.rs_base, in.f0_hz, in.gamma_base_glue_present) +
                       q_inverse_from_rs(in.rs_pcb, in.f0_hz, in.gamma_pcb_glue_present) +
                       q_inverse_from_rs(in.rs_glue, in.f0_hz, in.gamma_glue);
  out.glue_unclamped = glued - out.base - out.pcb;
  out.glue = out.glue_unclamped;
  if (out.glue < 0.0) {
    out.glue = 0.0;
    out.glue_clamped = true;
  }
  return out;
}

/// Glue filling a fraction of a conductor backing: fill (R_S,glue - R_S,base) gamma_base / (omega mu0).
inline double budget_filled_backing(double rs_glue, double rs_base, double f0_hz, double gamma_base,
                                    double fill_fraction) {
  if (!(fill_fraction >= 0.0 && fill_fraction <= 1.0)) throw DomainError("fill fraction must lie in [0, 1]");
  detail::require_non_negative(rs_glue, "glue surface resistance");
  detail::require_non_negative(rs_base, "base surface resistance");
  detail::require_positive(f0_hz, "f0");
  detail::require_non_negative(gamma_base, "gamma");
  return fill_fraction * (rs_glue - rs_base) * gamma_base / (angular_frequency(f0_hz) * PhysicalConstants::mu0);
}

/// Sums the contributions. The sum runs over the values in sorted order, so
/// any permutation of `contributions` gives a bitwise identical total.
inline LossBudget total_budget(std::vector<LossContribution> contributions,
                               std::optional<double> measured_q_i_m = std::nullopt,
                               std::string resonator_id = {}, std::string package_id = {}) {
  if (contributions.empty()) throw DomainError("a budget needs at least one contribution");
  std::vector<double> q;
  q.reserve(contributions.size());
  for (const auto& c : contributions) {
    if (!(c.q_inverse >= 0.0) || !std::isfinite(c.q_inverse))
      throw DomainError("contribution '" + c.label + "' has a negative or non-finite Q^-1");
    q.push_back(c.q_inverse);
  }
  std::sort(q.begin(), q.end());
  LossBudget b;
  for (double v : q) b.total_q_inverse += v;
  b.contributions = std::move(contributions);
  b.resonator_id = std::move(resonator_id);
  b.package_id = std::move(package_id);
  if (measured_q_i_m) {
    detail::require_positive(*measured_q_i_m, "measured Q_i");
    b.measured_q_i_m = measured_q_i_m;
    b.residual_q_inverse = 1.0 / *measured_q_i_m - b.total_q_inverse;
  }
  return b;
}

inline double q_to_t1(double q, double f0_hz) {
  detail::require_positive(q, "Q");
  detail::require_positive(f0_hz, "f0");
  return q / angular_frequency(f0_hz);
}

inline double t1_to_q(double t1_s, double f0_hz) {
  detail::require_positive(t1_s, "T1");
  detail::require_positive(f0_hz, "f0");
  return t1_s * angular_frequency(f0_hz);
}

// ---------------------------------------------------------------------------
// Package budgets

/// gamma for one surface region; `upper_bound` marks a value only known to be below `value`.
struct GammaValue {
  double value = 0.0;
  bool upper_bound = false;
};

struct PackageBudgetOptions {
  double fill_fraction = 0.7;  // glue coverage of a solid conductor backing
  bool include_lid = false;
  std::optional<double> surface_dielectric_q_inverse;
  std::optional<double> measured_q_i_m;
};

/// Budget for one resonator in one of the four packages from per-region
/// gamma values keyed "base", "pcb", "glue" and optionally "lid".
///   Cu_solid: Base (copper, full backing), PCB, Glue via the fill formula on gamma_base.
///   Cu_hole:  Base, PCB, Glue via the partition formula. Only one gamma per
///             surface is available, so glue-present and glue-absent values coincide.
///   Al_*:     PCB and Glue; the aluminium base is superconducting.
/// Upper-bound gammas enter at their bound and mark the contribution.
inline LossBudget package_budget(field::PackageVariant variant, const field::ResonatorDesign& design,
                                 const std::map<std::string, GammaValue>& gamma,
                                 const materials::MaterialSet& mats = {}, const PackageBudgetOptions& opt = {}) {
  design.validate();
  const double f0 = design.f0_hz;
  auto get = [&](const std::string& region) -> GammaValue {
    const auto it = gamma.find(region);
    if (it == gamma.end())
      throw DomainError("no gamma for region '" + region + "' of " + design.id + " in " +
                        std::string(field::package_id(variant)));
    return it->second;
  };
  auto rs = [&](const materials::Material& m) { return materials::surface_resistance(m, f0); };
  auto term = [&](std::string label, const materials::Material& m, const GammaValue& g) {
    return LossContribution{std::move(label), q_inverse_from_rs(rs(m), f0, g.value), m.name, rs(m), f0, g.value,
                            g.upper_bound};
  };

  std::vector<LossContribution> parts;
  std::vector<std::string> warnings;
  const materials::Material& base_metal = field::is_aluminum(variant) ? mats.aluminum : mats.copper;
  switch (variant) {
    case field::PackageVariant::cu_solid: {
      const GammaValue base = get("base");
      parts.push_back(term("Base", base_metal, base));
      parts.push_back(term("PCB", mats.pcb, get("pcb")));
      LossContribution glue = term("Glue", mats.glue, base);
      glue.q_inverse = budget_filled_backing(rs(mats.glue), rs(base_metal), f0, base.value, opt.fill_fraction);
      if (glue.q_inverse < 0.0) {
        warnings.push_back("glue is less lossy than the backing; fill contribution clamped to 0");
        glue.q_inverse = 0.0;
      }
      parts.push_back(glue);
      break;
    }
    case field::PackageVariant::cu_hole: {
      const GammaValue base = get("base"), pcb = get("pcb"), glue = get("glue");
      GluePartitionInput in;
      in.rs_base = rs(base_metal);
      in.rs_pcb = rs(mats.pcb);
      in.rs_glue = rs(mats.glue);
      in.f0_hz = f0;
      in.gamma_base_glue_absent = in.gamma_base_glue_present = base.value;
      in.gamma_pcb_glue_absent = in.gamma_pcb_glue_present = pcb.value;
      in.gamma_glue = glue.value;
      const GluePartition p = budget_glue_partition(in);
      if (p.glue_clamped) warnings.push_back("negative glue term from the partition formula clamped to 0");
      parts.push_back(term("Base", base_metal, base));
      parts.push_back(term("PCB", mats.pcb, pcb));
      LossContribution g = term("Glue", mats.glue, glue);
      g.q_inverse = p.glue;
      parts.push_back(g);
      parts[0].q_inverse = p.base;
      parts[1].q_inverse = p.pcb;
      break;
    }
    case field::PackageVariant::al_solid:
    case field::PackageVariant::al_hole:
      parts.push_back(term("PCB", mats.pcb, get("pcb")));
      parts.push_back(term("Glue", mats.glue, get("glue")));
      break;
    case field::PackageVariant::custom:
      throw DomainError("package budgets are defined for the four standard packages");
  }
  if (opt.include_lid) parts.push_back(term("Lid", base_metal, get("lid")));
  if (opt.surface_dielectric_q_inverse) {
    LossContribution sd;
    sd.label = "SurfaceDielectric";
    sd.q_inverse = detail::require_non_negative(*opt.surface_dielectric_q_inverse, "surface dielectric Q^-1");
    sd.f0_hz = f0;
    parts.push_back(sd);
  }
  LossBudget b = total_budget(std::move(parts), opt.measured_q_i_m, design.id, std::string(field::package_id(variant)));
  b.warnings = std::move(warnings);
  return b;
}

}  // namespace pkgloss::budget
