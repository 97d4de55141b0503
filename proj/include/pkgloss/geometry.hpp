#pragma once

// Cross-section of a CPW resonator chip inside its package.
//
// Coordinates: x across the chip, centred on the trace; y vertical with the
// CPW metal plane at y = 0. The substrate occupies -t <= y <= 0 for
// |x| <= chip_width/2 and vacuum extends up to the lid. Conductor films have
// zero thickness. Below the substrate is either a conductor (the backing
// plane is the bottom of the domain) or a milled hole whose floor is the
// bottom of the domain; outside the hole the package base is solid metal.
// An optional PCB frame fills pcb_gap < |x| - chip_width/2 and -t <= y <= 0
// with grounded metal.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "pkgloss/errors.hpp"
#include "pkgloss/materials.hpp"

namespace pkgloss::field {

using materials::Material;

struct ResonatorDesign {
  std::string id;
  double width_m = 0.0;  // centre trace
  double gap_m = 0.0;
  double f0_hz = 0.0;
  double qc_design = 0.0;

  void validate() const {
    detail::require_positive(width_m, "resonator width");
    detail::require_positive(gap_m, "resonator gap");
    detail::require_positive(f0_hz, "resonator f0");
  }
};

/// Side of a path from which the field is sampled. On a conductor surface
/// this is the side facing the field region.
enum class Facing { up, down, left, right };

/// Axis-aligned straight piece of a surface path.
struct Segment {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  Facing facing = Facing::up;

  bool horizontal() const { return y0 == y1; }
  double length() const { return std::abs(x1 - x0) + std::abs(y1 - y0); }
};

struct SurfaceRegion {
  std::string name;
  std::vector<Segment> path;
  Material material;

  double length() const {
    double s = 0.0;
    for (const auto& seg : path) s += seg.length();
    return s;
  }

  void validate() const {
    if (name.empty()) throw DomainError("surface region without a name");
    if (path.empty()) throw DomainError("surface region '" + name + "' has an empty path");
    for (const auto& seg : path) {
      if (seg.x0 != seg.x1 && seg.y0 != seg.y1)
        throw DomainError("surface region '" + name + "' has a segment that is not axis-aligned");
      if (!(seg.length() > 0.0) || !std::isfinite(seg.length()))
        throw DomainError("surface region '" + name + "' has a degenerate segment");
    }
  }
};

struct ConductorBacking {
  Material material = materials::defaults::ofhc_copper();
  double glue_fraction = 0.0;  // areal glue coverage of the substrate bottom
};

struct HoleBacking {
  double depth_m = 2.5e-3;
  double width_m = 4.2e-3;
};

using Backing = std::variant<ConductorBacking, HoleBacking>;

struct PcbFrame {
  double gap_m = 0.1e-3;  // chip edge to PCB edge
  Material material = materials::defaults::pcb_copper();
};

struct CrossSection {
  double domain_width_m = 10e-3;
  double lid_height_m = 2e-3;
  double substrate_thickness_m = 0.43e-3;
  double substrate_epsilon_r = 10.8;
  double chip_width_m = 5e-3;
  ResonatorDesign trace;
  Backing backing = ConductorBacking{};
  Material wall_material = materials::defaults::ofhc_copper();
  std::optional<PcbFrame> pcb;
  std::vector<SurfaceRegion> surface_regions;

  bool has_hole() const { return std::holds_alternative<HoleBacking>(backing); }
  const HoleBacking* hole() const { return std::get_if<HoleBacking>(&backing); }
  const ConductorBacking* conductor_backing() const { return std::get_if<ConductorBacking>(&backing); }

  double half_width() const { return 0.5 * domain_width_m; }
  double chip_half() const { return std::min(0.5 * chip_width_m, half_width()); }
  double bottom_y() const {
    const double t = substrate_thickness_m;
    return has_hole() ? -t - hole()->depth_m : -t;
  }
  double pcb_edge() const { return pcb ? chip_half() + pcb->gap_m : half_width(); }
  bool pcb_present() const { return pcb.has_value() && pcb_edge() < half_width(); }

  const SurfaceRegion* find_region(std::string_view name) const {
    for (const auto& r : surface_regions)
      if (r.name == name) return &r;
    return nullptr;
  }

  /// Horizontal lines on which materials change (y = const).
  std::vector<double> interface_rows() const {
    std::vector<double> ys{0.0, -substrate_thickness_m, lid_height_m, bottom_y()};
    return ys;
  }

  /// Vertical lines on which materials change (x = const).
  std::vector<double> interface_columns() const {
    const double hw = half_width();
    std::vector<double> xs{-hw, hw, -chip_half(), chip_half()};
    if (pcb_present()) {
      xs.push_back(-pcb_edge());
      xs.push_back(pcb_edge());
    }
    if (const auto* h = hole()) {
      xs.push_back(-0.5 * h->width_m);
      xs.push_back(0.5 * h->width_m);
    }
    const double a = 0.5 * trace.width_m;
    const double b = a + trace.gap_m;
    for (double v : {-b, -a, a, b}) xs.push_back(v);
    return xs;
  }

  void validate() const {
    trace.validate();
    detail::require_positive(domain_width_m, "domain width");
    detail::require_positive(lid_height_m, "lid height");
    detail::require_positive(substrate_thickness_m, "substrate thickness");
    detail::require_positive(chip_width_m, "chip width");
    if (!(substrate_epsilon_r >= 1.0)) throw DomainError("substrate permittivity must be >= 1");
    const double outer = 0.5 * trace.width_m + trace.gap_m;
    if (!(outer < chip_half()))
      throw DomainError("trace and gaps must fit inside the chip and the domain");
    wall_material.validate();
    if (const auto* cb = conductor_backing()) {
      cb->material.validate();
      if (!(cb->glue_fraction >= 0.0 && cb->glue_fraction <= 1.0))
        throw DomainError("glue fraction must lie in [0, 1]");
    }
    if (const auto* h = hole()) {
      detail::require_positive(h->depth_m, "hole depth");
      detail::require_positive(h->width_m, "hole width");
      if (!(0.5 * h->width_m < half_width())) throw DomainError("hole must be narrower than the domain");
    }
    if (pcb) {
      detail::require_positive(pcb->gap_m, "PCB gap");
      pcb->material.validate();
    }
    const auto rows = interface_rows();
    const auto cols = interface_columns();
    const double tol = 1e-9 * std::max(domain_width_m, lid_height_m);
    auto on = [tol](const std::vector<double>& lines, double v) {
      return std::any_of(lines.begin(), lines.end(), [&](double l) { return std::abs(l - v) <= tol; });
    };
    for (const auto& r : surface_regions) {
      r.validate();
      for (const auto& s : r.path) {
        const bool ok = s.horizontal() ? on(rows, s.y0) : on(cols, s.x0);
        if (!ok)
          throw DomainError("surface region '" + r.name +
                            "' does not lie on the domain boundary or a material interface");
        const double lo_x = std::min(s.x0, s.x1), hi_x = std::max(s.x0, s.x1);
        const double lo_y = std::min(s.y0, s.y1), hi_y = std::max(s.y0, s.y1);
        if (lo_x < -half_width() - tol || hi_x > half_width() + tol || lo_y < bottom_y() - tol ||
            hi_y > lid_height_m + tol)
          throw DomainError("surface region '" + r.name + "' leaves the domain");
      }
    }
  }
};

// ---------------------------------------------------------------------------
// Package presets

enum class PackageVariant { cu_solid, cu_hole, al_solid, al_hole, custom };

inline std::string_view package_id(PackageVariant v) {
  switch (v) {
    case PackageVariant::cu_solid: return "Cu_solid";
    case PackageVariant::cu_hole: return "Cu_hole";
    case PackageVariant::al_solid: return "Al_solid";
    case PackageVariant::al_hole: return "Al_hole";
    case PackageVariant::custom: return "custom";
  }
  return "custom";
}

/// Accepts the ASCII ids and the filled/open square notation (Cu■, Cu□, ...).
inline std::optional<PackageVariant> parse_package(std::string_view s) {
  if (s == "Cu_solid" || s == "Cu■") return PackageVariant::cu_solid;
  if (s == "Cu_hole" || s == "Cu□") return PackageVariant::cu_hole;
  if (s == "Al_solid" || s == "Al■") return PackageVariant::al_solid;
  if (s == "Al_hole" || s == "Al□") return PackageVariant::al_hole;
  if (s == "custom") return PackageVariant::custom;
  return std::nullopt;
}

inline bool is_aluminum(PackageVariant v) {
  return v == PackageVariant::al_solid || v == PackageVariant::al_hole;
}

inline bool has_hole(PackageVariant v) { return v == PackageVariant::cu_hole || v == PackageVariant::al_hole; }

/// Standard named regions for a cross-section:
///   substrate_bottom  y = -t under the chip (the chip/PCB mounting plane)
///   under_chip        package conductor surfaces below the chip footprint
///   base              all exposed package-base surfaces below the CPW plane
///   glue              glue-covered part of the base
///   pcb               PCB top face and the face towards the chip
///   lid, walls        enclosure above the CPW plane
/// `glue_material` is attached to the glue region; base regions carry the
/// backing (or wall) material.
inline std::vector<SurfaceRegion> default_regions(const CrossSection& xs, const Material& glue_material) {
  const double t = xs.substrate_thickness_m;
  const double hw = xs.half_width();
  const double ch = xs.chip_half();
  const double pe = xs.pcb_edge();
  const double lid = xs.lid_height_m;
  const Material base_material =
      xs.conductor_backing() ? xs.conductor_backing()->material : xs.wall_material;

  std::vector<SurfaceRegion> out;
  SurfaceRegion bottom{"substrate_bottom", {{-ch, -t, ch, -t, Facing::up}}, base_material};
  out.push_back(bottom);

  SurfaceRegion under{"under_chip", {}, base_material};
  SurfaceRegion base{"base", {}, base_material};
  SurfaceRegion glue{"glue", {}, glue_material};
  if (const auto* h = xs.hole()) {
    const double hh = 0.5 * h->width_m;
    const double floor = xs.bottom_y();
    under.path = {{-hh, floor, hh, floor, Facing::up},
                  {-hh, floor, -hh, -t, Facing::right},
                  {hh, floor, hh, -t, Facing::left}};
    if (hh < ch) {
      under.path.push_back({-ch, -t, -hh, -t, Facing::up});
      under.path.push_back({hh, -t, ch, -t, Facing::up});
      glue.path = {{-ch, -t, -hh, -t, Facing::up}, {hh, -t, ch, -t, Facing::up}};
    }
  } else {
    under.path = bottom.path;
    glue.path = bottom.path;
  }
  base.path = under.path;
  if (pe > ch) {
    base.path.push_back({-pe, -t, -ch, -t, Facing::up});
    base.path.push_back({ch, -t, pe, -t, Facing::up});
  }
  out.push_back(under);
  out.push_back(base);
  if (!glue.path.empty()) out.push_back(glue);

  if (xs.pcb_present()) {
    SurfaceRegion pcb{"pcb", {}, xs.pcb->material};
    pcb.path = {{-hw, 0.0, -pe, 0.0, Facing::up},
                {pe, 0.0, hw, 0.0, Facing::up},
                {-pe, -t, -pe, 0.0, Facing::right},
                {pe, -t, pe, 0.0, Facing::left}};
    out.push_back(pcb);
  }
  out.push_back(SurfaceRegion{"lid", {{-hw, lid, hw, lid, Facing::down}}, xs.wall_material});
  const double wall_bottom = xs.pcb_present() || ch >= hw ? 0.0 : -t;
  out.push_back(SurfaceRegion{"walls",
                              {{-hw, wall_bottom, -hw, lid, Facing::right}, {hw, wall_bottom, hw, lid, Facing::left}},
                              xs.wall_material});
  return out;
}

/// Dimensions of a package and the chip inside it. Defaults describe the
/// measured packages: 5 mm sapphire chip (0.43 mm, eps_r 10.8), PCB frame
/// 0.1 mm from the chip edge, 10 mm between side walls, lid 2 mm above the
/// chip, and for the hole variants a 4.2 mm wide, 2.5 mm deep hole.
struct PackageGeometry {
  double domain_width_m = 10e-3;
  double lid_height_m = 2e-3;
  double substrate_thickness_m = 0.43e-3;
  double substrate_epsilon_r = 10.8;
  double chip_width_m = 5e-3;
  bool hole = false;
  double hole_width_m = 4.2e-3;
  double hole_depth_m = 2.5e-3;
  bool pcb = true;
  double pcb_gap_m = 0.1e-3;
  bool aluminum = false;      // package metal; copper otherwise
  double glue_fraction = 0.0;  // glue coverage of a solid backing
};

inline PackageGeometry package_geometry(PackageVariant v) {
  PackageGeometry g;
  g.hole = has_hole(v);
  g.aluminum = is_aluminum(v);
  g.glue_fraction = v == PackageVariant::cu_solid ? 0.7 : 0.0;
  return g;
}

inline CrossSection make_cross_section(const PackageGeometry& pg, const ResonatorDesign& design,
                                       const materials::MaterialSet& mats = {}) {
  CrossSection xs;
  xs.trace = design;
  xs.domain_width_m = pg.domain_width_m;
  xs.lid_height_m = pg.lid_height_m;
  xs.substrate_thickness_m = pg.substrate_thickness_m;
  xs.substrate_epsilon_r = pg.substrate_epsilon_r;
  xs.chip_width_m = pg.chip_width_m;
  const Material& metal = pg.aluminum ? mats.aluminum : mats.copper;
  xs.wall_material = metal;
  if (pg.hole)
    xs.backing = HoleBacking{pg.hole_depth_m, pg.hole_width_m};
  else
    xs.backing = ConductorBacking{metal, pg.glue_fraction};
  if (pg.pcb) xs.pcb = PcbFrame{pg.pcb_gap_m, mats.pcb};
  xs.surface_regions = default_regions(xs, mats.glue);
  xs.validate();
  return xs;
}

/// Cross-section of one of the four measured packages around `design`.
inline CrossSection make_package(PackageVariant variant, const ResonatorDesign& design,
                                 const materials::MaterialSet& mats = {}) {
  if (variant == PackageVariant::custom)
    throw DomainError("a custom package needs an explicit geometry");
  return make_cross_section(package_geometry(variant), design, mats);
}

/// CPW whose ground planes and substrate span the whole domain; used to
/// check transmission-line parameters against closed forms.
inline CrossSection make_wide_ground_cpw(double width_m, double gap_m, double epsilon_r,
                                         double substrate_thickness_m, double domain_width_m,
                                         double lid_height_m) {
  CrossSection xs;
  xs.trace = ResonatorDesign{"cpw", width_m, gap_m, 5e9, 0.0};
  xs.domain_width_m = domain_width_m;
  xs.chip_width_m = domain_width_m;
  xs.lid_height_m = lid_height_m;
  xs.substrate_thickness_m = substrate_thickness_m;
  xs.substrate_epsilon_r = epsilon_r;
  xs.backing = ConductorBacking{};
  xs.pcb.reset();
  xs.validate();
  return xs;
}

}  // namespace pkgloss::field
