#pragma once

// Quasi-TEM fields of a CPW cross-section and the quantities derived from them.
//
// E comes from the Laplace solve with the substrate permittivity. H ignores
// dielectrics: it is the air-filled potential gradient rotated by 90 degrees,
// scaled so that the line integral of H around the centre conductor equals a
// chosen current. All conductors are perfect and have zero thickness, so on
// a conductor surface only the side facing the field region is meaningful;
// field samples on conductors are one-sided towards that side.
//
// Geometric factor. For a surface that is uniform along the line, the sin^2
// standing-wave profile of the resonator multiplies both the surface and the
// volume integral of |H|^2 and cancels, so the 3D ratio reduces to
//     gamma = (integral over the path of |H|^2 dl) / (integral over the section of |H|^2 dA).
// Paths at ends of the line (wirebonds, chip ends) are not representable.

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "pkgloss/constants.hpp"
#include "pkgloss/errors.hpp"
#include "pkgloss/geometry.hpp"
#include "pkgloss/grid.hpp"
#include "pkgloss/solver.hpp"

namespace pkgloss::field {

struct Vec2 {
  double x = 0.0, y = 0.0;
  double norm2() const { return x * x + y * y; }
  double norm() const { return std::sqrt(norm2()); }
};

enum class FieldKind { electric, magnetic };

struct FieldMap {
  std::shared_ptr<const Grid> grid;
  std::vector<double> potential;  // volts, signal conductor at 1 V
  bool dielectric = false;        // solved with the substrate permittivity
  FieldKind kind = FieldKind::electric;
  double scale = 1.0;             // vector = scale * (-grad phi), rotated for H
  double volume_integral = 0.0;   // integral of eps_r |v|^2 dA (eps_r = 1 for H)
  std::vector<double> vx, vy;     // node vectors, conductor nodes sampled from their free side
  SolveStats stats;

  /// -grad(phi) at a node. `prefer` picks the side for conductor nodes when
  /// that neighbour is free; otherwise the first free side in the order
  /// up, down, right, left is used. Interior conductor nodes give zero.
  Vec2 electric_at(std::size_t i, std::size_t j, std::optional<Facing> prefer = std::nullopt) const;

  /// The mapped vector field (E or H) at a node.
  Vec2 vector_at(std::size_t i, std::size_t j, std::optional<Facing> prefer = std::nullopt) const {
    const Vec2 e = electric_at(i, j, prefer);
    if (kind == FieldKind::magnetic) return {-scale * e.y, scale * e.x};
    return {scale * e.x, scale * e.y};
  }

  FieldMap scaled(double k) const {
    FieldMap out = *this;
    out.scale *= k;
    out.volume_integral *= k * k;
    for (auto& v : out.vx) v *= k;
    for (auto& v : out.vy) v *= k;
    return out;
  }
};

namespace detail {

inline double d_central(const std::vector<double>& c, const std::vector<double>& f, std::size_t k,
                        std::size_t stride) {
  const double h1 = c[1] - c[0], h2 = c[2] - c[1];
  return (-h2 / (h1 * (h1 + h2))) * f[k - stride] + ((h2 - h1) / (h1 * h2)) * f[k] +
         (h1 / (h2 * (h1 + h2))) * f[k + stride];
}

// One-sided derivative towards increasing index. c = {c0, c1, c2} (c2 unused if !second).
inline double d_forward(const double* c, const double* f, bool second) {
  const double h1 = c[1] - c[0];
  if (!second) return (f[1] - f[0]) / h1;
  const double h2 = c[2] - c[1];
  return -(2.0 * h1 + h2) / (h1 * (h1 + h2)) * f[0] + (h1 + h2) / (h1 * h2) * f[1] -
         h1 / (h2 * (h1 + h2)) * f[2];
}

}  // namespace detail

inline Vec2 FieldMap::electric_at(std::size_t i, std::size_t j, std::optional<Facing> prefer) const {
  const Grid& g = *grid;
  const std::size_t nx = g.nx(), ny = g.ny();
  const std::size_t k = g.index(i, j);
  const auto& phi = potential;

  auto gx_central = [&]() {
    if (i == 0 || i + 1 == nx) return 0.0;
    const double c[3] = {g.x[i - 1], g.x[i], g.x[i + 1]};
    return detail::d_central(std::vector<double>(c, c + 3), phi, k, 1);
  };
  auto gy_central = [&]() {
    if (j == 0 || j + 1 == ny) return 0.0;
    const double c[3] = {g.y[j - 1], g.y[j], g.y[j + 1]};
    return detail::d_central(std::vector<double>(c, c + 3), phi, k, nx);
  };

  if (g.kind[k] == NodeKind::free) return {-gx_central(), -gy_central()};

  auto free_at = [&](Facing f) {
    switch (f) {
      case Facing::up: return j + 1 < ny && !g.fixed(i, j + 1);
      case Facing::down: return j > 0 && !g.fixed(i, j - 1);
      case Facing::right: return i + 1 < nx && !g.fixed(i + 1, j);
      case Facing::left: return i > 0 && !g.fixed(i - 1, j);
    }
    return false;
  };
  std::optional<Facing> side;
  if (prefer && free_at(*prefer)) {
    side = prefer;
  } else {
    for (Facing f : {Facing::up, Facing::down, Facing::right, Facing::left})
      if (free_at(f)) {
        side = f;
        break;
      }
  }
  if (!side) return {};

  double c[3], f[3];
  switch (*side) {
    case Facing::up: {
      const bool second = j + 2 < ny && !g.fixed(i, j + 1);
      for (int m = 0; m < (second ? 3 : 2); ++m) {
        c[m] = g.y[j + m];
        f[m] = phi[g.index(i, j + m)];
      }
      return {-gx_central(), -detail::d_forward(c, f, second)};
    }
    case Facing::down: {
      const bool second = j >= 2;
      for (int m = 0; m < (second ? 3 : 2); ++m) {
        c[m] = -g.y[j - m];
        f[m] = phi[g.index(i, j - m)];
      }
      return {-gx_central(), detail::d_forward(c, f, second)};
    }
    case Facing::right: {
      const bool second = i + 2 < nx;
      for (int m = 0; m < (second ? 3 : 2); ++m) {
        c[m] = g.x[i + m];
        f[m] = phi[g.index(i + m, j)];
      }
      return {-detail::d_forward(c, f, second), -gy_central()};
    }
    case Facing::left: {
      const bool second = i >= 2;
      for (int m = 0; m < (second ? 3 : 2); ++m) {
        c[m] = -g.x[i - m];
        f[m] = phi[g.index(i - m, j)];
      }
      return {detail::d_forward(c, f, second), -gy_central()};
    }
  }
  return {};
}

namespace detail {

inline void fill_node_vectors(FieldMap& m) {
  const Grid& g = *m.grid;
  m.vx.assign(g.size(), 0.0);
  m.vy.assign(g.size(), 0.0);
  for (std::size_t j = 0; j < g.ny(); ++j)
    for (std::size_t i = 0; i < g.nx(); ++i) {
      const Vec2 v = m.vector_at(i, j);
      m.vx[g.index(i, j)] = v.x;
      m.vy[g.index(i, j)] = v.y;
    }
}

}  // namespace detail

/// Potential with the signal conductor at 1 V and every other conductor at
/// 0 V. With `use_dielectric` false the whole section is vacuum. The map's
/// vectors are E = -grad(phi).
inline FieldMap solve_potential(std::shared_ptr<const Grid> grid, bool use_dielectric,
                                const SolverOptions& opts = {}) {
  FieldMap m;
  m.grid = std::move(grid);
  m.dielectric = use_dielectric;
  m.kind = FieldKind::electric;
  const Links links = assemble_links(*m.grid, use_dielectric);
  m.potential = solve_laplace(*m.grid, links, opts, m.stats);
  m.volume_integral = link_energy(*m.grid, links, m.potential);
  detail::fill_node_vectors(m);
  return m;
}

/// Induced charge on the signal conductor divided by epsilon0 (equivalently
/// the outward flux of -grad(phi) around it).
inline double signal_flux(const FieldMap& potential_map) {
  const Grid& g = *potential_map.grid;
  const Links links = assemble_links(g, potential_map.dielectric);
  const auto flux = node_flux(g, links, potential_map.potential);
  double q = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k)
    if (g.kind[k] == NodeKind::fixed && g.fixed_value[k] == 1.0) q += flux[k];
  return q;
}

/// TEM magnetic field from the air-filled potential. Normalized so that the
/// loop integral of H around the signal conductor equals `current_a`.
inline FieldMap h_field(const FieldMap& air_potential, double current_a) {
  if (air_potential.dielectric) throw DomainError("h_field needs the air-filled (vacuum) potential");
  if (current_a == 0.0 || !std::isfinite(current_a)) throw DomainError("h_field: normalization current must be non-zero");
  const double q = signal_flux(air_potential);
  FieldMap h = air_potential;
  h.kind = FieldKind::magnetic;
  h.scale = current_a / q;
  const Links unit = assemble_links(*h.grid, false);
  h.volume_integral = h.scale * h.scale * link_energy(*h.grid, unit, h.potential);
  detail::fill_node_vectors(h);
  return h;
}

namespace detail {

struct PathNodes {
  std::vector<std::size_t> i, j;
  std::vector<double> s;  // arc position of each node along the segment
};

inline PathNodes segment_nodes(const Grid& g, const Segment& seg) {
  const double tol = g.tolerance();
  PathNodes out;
  if (seg.horizontal()) {
    const auto row = g.find_y(seg.y0);
    const auto a = g.find_x(std::min(seg.x0, seg.x1));
    const auto b = g.find_x(std::max(seg.x0, seg.x1));
    if (!row || !a || !b) throw DomainError("path segment does not lie on grid lines inside the domain");
    for (std::size_t i = *a; i <= *b; ++i) {
      out.i.push_back(i);
      out.j.push_back(*row);
      out.s.push_back(g.x[i]);
    }
  } else {
    const auto col = g.find_x(seg.x0);
    const auto a = g.find_y(std::min(seg.y0, seg.y1));
    const auto b = g.find_y(std::max(seg.y0, seg.y1));
    if (!col || !a || !b) throw DomainError("path segment does not lie on grid lines inside the domain");
    for (std::size_t j = *a; j <= *b; ++j) {
      out.i.push_back(*col);
      out.j.push_back(j);
      out.s.push_back(g.y[j]);
    }
  }
  (void)tol;
  return out;
}

}  // namespace detail

/// Trapezoidal integral of |v|^2 along a region's path.
inline double path_integral_squared(const FieldMap& m, const SurfaceRegion& region) {
  region.validate();
  double sum = 0.0;
  for (const auto& seg : region.path) {
    const auto nodes = detail::segment_nodes(*m.grid, seg);
    double prev = 0.0;
    for (std::size_t k = 0; k < nodes.i.size(); ++k) {
      const double v = m.vector_at(nodes.i[k], nodes.j[k], seg.facing).norm2();
      if (k > 0) sum += 0.5 * (prev + v) * (nodes.s[k] - nodes.s[k - 1]);
      prev = v;
    }
  }
  return sum;
}

/// gamma = integral of |H|^2 over the region path / integral of |H|^2 over the
/// cross-section, in 1/m.
inline double gamma_factor(const FieldMap& h, const SurfaceRegion& region) {
  if (h.kind != FieldKind::magnetic) throw DomainError("gamma_factor needs a magnetic field map");
  if (!(h.volume_integral > 0.0)) throw DomainError("gamma_factor: field has zero energy");
  return path_integral_squared(h, region) / h.volume_integral;
}

/// Line integral of the map's vector field along a closed, axis-aligned
/// polygon whose vertices lie on grid lines. Counter-clockwise is positive.
inline double loop_integral(const FieldMap& m, const std::vector<Vec2>& vertices) {
  if (vertices.size() < 3) throw DomainError("loop needs at least three vertices");
  const Grid& g = *m.grid;
  double total = 0.0;
  for (std::size_t v = 0; v < vertices.size(); ++v) {
    const Vec2 a = vertices[v];
    const Vec2 b = vertices[(v + 1) % vertices.size()];
    if (a.x != b.x && a.y != b.y) throw DomainError("loop edges must be axis-aligned");
    const bool horizontal = a.y == b.y;
    const Segment seg{a.x, a.y, b.x, b.y, Facing::up};
    const auto nodes = detail::segment_nodes(g, seg);
    const double sign = horizontal ? (b.x > a.x ? 1.0 : -1.0) : (b.y > a.y ? 1.0 : -1.0);
    double prev = 0.0;
    for (std::size_t k = 0; k < nodes.i.size(); ++k) {
      const Vec2 f = m.vector_at(nodes.i[k], nodes.j[k]);
      const double tangential = horizontal ? f.x : f.y;
      if (k > 0) total += sign * 0.5 * (prev + tangential) * (nodes.s[k] - nodes.s[k - 1]);
      prev = tangential;
    }
  }
  return total;
}

/// Field magnitude along y = -depth.
struct Profile {
  double depth_m = 0.0;
  std::vector<double> x;
  std::vector<double> magnitude;
};

inline Profile field_profile_at_depth(const FieldMap& m, double depth_m) {
  const Grid& g = *m.grid;
  const double y = -depth_m;
  const double tol = g.tolerance();
  if (!(y >= g.y.front() - tol && y <= g.y.back() + tol) || !std::isfinite(depth_m))
    throw DomainError("profile depth lies outside the domain");
  Profile p;
  p.depth_m = depth_m;
  p.x = g.x;
  p.magnitude.resize(g.nx());
  if (const auto row = g.find_y(y)) {
    for (std::size_t i = 0; i < g.nx(); ++i) p.magnitude[i] = m.vector_at(i, *row, Facing::down).norm();
    return p;
  }
  const auto above = static_cast<std::size_t>(std::upper_bound(g.y.begin(), g.y.end(), y) - g.y.begin());
  const std::size_t below = above - 1;
  const double f = (y - g.y[below]) / (g.y[above] - g.y[below]);
  for (std::size_t i = 0; i < g.nx(); ++i) {
    const double hi = m.vector_at(i, above, Facing::down).norm();
    const double lo = m.vector_at(i, below, Facing::up).norm();
    p.magnitude[i] = lo + f * (hi - lo);
  }
  return p;
}

/// Full width at half maximum with linear interpolation between samples.
/// Uses the outermost half-maximum crossings.
inline double fwhm(const std::vector<double>& x, const std::vector<double>& v) {
  if (x.size() != v.size() || x.size() < 3) throw DomainError("fwhm: need at least three matching samples");
  const auto peak = static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
  const double half = 0.5 * v[peak];
  if (!(v[peak] > 0.0)) throw DomainError("fwhm: profile has no positive peak");
  std::size_t lo = 0;
  while (lo < v.size() && v[lo] < half) ++lo;
  std::size_t hi = v.size() - 1;
  while (hi > 0 && v[hi] < half) --hi;
  if (lo == 0 || hi + 1 == v.size()) throw DomainError("fwhm: profile does not fall to half maximum on both sides");
  auto cross = [&](std::size_t a, std::size_t b) {
    return x[a] + (half - v[a]) * (x[b] - x[a]) / (v[b] - v[a]);
  };
  return cross(hi, hi + 1) - cross(lo - 1, lo);
}

inline double fwhm(const Profile& p) { return fwhm(p.x, p.magnitude); }

/// Integral of eps_r |E|^2 dA using exact bilinear interpolation in each cell.
/// Independent of the finite-volume energy used for capacitances.
inline double bilinear_field_energy(const FieldMap& m) {
  const Grid& g = *m.grid;
  double sum = 0.0;
  for (std::size_t j = 0; j + 1 < g.ny(); ++j)
    for (std::size_t i = 0; i + 1 < g.nx(); ++i) {
      const double dx = g.x[i + 1] - g.x[i], dy = g.y[j + 1] - g.y[j];
      const double p00 = m.potential[g.index(i, j)], p10 = m.potential[g.index(i + 1, j)];
      const double p01 = m.potential[g.index(i, j + 1)], p11 = m.potential[g.index(i + 1, j + 1)];
      const double a = p10 - p00, b = p11 - p01, c = p01 - p00, d = p11 - p10;
      const double eps = m.dielectric ? g.cell_eps[g.cell(i, j)] : 1.0;
      sum += eps * ((dy / dx) * (a * a + a * b + b * b) / 3.0 + (dx / dy) * (c * c + c * d + d * d) / 3.0);
    }
  return m.scale * m.scale * sum;
}

struct CrossSectionSolution {
  std::shared_ptr<const Grid> grid;
  FieldMap air;                     // vacuum-filled potential
  std::optional<FieldMap> dielectric;
};

inline CrossSectionSolution solve_cross_section(const CrossSection& xs, const GridSpec& spec, bool with_dielectric,
                                                const SolverOptions& opts = {}) {
  auto grid = std::make_shared<const Grid>(build_grid(xs, spec));
  CrossSectionSolution sol{grid, solve_potential(grid, false, opts), std::nullopt};
  if (with_dielectric) sol.dielectric = solve_potential(grid, true, opts);
  return sol;
}

struct LineParams {
  double c_per_length = 0.0;      // F/m
  double c_air_per_length = 0.0;  // F/m
  double eps_eff = 0.0;
  double z0_ohm = 0.0;
  std::size_t nodes = 0;
};

inline LineParams line_params(const FieldMap& air, const FieldMap& diel) {
  if (air.dielectric || !diel.dielectric) throw DomainError("line_params needs an air and a dielectric solve");
  constexpr double eps0 = PhysicalConstants::epsilon0;
  LineParams lp;
  // unit potential difference: energy integral = C / eps0
  lp.c_air_per_length = eps0 * air.volume_integral / (air.scale * air.scale);
  lp.c_per_length = eps0 * diel.volume_integral / (diel.scale * diel.scale);
  lp.eps_eff = lp.c_per_length / lp.c_air_per_length;
  lp.z0_ohm = 1.0 / (PhysicalConstants::speed_of_light * std::sqrt(lp.c_per_length * lp.c_air_per_length));
  lp.nodes = air.grid->size();
  return lp;
}

inline LineParams line_params(const CrossSection& xs, const GridSpec& spec, const SolverOptions& opts = {}) {
  const auto sol = solve_cross_section(xs, spec, true, opts);
  return line_params(sol.air, *sol.dielectric);
}

/// Participation of a thin layer under the CPW metal (metal-substrate
/// interface), from the field just below the conductors. The layer's normal
/// field is eps_sub/eps_layer times the substrate field; the tangential field
/// vanishes on the metal. This is an order-of-magnitude estimate: with
/// zero-thickness conductors the edge integrand is cut off by the grid.
inline double surface_participation(const FieldMap& e, double layer_thickness_m, double layer_eps_r) {
  if (!e.dielectric || e.kind != FieldKind::electric)
    throw DomainError("surface participation needs the dielectric electric-field solve");
  pkgloss::detail::require_positive(layer_thickness_m, "layer thickness");
  if (!(layer_eps_r >= 1.0)) throw DomainError("layer permittivity must be >= 1");
  const Grid& g = *e.grid;
  const std::size_t row = g.cpw_row;
  if (row == 0) throw DomainError("CPW plane lies on the domain bottom");
  const double spacing = g.y[row] - g.y[row - 1];
  if (!(layer_thickness_m < spacing))
    throw DomainError("layer thickness must be smaller than the grid spacing at the interface");

  double sum = 0.0;
  for (std::size_t i = 1; i + 1 < g.nx(); ++i) {
    if (!g.fixed(i, row)) continue;
    const double eps_left = g.cell_eps[g.cell(i - 1, row - 1)];
    const double eps_right = g.cell_eps[g.cell(i, row - 1)];
    const double eps_sub = std::max(eps_left, eps_right);
    if (eps_sub <= 1.0 || g.fixed(i, row - 1)) continue;
    const double en = e.vector_at(i, row, Facing::down).y;
    const double w = 0.5 * (g.x[i + 1] - g.x[i - 1]);
    sum += w * (eps_sub * eps_sub / layer_eps_r) * en * en;
  }
  return layer_thickness_m * sum / e.volume_integral;
}

inline double surface_dielectric_loss(const FieldMap& e, double layer_thickness_m, double layer_eps_r,
                                      double tan_delta) {
  pkgloss::detail::require_non_negative(tan_delta, "loss tangent");
  return tan_delta * surface_participation(e, layer_thickness_m, layer_eps_r);
}

/// Air solve, H normalized to 1 A, and gamma for every named region of `xs`.
struct PackageFields {
  CrossSectionSolution solution;
  FieldMap h;
  std::map<std::string, double> gamma;  // region -> 1/m
};

inline PackageFields solve_package(const CrossSection& xs, const GridSpec& spec, bool with_dielectric = false,
                                   const SolverOptions& opts = {}) {
  auto sol = solve_cross_section(xs, spec, with_dielectric, opts);
  FieldMap h = h_field(sol.air, 1.0);
  PackageFields out{std::move(sol), std::move(h), {}};
  for (const auto& r : xs.surface_regions) out.gamma[r.name] = gamma_factor(out.h, r);
  return out;
}

}  // namespace pkgloss::field
