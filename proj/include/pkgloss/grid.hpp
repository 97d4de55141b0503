#pragma once

// Graded tensor-product grid for a cross-section.
//
// Spacing grows geometrically away from the trace: cells are at most
// `fine_spacing` across the trace and gaps, `fine_spacing/edge_refinement`
// at the four conductor edges, and never larger than `max_spacing`. Every
// material interface and region endpoint falls on a grid line.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "pkgloss/errors.hpp"
#include "pkgloss/geometry.hpp"

namespace pkgloss::field {

struct GridSpec {
  double fine_spacing_m = 0.0;
  double edge_refinement = 4.0;
  double growth = 1.15;
  double max_spacing_m = 25e-6;

  /// Same grading with every cell divided by `factor`.
  GridSpec refined(double factor) const {
    GridSpec s = *this;
    s.fine_spacing_m /= factor;
    s.max_spacing_m /= factor;
    s.growth = 1.0 + (growth - 1.0) / factor;
    return s;
  }

  static GridSpec for_design(const ResonatorDesign& d, double cells_per_gap = 16.0,
                             double max_spacing_m = 25e-6) {
    GridSpec s;
    s.fine_spacing_m = d.gap_m / cells_per_gap;
    s.max_spacing_m = max_spacing_m;
    return s;
  }

  void validate() const {
    pkgloss::detail::require_positive(fine_spacing_m, "grid fine spacing");
    pkgloss::detail::require_positive(max_spacing_m, "grid max spacing");
    if (!(edge_refinement >= 1.0)) throw ConfigError("edge refinement must be >= 1", "resolution.edge_refinement");
    if (!(growth > 1.0 && growth < 2.0)) throw ConfigError("growth ratio must lie in (1, 2)", "resolution.growth");
    if (max_spacing_m < fine_spacing_m)
      throw ConfigError("max spacing must not be smaller than the fine spacing", "resolution.max_spacing_m");
  }
};

enum class NodeKind : std::uint8_t { free, fixed };

struct Grid {
  std::vector<double> x, y;
  std::vector<NodeKind> kind;
  std::vector<double> fixed_value;
  std::vector<double> cell_eps;  // (nx-1)*(ny-1), relative permittivity per cell
  std::size_t cpw_row = 0;       // index of y = 0
  double substrate_epsilon_r = 1.0;

  std::size_t nx() const { return x.size(); }
  std::size_t ny() const { return y.size(); }
  std::size_t size() const { return x.size() * y.size(); }
  std::size_t index(std::size_t i, std::size_t j) const { return j * x.size() + i; }
  std::size_t cell(std::size_t i, std::size_t j) const { return j * (x.size() - 1) + i; }
  bool fixed(std::size_t i, std::size_t j) const { return kind[index(i, j)] == NodeKind::fixed; }
  double tolerance() const { return 1e-9 * std::max(x.back() - x.front(), y.back() - y.front()); }

  static std::optional<std::size_t> find_line(const std::vector<double>& axis, double v, double tol) {
    const auto it = std::lower_bound(axis.begin(), axis.end(), v - tol);
    if (it != axis.end() && std::abs(*it - v) <= tol) return static_cast<std::size_t>(it - axis.begin());
    return std::nullopt;
  }
  std::optional<std::size_t> find_x(double v) const { return find_line(x, v, tolerance()); }
  std::optional<std::size_t> find_y(double v) const { return find_line(y, v, tolerance()); }

  double min_spacing_x() const {
    double m = x[1] - x[0];
    for (std::size_t i = 1; i + 1 < x.size(); ++i) m = std::min(m, x[i + 1] - x[i]);
    return m;
  }
};

namespace detail {

inline double distance_to_set(double p, const std::vector<double>& pts) {
  double d = std::numeric_limits<double>::infinity();
  for (double q : pts) d = std::min(d, std::abs(p - q));
  return d;
}

struct Spacing {
  double fine, edge, growth, max;
  double zone_lo, zone_hi;  // uniform-fine interval
  std::vector<double> edges;

  double operator()(double p) const {
    const double dz = p < zone_lo ? zone_lo - p : (p > zone_hi ? p - zone_hi : 0.0);
    double s = std::min(max, fine + (growth - 1.0) * dz);
    if (!edges.empty()) s = std::min(s, edge + (growth - 1.0) * distance_to_set(p, edges));
    return s;
  }
};

/// Places nodes between sorted key points so that local cell size follows `spacing`.
inline std::vector<double> graded_axis(std::vector<double> keys, const Spacing& spacing, double tol) {
  std::sort(keys.begin(), keys.end());
  std::vector<double> uniq;
  for (double k : keys)
    if (uniq.empty() || k - uniq.back() > tol) uniq.push_back(k);

  std::vector<double> nodes{uniq.front()};
  std::vector<double> pos, cum;
  for (std::size_t k = 0; k + 1 < uniq.size(); ++k) {
    const double a = uniq[k], b = uniq[k + 1];
    pos.assign(1, a);
    cum.assign(1, 0.0);
    double p = a, n = 0.0;
    while (p < b) {
      const double step = std::min(spacing(p) / 16.0, b - p);
      n += step / spacing(p + 0.5 * step);
      p = (b - p - step <= 1e-3 * step) ? b : p + step;
      pos.push_back(p);
      cum.push_back(n);
    }
    const auto cells = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(n - 1e-9)));
    std::size_t m = 0;
    for (std::size_t c = 1; c < cells; ++c) {
      const double target = n * static_cast<double>(c) / static_cast<double>(cells);
      while (cum[m + 1] < target) ++m;
      const double f = (target - cum[m]) / (cum[m + 1] - cum[m]);
      nodes.push_back(pos[m] + f * (pos[m + 1] - pos[m]));
    }
    nodes.push_back(b);
  }
  return nodes;
}

}  // namespace detail

/// Discretizes `xs`. Throws ConfigError if the CPW gap is not resolved by at
/// least eight cells.
inline Grid build_grid(const CrossSection& xs, const GridSpec& spec) {
  xs.validate();
  spec.validate();
  const double g = xs.trace.gap_m;
  if (spec.fine_spacing_m > g / 8.0)
    throw ConfigError("grid spacing " + std::to_string(spec.fine_spacing_m) +
                          " m does not resolve the CPW gap g = " + std::to_string(g) + " m with 8 cells",
                      "resolution.fine_spacing_m");

  const double a = 0.5 * xs.trace.width_m;
  const double b = a + g;
  const double tol = 1e-9 * std::max(xs.domain_width_m, xs.lid_height_m - xs.bottom_y());
  const double edge = spec.fine_spacing_m / spec.edge_refinement;

  std::vector<double> xkeys = xs.interface_columns();
  std::vector<double> ykeys = xs.interface_rows();
  for (const auto& r : xs.surface_regions)
    for (const auto& s : r.path) {
      xkeys.push_back(s.x0);
      xkeys.push_back(s.x1);
      ykeys.push_back(s.y0);
      ykeys.push_back(s.y1);
    }
  std::erase_if(xkeys, [&](double v) { return std::abs(v) > xs.half_width() + tol; });
  std::erase_if(ykeys, [&](double v) { return v < xs.bottom_y() - tol || v > xs.lid_height_m + tol; });

  Grid grid;
  grid.x = detail::graded_axis(
      xkeys, detail::Spacing{spec.fine_spacing_m, edge, spec.growth, spec.max_spacing_m, -b, b, {-b, -a, a, b}},
      tol);
  grid.y = detail::graded_axis(
      ykeys, detail::Spacing{spec.fine_spacing_m, edge, spec.growth, spec.max_spacing_m, 0.0, 0.0, {0.0}}, tol);

  const auto gap_lo = grid.find_x(a), gap_hi = grid.find_x(b);
  if (!gap_lo || !gap_hi || *gap_hi - *gap_lo < 8)
    throw ConfigError("CPW gap resolved by fewer than 8 cells", "resolution.fine_spacing_m");

  const std::size_t nx = grid.nx(), ny = grid.ny();
  grid.kind.assign(nx * ny, NodeKind::free);
  grid.fixed_value.assign(nx * ny, 0.0);
  grid.cpw_row = *grid.find_y(0.0);
  grid.substrate_epsilon_r = xs.substrate_epsilon_r;

  const double t = xs.substrate_thickness_m;
  const double ch = xs.chip_half();
  const double pe = xs.pcb_edge();
  const bool pcb = xs.pcb_present();
  const auto* hole = xs.hole();
  for (std::size_t j = 0; j < ny; ++j) {
    const double yj = grid.y[j];
    for (std::size_t i = 0; i < nx; ++i) {
      const double xi = grid.x[i], ax = std::abs(xi);
      const std::size_t n = grid.index(i, j);
      bool fixed = i == 0 || j == 0 || i + 1 == nx || j + 1 == ny;
      double value = 0.0;
      if (j == grid.cpw_row) {
        if (ax <= a + tol) {
          fixed = true;
          value = 1.0;
        } else if (ax >= b - tol && ax <= ch + tol) {
          fixed = true;
        }
      }
      if (pcb && ax >= pe - tol && yj >= -t - tol && yj <= tol) fixed = true;
      if (hole && yj <= -t + tol && ax >= 0.5 * hole->width_m - tol) fixed = true;
      if (fixed) {
        grid.kind[n] = NodeKind::fixed;
        grid.fixed_value[n] = value;
      }
    }
  }

  grid.cell_eps.assign((nx - 1) * (ny - 1), 1.0);
  for (std::size_t j = 0; j + 1 < ny; ++j) {
    const double yc = 0.5 * (grid.y[j] + grid.y[j + 1]);
    if (!(yc < 0.0 && yc > -t)) continue;
    for (std::size_t i = 0; i + 1 < nx; ++i) {
      const double xc = 0.5 * (grid.x[i] + grid.x[i + 1]);
      if (std::abs(xc) < ch) grid.cell_eps[grid.cell(i, j)] = xs.substrate_epsilon_r;
    }
  }
  return grid;
}

}  // namespace pkgloss::field
