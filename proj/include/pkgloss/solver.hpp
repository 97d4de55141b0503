#pragma once

// Node-centred finite-volume discretization of div(eps grad phi) = 0 on a
// Grid, solved by conjugate gradients with a modified incomplete Cholesky
// (MIC(0)) preconditioner. All loops run in a fixed order, so results are
// bitwise reproducible.

#include <cmath>
#include <vector>

#include "pkgloss/errors.hpp"
#include "pkgloss/grid.hpp"

namespace pkgloss::field {

struct SolverOptions {
  double relative_tolerance = 1e-8;
  int max_iterations = 1'000'000;
};

struct SolveStats {
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Conductances of the 5-point stencil. east[n] couples node n to its +x
/// neighbour, north[n] to its +y neighbour. The energy of a potential is
/// sum(a * dphi^2) over all links.
struct Links {
  std::vector<double> east, north;
};

inline Links assemble_links(const Grid& grid, bool use_dielectric) {
  const std::size_t nx = grid.nx(), ny = grid.ny();
  auto eps = [&](std::size_t ci, std::size_t cj) {
    return use_dielectric ? grid.cell_eps[grid.cell(ci, cj)] : 1.0;
  };
  Links links;
  links.east.assign(nx * ny, 0.0);
  links.north.assign(nx * ny, 0.0);
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      const std::size_t n = grid.index(i, j);
      if (i + 1 < nx) {
        const double dx = grid.x[i + 1] - grid.x[i];
        double face = 0.0;
        if (j > 0) face += 0.5 * (grid.y[j] - grid.y[j - 1]) * eps(i, j - 1);
        if (j + 1 < ny) face += 0.5 * (grid.y[j + 1] - grid.y[j]) * eps(i, j);
        links.east[n] = face / dx;
      }
      if (j + 1 < ny) {
        const double dy = grid.y[j + 1] - grid.y[j];
        double face = 0.0;
        if (i > 0) face += 0.5 * (grid.x[i] - grid.x[i - 1]) * eps(i - 1, j);
        if (i + 1 < nx) face += 0.5 * (grid.x[i + 1] - grid.x[i]) * eps(i, j);
        links.north[n] = face / dy;
      }
    }
  }
  return links;
}

/// Discrete energy integral  sum over links of a * (phi_a - phi_b)^2,
/// i.e. the integral of eps |grad phi|^2 over the domain.
inline double link_energy(const Grid& grid, const Links& links, const std::vector<double>& phi) {
  const std::size_t nx = grid.nx(), ny = grid.ny();
  double sum = 0.0;
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      const std::size_t n = grid.index(i, j);
      if (i + 1 < nx) {
        const double d = phi[n + 1] - phi[n];
        sum += links.east[n] * d * d;
      }
      if (j + 1 < ny) {
        const double d = phi[n + nx] - phi[n];
        sum += links.north[n] * d * d;
      }
    }
  }
  return sum;
}

/// Net outward flux (A phi)_n of every node. Zero at converged free nodes;
/// at conductor nodes it is the induced charge divided by epsilon0.
inline std::vector<double> node_flux(const Grid& grid, const Links& links, const std::vector<double>& phi) {
  const std::size_t nx = grid.nx(), ny = grid.ny();
  std::vector<double> out(grid.size(), 0.0);
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      const std::size_t n = grid.index(i, j);
      if (i + 1 < nx) {
        const double f = links.east[n] * (phi[n] - phi[n + 1]);
        out[n] += f;
        out[n + 1] -= f;
      }
      if (j + 1 < ny) {
        const double f = links.north[n] * (phi[n] - phi[n + nx]);
        out[n] += f;
        out[n + nx] -= f;
      }
    }
  }
  return out;
}

namespace detail {

class MicPcg {
 public:
  MicPcg(const Grid& grid, const Links& links) : grid_(grid), links_(links) {
    const std::size_t nx = grid.nx(), ny = grid.ny(), n = grid.size();
    free_.assign(n, 0);
    diag_.assign(n, 0.0);
    for (std::size_t j = 0; j < ny; ++j)
      for (std::size_t i = 0; i < nx; ++i) {
        const std::size_t k = grid.index(i, j);
        if (grid.kind[k] != NodeKind::free) continue;
        free_[k] = 1;
        // boundary nodes are always fixed, so all four neighbours exist
        diag_[k] = links.east[k] + links.east[k - 1] + links.north[k] + links.north[k - nx];
      }
    build_preconditioner();
  }

  std::vector<double> solve(const SolverOptions& opts, SolveStats& stats) const {
    const std::size_t nx = grid_.nx(), n = grid_.size();
    std::vector<double> b(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      if (!free_[k]) continue;
      const auto& v = grid_.fixed_value;
      double s = 0.0;
      if (!free_[k + 1]) s += links_.east[k] * v[k + 1];
      if (!free_[k - 1]) s += links_.east[k - 1] * v[k - 1];
      if (!free_[k + nx]) s += links_.north[k] * v[k + nx];
      if (!free_[k - nx]) s += links_.north[k - nx] * v[k - nx];
      b[k] = s;
    }
    std::vector<double> x(n, 0.0), r = b, z(n, 0.0), p(n, 0.0), q(n, 0.0);
    const double bnorm = std::sqrt(dot(b, b));
    stats = {};
    if (bnorm == 0.0) return assemble(x);

    apply_preconditioner(r, z);
    p = z;
    double rz = dot(r, z);
    double rel = 1.0;
    int it = 0;
    while (it < opts.max_iterations) {
      apply_operator(p, q);
      const double alpha = rz / dot(p, q);
      for (std::size_t k = 0; k < n; ++k) {
        x[k] += alpha * p[k];
        r[k] -= alpha * q[k];
      }
      ++it;
      rel = std::sqrt(dot(r, r)) / bnorm;
      if (rel <= opts.relative_tolerance) break;
      apply_preconditioner(r, z);
      const double rz_new = dot(r, z);
      const double beta = rz_new / rz;
      rz = rz_new;
      for (std::size_t k = 0; k < n; ++k) p[k] = z[k] + beta * p[k];
    }
    // confirm against the true residual, not the recurrence
    apply_operator(x, q);
    double rr = 0.0;
    for (std::size_t k = 0; k < n; ++k)
      if (free_[k]) rr += (b[k] - q[k]) * (b[k] - q[k]);
    stats.iterations = it;
    stats.relative_residual = std::sqrt(rr) / bnorm;
    if (!(stats.relative_residual <= 10.0 * opts.relative_tolerance) || !(rel <= opts.relative_tolerance))
      throw SolverError("Laplace solve did not converge", stats.relative_residual, it);
    return assemble(x);
  }

 private:
  static double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
  }

  std::vector<double> assemble(std::vector<double> x) const {
    for (std::size_t k = 0; k < x.size(); ++k)
      if (!free_[k]) x[k] = grid_.fixed_value[k];
    return x;
  }

  void apply_operator(const std::vector<double>& v, std::vector<double>& out) const {
    const std::size_t nx = grid_.nx(), n = grid_.size();
    const auto& e = links_.east;
    const auto& nn = links_.north;
    for (std::size_t k = 0; k < n; ++k) {
      if (!free_[k]) {
        out[k] = 0.0;
        continue;
      }
      // v is zero on fixed nodes
      out[k] = diag_[k] * v[k] - e[k] * v[k + 1] - e[k - 1] * v[k - 1] - nn[k] * v[k + nx] -
               nn[k - nx] * v[k - nx];
    }
  }

  void build_preconditioner() {
    constexpr double tau = 0.97;
    constexpr double sigma = 0.25;
    const std::size_t nx = grid_.nx(), n = grid_.size();
    const auto& e = links_.east;
    const auto& nn = links_.north;
    precon_.assign(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      if (!free_[k]) continue;
      double d = diag_[k];
      const std::size_t w = k - 1, s = k - nx;
      if (free_[w]) {
        const double aw = e[w] * precon_[w];
        const double north_of_w = free_[w + nx] ? nn[w] : 0.0;
        d -= aw * aw + tau * e[w] * north_of_w * precon_[w] * precon_[w];
      }
      if (free_[s]) {
        const double as = nn[s] * precon_[s];
        const double east_of_s = free_[s + 1] ? e[s] : 0.0;
        d -= as * as + tau * nn[s] * east_of_s * precon_[s] * precon_[s];
      }
      if (d < sigma * diag_[k]) d = diag_[k];
      precon_[k] = 1.0 / std::sqrt(d);
    }
  }

  void apply_preconditioner(const std::vector<double>& r, std::vector<double>& z) const {
    const std::size_t nx = grid_.nx(), n = grid_.size();
    const auto& e = links_.east;
    const auto& nn = links_.north;
    std::vector<double>& q = scratch_;
    q.assign(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      if (!free_[k]) continue;
      double t = r[k];
      const std::size_t w = k - 1, s = k - nx;
      if (free_[w]) t += e[w] * precon_[w] * q[w];
      if (free_[s]) t += nn[s] * precon_[s] * q[s];
      q[k] = t * precon_[k];
    }
    for (std::size_t k = n; k-- > 0;) {
      if (!free_[k]) {
        z[k] = 0.0;
        continue;
      }
      double t = q[k];
      if (free_[k + 1]) t += e[k] * precon_[k] * z[k + 1];
      if (free_[k + nx]) t += nn[k] * precon_[k] * z[k + nx];
      z[k] = t * precon_[k];
    }
  }

  const Grid& grid_;
  const Links& links_;
  std::vector<unsigned char> free_;
  std::vector<double> diag_, precon_;
  mutable std::vector<double> scratch_;
};

}  // namespace detail

/// Solves for the node potentials with every fixed node at its prescribed value.
inline std::vector<double> solve_laplace(const Grid& grid, const Links& links, const SolverOptions& opts,
                                         SolveStats& stats) {
  return detail::MicPcg(grid, links).solve(opts, stats);
}

}  // namespace pkgloss::field
