#include <catch_amalgamated.hpp>

#include <cmath>

#include "pkgloss/fields.hpp"

using namespace pkgloss;
using namespace pkgloss::field;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const ResonatorDesign r3{"R3", 10e-6, 5e-6, 5.4e9, 310e3};

// w = 10 um, g = 5 um on eps 10.8. Substrate and lid differ so the air and
// dielectric halves are not mirror images.
CrossSection wide_cpw() { return make_wide_ground_cpw(10e-6, 5e-6, 10.8, 1e-3, 2e-3, 0.7e-3); }

GridSpec cpw_spec() {
  GridSpec s;
  s.fine_spacing_m = 5e-6 / 16.0;
  s.max_spacing_m = 25e-6;
  return s;
}

// nearest grid line to v
double snap(const std::vector<double>& axis, double v) {
  return *std::min_element(axis.begin(), axis.end(),
                           [&](double a, double b) { return std::abs(a - v) < std::abs(b - v); });
}

}  // namespace

TEST_CASE("graded grid keeps geometry lines and bounded growth") {
  const auto xs = make_package(PackageVariant::cu_solid, r3);
  const auto spec = GridSpec::for_design(r3);
  const Grid g = build_grid(xs, spec);
  for (double x : {-10e-6, -5e-6, 5e-6, 10e-6, -2.5e-3, 2.5e-3, -2.6e-3, 2.6e-3}) CHECK(g.find_x(x));
  for (double y : {0.0, -0.43e-3, 2e-3}) CHECK(g.find_y(y));
  for (const auto* axis : {&g.x, &g.y}) {
    for (std::size_t k = 0; k + 1 < axis->size(); ++k) {
      const double h = (*axis)[k + 1] - (*axis)[k];
      CHECK(h > 0.0);
      CHECK(h <= spec.max_spacing_m * 1.0001);
    }
  }
  // the gap is resolved
  const auto a = *g.find_x(5e-6), b = *g.find_x(10e-6);
  CHECK(b - a >= 16);
}

TEST_CASE("under-resolved gaps are rejected") {
  auto spec = GridSpec::for_design(r3, 4.0);
  CHECK_THROWS_AS(build_grid(make_package(PackageVariant::cu_solid, r3), spec), ConfigError);
}

TEST_CASE("wide-ground CPW matches the conformal impedance on a coarse grid") {
  // conformal value with eps_eff = (1 + 10.8) / 2: 49.63688 ohm (mpmath)
  const auto lp = line_params(wide_cpw(), cpw_spec());
  CHECK_THAT(lp.z0_ohm, WithinRel(49.6368800085555707, 0.02));
  CHECK_THAT(lp.eps_eff, WithinRel(5.9, 0.02));
  CHECK(lp.c_per_length > lp.c_air_per_length);
}

TEST_CASE("finite-volume and bilinear energies agree") {
  const auto sol = solve_cross_section(wide_cpw(), cpw_spec(), true);
  CHECK_THAT(bilinear_field_energy(sol.air) / sol.air.volume_integral, WithinRel(1.0, 0.01));
  CHECK_THAT(bilinear_field_energy(*sol.dielectric) / sol.dielectric->volume_integral, WithinRel(1.0, 0.01));
}

TEST_CASE("loop integral of H around the centre conductor equals the current") {
  const auto sol = solve_cross_section(make_package(PackageVariant::cu_solid, r3), GridSpec::for_design(r3), false);
  const Grid& g = *sol.grid;
  for (double current : {1.0, 0.25}) {
    const FieldMap h = h_field(sol.air, current);
    const double x0 = snap(g.x, -7.5e-6), x1 = snap(g.x, 7.5e-6);
    const double y0 = snap(g.y, -3e-6), y1 = snap(g.y, 3e-6);
    const double loop = loop_integral(h, {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}});
    CHECK_THAT(loop, WithinRel(current, 0.01));
  }
}

TEST_CASE("Gauss law: flux of E around the signal equals the induced charge") {
  const auto sol = solve_cross_section(wide_cpw(), cpw_spec(), false);
  const Grid& g = *sol.grid;
  const double x0 = snap(g.x, -7.5e-6), x1 = snap(g.x, 7.5e-6);
  const double y0 = snap(g.y, -3e-6), y1 = snap(g.y, 3e-6);
  // rotating E by 90 degrees turns its outward flux into a circulation
  FieldMap rotated = sol.air;
  rotated.kind = FieldKind::magnetic;
  const double circ = loop_integral(rotated, {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}});
  CHECK_THAT(circ, WithinRel(signal_flux(sol.air), 0.02));
}

TEST_CASE("gamma is non-negative and independent of the normalization current") {
  const auto xs = make_package(PackageVariant::cu_solid, r3);
  const auto pf = solve_package(xs, GridSpec::for_design(r3));
  for (const auto& [name, g] : pf.gamma) CHECK(g >= 0.0);
  const FieldMap h2 = h_field(pf.solution.air, 3.0);
  for (const auto& r : xs.surface_regions) CHECK_THAT(gamma_factor(h2, r), WithinRel(pf.gamma.at(r.name), 1e-10));
  // gamma per region scales with path length and field; a sub-path never exceeds the whole
  CHECK(pf.gamma.at("under_chip") <= pf.gamma.at("base") * (1 + 1e-12));
}

TEST_CASE("field profile is mirror symmetric about the centre line") {
  const auto pf = solve_package(make_package(PackageVariant::cu_solid, r3), GridSpec::for_design(r3));
  const auto p = field_profile_at_depth(pf.h, 0.43e-3);
  const std::size_t n = p.x.size();
  const double peak = *std::max_element(p.magnitude.begin(), p.magnitude.end());
  for (std::size_t k = 0; k < n; ++k) {
    REQUIRE_THAT(p.x[k], WithinAbs(-p.x[n - 1 - k], 1e-9));
    // limited by the iterative solve, not the geometry
    CHECK_THAT(p.magnitude[k], WithinAbs(p.magnitude[n - 1 - k], 1e-4 * peak));
  }
}

TEST_CASE("hole under the chip lowers the mounting-plane gamma") {
  const auto spec = GridSpec::for_design(r3);
  const auto solid = solve_package(make_package(PackageVariant::cu_solid, r3), spec);
  const auto hole = solve_package(make_package(PackageVariant::cu_hole, r3), spec);
  CHECK(hole.gamma.at("substrate_bottom") < solid.gamma.at("substrate_bottom"));
  CHECK(hole.gamma.at("under_chip") < solid.gamma.at("under_chip"));
}

TEST_CASE("fwhm of analytic profiles") {
  std::vector<double> x, gauss, lorentz;
  const double sigma = 1.3, hwhm = 0.7;
  for (int k = -4000; k <= 4000; ++k) {
    const double v = k * 0.005;
    x.push_back(v);
    gauss.push_back(std::exp(-v * v / (2 * sigma * sigma)));
    lorentz.push_back(1.0 / (1.0 + (v / hwhm) * (v / hwhm)));
  }
  CHECK_THAT(fwhm(x, gauss), WithinRel(2.0 * std::sqrt(2.0 * std::log(2.0)) * sigma, 1e-5));
  CHECK_THAT(fwhm(x, lorentz), WithinRel(2.0 * hwhm, 1e-5));
  CHECK_THROWS_AS(fwhm({0.0, 1.0, 2.0}, {1.0, 1.0, 1.0}), DomainError);
}

TEST_CASE("solver reports non-convergence") {
  SolverOptions opt;
  opt.max_iterations = 2;
  CHECK_THROWS_AS(solve_cross_section(wide_cpw(), cpw_spec(), false, opt), SolverError);
}

TEST_CASE("surface layer thicker than the interface cell is rejected") {
  const auto sol = solve_cross_section(wide_cpw(), cpw_spec(), true);
  CHECK_THROWS_AS(surface_participation(*sol.dielectric, 1e-3, 10.0), DomainError);
  CHECK_THROWS_AS(surface_participation(sol.air, 3e-9, 10.0), DomainError);
  const double p = surface_participation(*sol.dielectric, 3e-9, 10.0);
  CHECK(p > 0.0);
  CHECK(p < 1.0);
  CHECK_THAT(surface_dielectric_loss(*sol.dielectric, 3e-9, 10.0, 2e-3), WithinRel(2e-3 * p, 1e-12));
}
