#include <catch_amalgamated.hpp>

#include <cmath>

#include "pkgloss/materials.hpp"

using namespace pkgloss;
using namespace pkgloss::materials;
using Catch::Matchers::WithinRel;

TEST_CASE("skin depth and surface resistance match the closed form") {
  // mpmath, 30 digits
  CHECK_THAT(skin_depth(1.7e-8, 1e9), WithinRel(2.07512657504432524e-6, 1e-12));
  CHECK_THAT(surface_resistance(1.7e-8, 1e9), WithinRel(8.19227135560965748e-3, 1e-12));
  CHECK_THAT(surface_resistance(0.6e-8, 5.8e9), WithinRel(1.17211302073628067e-2, 1e-12));
  CHECK_THAT(surface_resistance(630e-8, 5.8e9), WithinRel(0.379808027830969518, 1e-12));
  CHECK_THAT(rs_loss_ratio(630e-8, 5.6e9), WithinRel(8.44046546167547717e-6, 1e-12));
}

TEST_CASE("rs_loss_ratio scales as sqrt(rho) and 1/sqrt(f)") {
  const double base = rs_loss_ratio(1e-8, 5.6e9);
  CHECK_THAT(base / std::sqrt(1e-8), WithinRel(3.36276193196445379e-3, 1e-12));
  for (double k : {0.01, 0.3, 4.0, 250.0}) {
    CHECK_THAT(rs_loss_ratio(k * 1e-8, 5.6e9), WithinRel(std::sqrt(k) * base, 1e-12));
    CHECK_THAT(rs_loss_ratio(1e-8, k * 5.6e9), WithinRel(base / std::sqrt(k), 1e-12));
  }
}

TEST_CASE("surface resistance is monotone in resistivity and frequency") {
  double prev = 0.0;
  for (double rho = 1e-10; rho < 1e-4; rho *= 3.7) {
    const double rs = surface_resistance(rho, 5e9);
    CHECK(rs > prev);
    prev = rs;
  }
  prev = 0.0;
  for (double f = 1e6; f < 1e12; f *= 2.9) {
    const double rs = surface_resistance(1e-8, f);
    CHECK(rs > prev);
    prev = rs;
  }
}

TEST_CASE("superconductors have zero surface resistance") {
  CHECK(surface_resistance(defaults::aluminum(), 5e9) == 0.0);
  CHECK(rs_loss_ratio(defaults::aluminum(), 5e9) == 0.0);
  CHECK(defaults::aluminum().is_superconductor());
}

TEST_CASE("invalid arguments raise DomainError") {
  CHECK_THROWS_AS(skin_depth(-1e-8, 1e9), DomainError);
  CHECK_THROWS_AS(skin_depth(1e-8, 0.0), DomainError);
  CHECK_THROWS_AS(surface_resistance(-1e-8, 1e9), DomainError);
  CHECK_THROWS_AS(surface_resistance(1e-8, -1.0), DomainError);
  CHECK_THROWS_AS(surface_resistance(std::nan(""), 1e9), DomainError);
  CHECK_THROWS_AS(rs_loss_ratio(1e-8, INFINITY), DomainError);
}

TEST_CASE("material blocks parse from ini text") {
  const auto mats = parse_materials(io::parse_ini(R"(
[material]
name = brass
resistivity_ohm_m = 3e-8
temperature_k = 4

[material]
name = niobium
resistivity_ohm_m = none
)"));
  REQUIRE(mats.size() == 2);
  CHECK(mats[0].name == "brass");
  CHECK(*mats[0].resistivity_ohm_m == 3e-8);
  CHECK(mats[0].reference_temperature_k == 4.0);
  CHECK(mats[1].is_superconductor());
}

TEST_CASE("bad material blocks report key and line") {
  try {
    parse_materials(io::parse_ini("[material]\nname = x\nresistivity = 1\n"));
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.key() == "material.resistivity");
    CHECK(e.line() == 3);
  }
  CHECK_THROWS_AS(parse_materials(io::parse_ini("[material]\nresistivity_ohm_m = 1e-8\n")), ConfigError);
  CHECK_THROWS_AS(parse_materials(io::parse_ini("[material]\nname = x\nresistivity_ohm_m = -1\n")), ConfigError);
  CHECK_THROWS_AS(parse_materials(io::parse_ini("[material]\nname = x\nresistivity_ohm_m = abc\n")), ConfigError);
}

TEST_CASE("material set lookup replaces by name") {
  MaterialSet s;
  REQUIRE(s.find("silver_glue") != nullptr);
  CHECK(s.find("silver_glue")->resistivity() == 630e-8);
  CHECK(s.find("unobtainium") == nullptr);
}
