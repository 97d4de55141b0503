#include <catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "pkgloss/lossbudget.hpp"

using namespace pkgloss;
using namespace pkgloss::budget;
using Catch::Matchers::WithinRel;

namespace {

const field::ResonatorDesign r5{"R5", 22e-6, 11e-6, 5.8e9, 210e3};

double rs(double rho, double f) { return materials::surface_resistance(rho, f); }

}  // namespace

TEST_CASE("q inverse from surface resistance") {
  // glue at 5.6 GHz on gamma = 1/8.5 per metre gives Qi = 1.00705e6 (mpmath)
  const double q = 1.0 / q_inverse_from_rs(rs(630e-8, 5.6e9), 5.6e9, 1.0 / 8.5);
  CHECK_THAT(q, WithinRel(1007053.46625667074, 1e-10));
  CHECK(q_inverse_from_rs(0.0, 5e9, 3.0) == 0.0);
  CHECK(q_inverse_from_rs(0.1, 5e9, 0.0) == 0.0);
  CHECK_THROWS_AS(q_inverse_from_rs(-0.1, 5e9, 1.0), DomainError);
  CHECK_THROWS_AS(q_inverse_from_rs(0.1, 0.0, 1.0), DomainError);
  CHECK_THROWS_AS(q_inverse_from_rs(0.1, 5e9, -1.0), DomainError);
}

TEST_CASE("q inverse is linear in gamma and in R_S") {
  const double base = q_inverse_from_rs(0.02, 6e9, 0.4);
  for (double k : {0.0, 0.5, 3.0, 17.0}) {
    CHECK_THAT(q_inverse_from_rs(0.02, 6e9, 0.4 * k), WithinRel(k * base, 1e-14));
    CHECK_THAT(q_inverse_from_rs(0.02 * k, 6e9, 0.4), WithinRel(k * base, 1e-14));
  }
}

TEST_CASE("solid copper package budget for the widest resonator") {
  const std::map<std::string, GammaValue> g{{"base", {1.6, false}}, {"pcb", {0.89, false}}};
  PackageBudgetOptions opt;
  opt.measured_q_i_m = 0.094e6;
  const auto b = package_budget(field::PackageVariant::cu_solid, r5, g, {}, opt);
  REQUIRE(b.contributions.size() == 3);
  // mpmath
  CHECK(b.contributions[0].label == "Base");
  CHECK_THAT(b.contributions[0].q_inverse, WithinRel(4.09516822617055034e-7, 1e-10));
  CHECK(b.contributions[1].label == "PCB");
  CHECK_THAT(b.contributions[1].q_inverse, WithinRel(4.15892552642563593e-7, 1e-10));
  CHECK(b.contributions[2].label == "Glue");
  CHECK_THAT(b.contributions[2].q_inverse, WithinRel(9.00224141072763516e-6, 1e-10));
  CHECK_THAT(b.total_q(), WithinRel(101753.717320302937, 1e-10));
  REQUIRE(b.residual_q_inverse);
  CHECK_THAT(*b.residual_q_inverse, WithinRel(1.0 / 0.094e6 - b.total_q_inverse, 1e-12));
  CHECK(b.resonator_id == "R5");
  CHECK(b.package_id == "Cu_solid");
}

TEST_CASE("copper package with a hole uses the partition formula") {
  const std::map<std::string, GammaValue> g{{"base", {0.16, false}}, {"pcb", {0.13, false}}, {"glue", {0.04, false}}};
  const auto b = package_budget(field::PackageVariant::cu_hole, r5, g);
  REQUIRE(b.contributions.size() == 3);
  CHECK_THAT(b.contributions[0].q_inverse, WithinRel(4.09516822617055034e-8, 1e-10));
  CHECK_THAT(b.contributions[1].q_inverse, WithinRel(6.07483503859924349e-8, 1e-10));
  CHECK_THAT(b.contributions[2].q_inverse, WithinRel(3.31746542377127632e-7, 1e-9));
  CHECK_THAT(b.total_q(), WithinRel(2307089.40298518956, 1e-9));
}

TEST_CASE("aluminium packages carry only PCB and glue") {
  const std::map<std::string, GammaValue> g{{"pcb", {0.77, false}}, {"glue", {0.22, false}}};
  const auto b = package_budget(field::PackageVariant::al_solid, r5, g);
  REQUIRE(b.contributions.size() == 2);
  CHECK(b.contributions[0].label == "PCB");
  CHECK(b.contributions[1].label == "Glue");
  const double expect = q_inverse_from_rs(rs(2e-8, 5.8e9), 5.8e9, 0.77) + q_inverse_from_rs(rs(630e-8, 5.8e9), 5.8e9, 0.22);
  CHECK_THAT(b.total_q_inverse, WithinRel(expect, 1e-14));
}

TEST_CASE("upper-bound gammas enter at the bound and stay flagged") {
  const std::map<std::string, GammaValue> g{{"pcb", {0.005, true}}, {"glue", {0.02, false}}};
  const auto b = package_budget(field::PackageVariant::al_hole, r5, g);
  CHECK(b.contributions[0].upper_bound);
  CHECK_FALSE(b.contributions[1].upper_bound);
  CHECK(b.contributions[0].q_inverse > 0.0);
}

TEST_CASE("missing region gamma is a domain error") {
  const std::map<std::string, GammaValue> g{{"base", {1.6, false}}};
  CHECK_THROWS_AS(package_budget(field::PackageVariant::cu_solid, r5, g), DomainError);
  PackageBudgetOptions opt;
  opt.include_lid = true;
  CHECK_THROWS_AS(package_budget(field::PackageVariant::cu_solid, r5, {{"base", {1.6, false}}, {"pcb", {0.8, false}}},
                                 {}, opt),
                  DomainError);
  CHECK_THROWS_AS(package_budget(field::PackageVariant::custom, r5, g), DomainError);
}

TEST_CASE("filled backing formula") {
  const double rg = rs(630e-8, 5.8e9), rb = rs(0.6e-8, 5.8e9);
  CHECK(budget_filled_backing(rg, rb, 5.8e9, 1.6, 0.0) == 0.0);
  const double full = budget_filled_backing(rg, rb, 5.8e9, 1.6, 1.0);
  CHECK_THAT(budget_filled_backing(rg, rb, 5.8e9, 1.6, 0.35), WithinRel(0.35 * full, 1e-14));
  CHECK_THAT(full, WithinRel(q_inverse_from_rs(rg, 5.8e9, 1.6) - q_inverse_from_rs(rb, 5.8e9, 1.6), 1e-12));
  CHECK_THROWS_AS(budget_filled_backing(rg, rb, 5.8e9, 1.6, 1.2), DomainError);
  CHECK_THROWS_AS(budget_filled_backing(rg, rb, 5.8e9, 1.6, -0.1), DomainError);
}

TEST_CASE("glue partition clamps a negative glue term") {
  GluePartitionInput in;
  in.rs_base = 0.01;
  in.rs_pcb = 0.02;
  in.rs_glue = 0.4;
  in.f0_hz = 5e9;
  in.gamma_base_glue_absent = 1.0;
  in.gamma_pcb_glue_absent = 0.5;
  in.gamma_base_glue_present = 0.9;
  in.gamma_pcb_glue_present = 0.5;
  in.gamma_glue = 0.1;
  auto p = budget_glue_partition(in);
  CHECK_FALSE(p.glue_clamped);
  CHECK_THAT(p.glue, WithinRel(q_inverse_from_rs(0.4, 5e9, 0.1) - q_inverse_from_rs(0.01, 5e9, 0.1), 1e-10));

  in.gamma_base_glue_present = 0.2;
  in.gamma_glue = 0.0;
  p = budget_glue_partition(in);
  CHECK(p.glue_clamped);
  CHECK(p.glue == 0.0);
  CHECK(p.glue_unclamped < 0.0);
}

TEST_CASE("budget total is order independent and bitwise reproducible") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-12.0, -3.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<LossContribution> parts;
    for (int k = 0; k < 9; ++k) parts.push_back({"c" + std::to_string(k), std::pow(10.0, u(rng))});
    const double ref = total_budget(parts).total_q_inverse;
    for (int s = 0; s < 10; ++s) {
      std::shuffle(parts.begin(), parts.end(), rng);
      CHECK(total_budget(parts).total_q_inverse == ref);
    }
    double sum = 0.0;
    for (const auto& c : parts) sum += c.q_inverse;
    CHECK_THAT(ref, WithinRel(sum, 1e-14));
  }
  CHECK_THROWS_AS(total_budget({}), DomainError);
  CHECK_THROWS_AS(total_budget({{"x", -1e-7}}), DomainError);
}

TEST_CASE("surface dielectric term is added verbatim") {
  PackageBudgetOptions opt;
  opt.surface_dielectric_q_inverse = 2.5e-7;
  const auto b = package_budget(field::PackageVariant::al_solid, r5, {{"pcb", {0.1, false}}, {"glue", {0.0, false}}},
                                {}, opt);
  REQUIRE(b.contributions.size() == 3);
  CHECK(b.contributions[2].label == "SurfaceDielectric");
  CHECK(b.contributions[2].q_inverse == 2.5e-7);
}

TEST_CASE("T1 conversion") {
  // Q / (2 pi f) = 26.5258 us at Q = 1e6, f = 6 GHz
  CHECK_THAT(q_to_t1(1e6, 6e9), WithinRel(2.65258238486492226e-5, 1e-12));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> lq(2.0, 9.0), lf(8.0, 11.0);
  for (int k = 0; k < 1000; ++k) {
    const double q = std::pow(10.0, lq(rng)), f = std::pow(10.0, lf(rng));
    CHECK_THAT(t1_to_q(q_to_t1(q, f), f), WithinRel(q, 4e-16));
  }
  CHECK_THROWS_AS(q_to_t1(-1.0, 5e9), DomainError);
  CHECK_THROWS_AS(t1_to_q(1e-5, 0.0), DomainError);
}
