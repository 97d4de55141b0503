#include <catch_amalgamated.hpp>

#include <cmath>

#include "pkgloss/s21fit.hpp"

namespace fit = pkgloss::fit;
using namespace pkgloss::fit;
using pkgloss::DomainError;
using pkgloss::pi;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

ResonanceParams params(double qi, double qc, double phi) {
  ResonanceParams p;
  p.f0_hz = 5.3e9;
  p.q_c_mag = qc;
  p.phi = phi;
  p.q_loaded = 1.0 / (1.0 / qi + std::cos(phi) / qc);
  p.amp = 0.7;
  p.alpha = 0.4;
  p.tau_s = 3e-8;
  return p;
}

ComplexTrace noiseless(const ResonanceParams& p, std::size_t n = 801) {
  ComplexTrace t;
  t.frequencies = linewidth_grid(p, 10.0, n);
  for (double f : t.frequencies) t.s21_mean.push_back(model_s21(p, f));
  t.sigma_i.assign(n, 0.0);
  t.sigma_q.assign(n, 0.0);
  return t;
}

}  // namespace

TEST_CASE("notch model matches an independent evaluation") {
  ResonanceParams p{5e9, 2e5, 3e5, 0.3, 0.8, 1.1, 4e-8};
  // mpmath, 25 digits
  const cplx off = model_s21(p, 5.0001e9);
  CHECK_THAT(off.real(), WithinRel(0.3146967097285940487, 1e-11));
  CHECK_THAT(off.imag(), WithinRel(0.7083523111600102856, 1e-11));
  const cplx on = model_s21(p, 5e9);
  CHECK_THAT(on.real(), WithinRel(0.2722277542603334096, 1e-11));
  CHECK_THAT(on.imag(), WithinRel(0.1873926987219695089, 1e-11));
}

TEST_CASE("internal Q from loaded and coupling Q") {
  CHECK_THAT(qi_from_params(2e5, 3e5, 0.1), WithinRel(594064.305827720705, 1e-12));
  CHECK_THAT(qi_from_params(1e5, INFINITY, 0.0), WithinRel(1e5, 1e-15));
  CHECK_THROWS_AS(qi_from_params(2e5, 1e5, 0.0), DomainError);
  CHECK_THROWS_AS(qi_from_params(-1.0, 1e5, 0.0), DomainError);
}

TEST_CASE("wrap_angle maps into (-pi, pi]") {
  for (double a = -20.0; a < 20.0; a += 0.37) {
    const double w = wrap_angle(a);
    CHECK(w > -pi);
    CHECK(w <= pi);
    CHECK_THAT(std::remainder(w - a, 2 * pi), WithinAbs(0.0, 1e-12));
  }
  CHECK(wrap_angle(-pi) == pi);
}

TEST_CASE("scan aggregation uses the sample standard deviation") {
  RawScan a{{1.0, 2.0}, {{1.0, 0.0}, {5.0, 5.0}}};
  RawScan b{{1.0, 2.0}, {{2.0, 0.0}, {5.0, 5.0}}};
  RawScan c{{1.0, 2.0}, {{4.0, 3.0}, {5.0, 5.0}}};
  std::vector<RawScan> scans{a, b, c};
  // aggregate needs 8 points to validate; pad the grid
  for (auto& s : scans)
    for (int k = 3; k <= 8; ++k) {
      s.frequencies.push_back(k);
      s.s21.push_back({1.0, 1.0});
    }
  const auto t = aggregate_scans(scans);
  CHECK(t.n_scans == 3);
  CHECK_THAT(t.s21_mean[0].real(), WithinRel(7.0 / 3.0, 1e-15));
  CHECK_THAT(t.sigma_i[0], WithinRel(1.5275252316519468, 1e-14));
  CHECK_THAT(t.sigma_q[0], WithinRel(1.7320508075688772, 1e-14));
  CHECK(t.sigma_i[1] == 0.0);
  CHECK(t.has_zero_sigma());
  CHECK_THROWS_AS(aggregate_scans({a}), DomainError);
  scans[1].frequencies[0] = 1.5;
  CHECK_THROWS_AS(aggregate_scans(scans), DomainError);
}

TEST_CASE("noiseless traces fit exactly over a wide parameter range") {
  for (double qi : {1e4, 1e5, 1e6, 1e7})
    for (double ratio : {0.05, 0.3, 0.9})  // Qc / Qi
      for (double phi : {-0.5, 0.0, 0.5}) {
        const auto p = params(qi, ratio * qi, phi);
        const auto r = fit::fit(noiseless(p));
        INFO("qi " << qi << " ratio " << ratio << " phi " << phi);
        CHECK(r.converged);
        CHECK(r.uniform_weights);
        CHECK_THAT(r.q_internal, WithinRel(qi, 1e-8));
        CHECK_THAT(r.params.f0_hz, WithinRel(p.f0_hz, 1e-12));
        CHECK_THAT(r.params.tau_s, WithinRel(p.tau_s, 1e-6));
      }
}

TEST_CASE("fit is invariant under a global phase and amplitude change") {
  const auto p = params(4e5, 2e5, 0.2);
  auto t = noiseless(p);
  const auto base = fit::fit(t);
  for (auto& z : t.s21_mean) z *= std::polar(3.0, 2.1);
  const auto moved = fit::fit(t);
  CHECK_THAT(moved.q_internal, WithinRel(base.q_internal, 1e-8));
  CHECK_THAT(moved.params.amp, WithinRel(3.0 * base.params.amp, 1e-8));
}

TEST_CASE("noisy fits cover the true Qi within three standard errors") {
  const auto p = params(8e5, 3e5, 0.15);
  const auto grid = linewidth_grid(p, 10.0, 1601);
  int inside = 0;
  const int trials = 60;
  for (int s = 0; s < trials; ++s) {
    const auto t = aggregate_scans(synth_trace(p, grid, p.amp / 20.0, 10, 1000 + s));
    const auto r = fit::fit(t);
    REQUIRE(r.converged);
    REQUIRE_FALSE(r.uniform_weights);
    if (std::abs(r.q_internal - 8e5) <= 3.0 * r.q_internal_stderr) ++inside;
  }
  CHECK(inside >= trials - 2);
}

TEST_CASE("covariance is symmetric with a positive diagonal") {
  const auto p = params(2e5, 1e5, -0.3);
  const auto t = aggregate_scans(synth_trace(p, linewidth_grid(p, 8.0, 601), 0.02, 5, 42));
  for (bool robust : {true, false}) {
    FitOptions o;
    o.robust_covariance = robust;
    const auto r = fit::fit(t, std::nullopt, o);
    for (int a = 0; a < n_params; ++a) {
      CHECK(r.covariance(a, a) > 0.0);
      for (int b = 0; b < n_params; ++b)
        CHECK_THAT(r.covariance(a, b), WithinAbs(r.covariance(b, a), 1e-9 * std::abs(r.covariance(a, b)) + 1e-300));
    }
    CHECK(r.q_internal_stderr > 0.0);
  }
}

TEST_CASE("holding the delay freezes tau at the initial estimate") {
  auto p = params(3e5, 2e5, 0.1);
  p.tau_s = 0.0;
  const auto t = noiseless(p);
  FitOptions o;
  o.baseline = BaselineMode::hold_delay;
  auto init = initial_guess(t);
  init.tau_s = 0.0;
  const auto r = fit::fit(t, init, o);
  CHECK(r.params.tau_s == 0.0);
  CHECK(r.covariance(6, 6) == 0.0);
  CHECK_THAT(r.q_internal, WithinRel(3e5, 1e-8));
}

TEST_CASE("an unbracketed resonance is rejected") {
  auto p = params(3e5, 2e5, 0.0);
  ComplexTrace t;
  for (int k = 0; k < 200; ++k) t.frequencies.push_back(p.f0_hz + k * 5e3);
  for (double f : t.frequencies) t.s21_mean.push_back(model_s21(p, f));
  t.sigma_i.assign(200, 0.01);
  t.sigma_q.assign(200, 0.01);
  CHECK_THROWS_AS(fit::fit(t), DomainError);
}

TEST_CASE("photon number and power units") {
  // 2 Ql^2 P / (Qc hbar w^2), mpmath
  CHECK_THAT(photon_number(1e-15, 5e9, 2e5, 3e5), WithinRel(2562.08082456497182, 1e-9));
  CHECK_THAT(dbm_to_watts(-120.0), WithinRel(1e-15, 1e-12));
  CHECK_THAT(dbm_to_watts(0.0), WithinRel(1e-3, 1e-15));
  auto t = noiseless(params(5e5, 2e5, 0.0));
  t.applied_power_w = 1e-16;
  const auto r = fit::fit(t);
  REQUIRE(r.photon_number);
  CHECK_THAT(*r.photon_number, WithinRel(photon_number(1e-16, r.params.f0_hz, r.params.q_loaded, r.params.q_c_mag), 1e-15));
}

TEST_CASE("power-law exponent from a sweep") {
  std::vector<SweepPoint> pts;
  for (double n = 0.1; n < 1e7; n *= 3.0) pts.push_back({n, 2e5 * std::pow(n, 0.1)});
  const auto a = power_sweep_analysis(pts);
  CHECK_THAT(a.power_law_exponent, WithinAbs(0.1, 1e-12));
  CHECK_THAT(a.q_i_max, WithinRel(pts.back().q_internal, 1e-15));

  // saturated tail outside the window does not bias the slope
  for (auto& p : pts)
    if (p.photon_number > 1e4) p.q_internal = 2e5 * std::pow(1e4, 0.1);
  const auto w = power_sweep_analysis(pts, 1.0, 1e4);
  CHECK_THAT(w.power_law_exponent, WithinAbs(0.1, 1e-12));
  CHECK_THROWS_AS(power_sweep_analysis(pts, 1e9, 1e10), DomainError);
  CHECK_THROWS_AS(power_sweep_analysis({{1.0, 1.0}, {2.0, 2.0}}), DomainError);
}
