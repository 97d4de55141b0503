#include <catch_amalgamated.hpp>

#include <cstring>
#include <filesystem>
#include <random>

#include "pkgloss/io/config.hpp"
#include "pkgloss/io/reference.hpp"
#include "pkgloss/io/report.hpp"
#include "pkgloss/io/trace_io.hpp"
#include "pkgloss/svg.hpp"

namespace fs = std::filesystem;
using namespace pkgloss;
using namespace pkgloss::io;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinRel;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("pkgloss_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST_CASE("sha256 test vectors") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("bundled reference data loads and verifies") {
  const auto ds = load_reference();
  CHECK(ds.designs.size() == 5);
  CHECK(ds.design("R5").f0_hz == 5.8e9);
  CHECK(ds.design("R1").gap_m == 1.5e-6);
  const auto g = ds.gamma.find("R5", "Cu_solid", "base");
  REQUIRE(g);
  CHECK(g->value == 1.6);
  CHECK_FALSE(g->upper_bound);
  const auto blank = ds.gamma.find("R1", "Cu_hole", "base");
  REQUIRE(blank);
  CHECK(blank->upper_bound);
  CHECK(blank->value == GammaTable::blank_bound);
  CHECK(*ds.measured("Cu_solid", "R5") == 0.094e6);
  CHECK_FALSE(ds.measured("Cu_solid", "R9"));
  CHECK(ds.material("silver_glue").resistivity() == 630e-8);
  CHECK(ds.material_set().aluminum.is_superconductor());
  CHECK(ds.package.hole_width_m == 4.2e-3);
  CHECK(ds.file_sha256.size() == reference_manifest.size());
  CHECK_THROWS_AS(ds.design("R9"), DomainError);
}

TEST_CASE("tampered or missing reference files fail the integrity check") {
  const fs::path dir = scratch("ref");
  for (const auto& e : reference_manifest)
    fs::copy_file(default_data_dir() / std::string(e.file), dir / std::string(e.file));
  CHECK_NOTHROW(load_reference(dir));
  {
    std::ofstream out(dir / "gamma_table.csv", std::ios::app);
    out << "R6,Cu_solid,base,9\n";
  }
  CHECK_THROWS_AS(load_reference(dir), IntegrityError);
  fs::remove(dir / "gamma_table.csv");
  CHECK_THROWS_AS(load_reference(dir), IntegrityError);
  fs::remove_all(dir);
}

TEST_CASE("ini errors carry key and line") {
  try {
    parse_ini("[a]\nx = 1\nx = 2\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.key() == "a.x");
    CHECK(e.line() == 3);
  }
  try {
    parse_ini("[a]\n\njunk line\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.line() == 3);
  }
  const auto doc = parse_ini("# comment\n[s]\nk = v ; trailing\n");
  CHECK(doc.first("s")->find("k")->value == "v");
}

TEST_CASE("config parsing rejects unknown sections and keys") {
  const std::string good = R"([run]
resonators = R3, R5
packages = Cu_solid, Al_hole
format = csv

[resolution]
cells_per_gap = 20

[budget]
gamma_source = computed
fill_fraction = 0.5
)";
  const auto c = parse_config_text(good);
  CHECK(c.resonators == std::vector<std::string>{"R3", "R5"});
  REQUIRE(c.packages.size() == 2);
  CHECK(c.packages[1] == field::PackageVariant::al_hole);
  CHECK(c.format == "csv");
  CHECK(c.resolution.cells_per_gap == 20.0);
  CHECK(c.budget.fill_fraction == 0.5);

  try {
    parse_config_text("[run]\nformat = json\n\n[budget]\nfill = 0.3\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.key() == "budget.fill");
    CHECK(e.line() == 5);
  }
  CHECK_THROWS_AS(parse_config_text("[extras]\na = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[run]\npackages = Cu_plated\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[run]\nformat = xml\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[budget]\nfill_fraction = 1.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[resolution]\ncells_per_gap = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[run]\nformat = csv\n[run]\nformat = json\n"), ConfigError);
}

TEST_CASE("custom packages need the geometry flags") {
  const auto c = parse_config_text("[run]\npackages = custom\n\n[geometry]\nhole = true\n");
  CHECK_THROWS_AS(c.package_geometry(field::PackageVariant::custom, {}), ConfigError);
  const auto ok = parse_config_text(
      "[run]\npackages = custom\n\n[geometry]\nhole = true\npcb = false\naluminum = true\nhole_width_m = 3e-3\n");
  const auto g = ok.package_geometry(field::PackageVariant::custom, {});
  CHECK(g.hole);
  CHECK_FALSE(g.pcb);
  CHECK(g.aluminum);
  CHECK(g.hole_width_m == 3e-3);
}

TEST_CASE("config write then parse is the identity") {
  const auto c = parse_config_text(R"([run]
resonators = R1
packages = Cu_hole
output_dir = results

[geometry]
lid_height_m = 1.5e-3
pcb = false

[budget]
measured_q_i_m = 123456.7
surface_layer_thickness_m = 3e-9

[output]
profile_depths_m = 0.43e-3, 1e-4
field_maps = true

[material]
name = ofhc_copper
resistivity_ohm_m = 1.1e-8
)");
  const std::string text = write_config(c);
  const auto back = parse_config_text(text);
  CHECK(write_config(back) == text);
  CHECK(back.geometry.at("lid_height_m") == 1.5e-3);
  CHECK(back.output.profile_depths_m.size() == 2);
  CHECK(back.material_set({}).copper.resistivity() == 1.1e-8);
  CHECK(write_config(parse_config_text(write_config(RunConfig{}))) == write_config(RunConfig{}));
}

TEST_CASE("number formatting round-trips every double") {
  std::mt19937_64 rng(11);
  for (int k = 0; k < 20000; ++k) {
    std::uint64_t bits = rng();
    double v;
    std::memcpy(&v, &bits, sizeof v);
    if (!std::isfinite(v)) continue;
    const auto back = try_parse_double(format_double(v));
    REQUIRE(back);
    CHECK(same_bits(*back, v));
  }
  CHECK_FALSE(try_parse_double("1.5x"));
  CHECK_FALSE(try_parse_double(""));
}

TEST_CASE("csv rows with the wrong width are rejected with the line") {
  try {
    parse_csv("a,b\n1,2\n# note\n3\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.line() == 4);
  }
}

TEST_CASE("gamma reports round-trip") {
  GammaTable t;
  t.set("R1", "Cu_hole", "base", {0.005, true});
  t.set("R5", "Cu_solid", "base", {1.6012345678901234, false});
  t.set("R5", "Cu_solid", "pcb", {1e-300, false});
  const ReportMeta meta{{{"designs.csv", "abc"}}};
  const std::string j = gamma_to_json(t, meta);
  const auto tj = gamma_from_json(j);
  CHECK(gamma_to_json(tj, meta) == j);
  const auto tc = gamma_from_csv(gamma_to_csv(t, meta));
  CHECK(gamma_to_json(tc, meta) == j);
  CHECK(same_bits(tc.find("R5", "Cu_solid", "base")->value, 1.6012345678901234));
  CHECK(tc.find("R1", "Cu_hole", "base")->upper_bound);
  CHECK_THAT(j, ContainsSubstring("\"tool\": \"pkgloss\""));
  CHECK_THAT(j, !ContainsSubstring("timestamp"));
}

TEST_CASE("budget reports round-trip") {
  std::vector<budget::LossBudget> bs;
  bs.push_back(budget::total_budget({{"Base", 4.1e-7, "ofhc_copper", 0.0117, 5.8e9, 1.6, false},
                                     {"Glue", 9.0e-6, "silver_glue", 0.38, 5.8e9, 1.6, true}},
                                    0.094e6, "R5", "Cu_solid"));
  bs.back().warnings.push_back("note");
  bs.push_back(budget::total_budget({{"PCB", 1e-8, "pcb_copper", 0.02, 5e9, 0.01, false}}, std::nullopt, "R1", "Al_hole"));
  const ReportMeta meta{{{"gamma_table.csv", "00ff"}}};
  const std::string j = budgets_to_json(bs, meta);
  const auto back = budgets_from_json(j);
  CHECK(budgets_to_json(back, meta) == j);
  REQUIRE(back.size() == 2);
  CHECK(same_bits(back[0].total_q_inverse, bs[0].total_q_inverse));
  CHECK(back[0].contributions[1].upper_bound);
  CHECK_FALSE(back[1].measured_q_i_m);
  const std::string csv = budgets_to_csv(bs, meta);
  CHECK(parse_csv(csv).rows.size() == 3);
}

TEST_CASE("fit and sweep reports round-trip") {
  fit::ResonanceParams p{5.3e9, 2e5, 3e5, 0.2, 0.7, 0.4, 3e-8};
  const auto grid = fit::linewidth_grid(p, 8.0, 401);
  auto t = fit::aggregate_scans(fit::synth_trace(p, grid, 0.01, 4, 9));
  t.applied_power_w = 1e-16;
  const auto r = fit::fit(t);
  const ReportMeta meta{{{"trace", "beef"}}};
  const std::string j = fit_to_json(r, meta);
  const auto back = fit_from_json(j);
  CHECK(fit_to_json(back, meta) == j);
  CHECK(same_bits(back.q_internal, r.q_internal));
  CHECK(same_bits(back.covariance(2, 3), r.covariance(2, 3)));
  CHECK(parse_csv(fit_to_csv(r, meta)).rows.size() >= 9);

  SweepReport s;
  s.rows.push_back({"a.csv", 1e-16, 12.5, 3e5, 1e3, 1e5, 2e5, 5e9, true});
  s.rows.push_back({"b.csv", 1e-14, 1250.0, 4e5, 2e3, 1.1e5, 2e5, 5e9, false});
  s.q_i_max = 4e5;
  s.power_law_exponent = 0.0623;
  s.n_min = 1.0;
  s.n_max = 1e6;
  const std::string sj = sweep_to_json(s, meta);
  CHECK(sweep_to_json(sweep_from_json(sj), meta) == sj);
}

TEST_CASE("trace files round-trip in both layouts") {
  fit::ResonanceParams p{5.3e9, 2e5, 3e5, 0.2, 0.7, 0.4, 3e-8};
  const auto grid = fit::linewidth_grid(p, 8.0, 64);
  const auto scans = fit::synth_trace(p, grid, 0.01, 3, 5);
  const auto raw = parse_raw_trace(raw_trace_to_csv(scans));
  REQUIRE(raw.size() == 3);
  for (std::size_t s = 0; s < 3; ++s)
    for (std::size_t k = 0; k < grid.size(); ++k) {
      CHECK(same_bits(raw[s].frequencies[k], scans[s].frequencies[k]));
      CHECK(raw[s].s21[k] == scans[s].s21[k]);
    }
  auto agg = fit::aggregate_scans(scans);
  agg.applied_power_w = 3.2e-17;
  const std::string text = aggregated_trace_to_csv(agg);
  const auto back = parse_aggregated_trace(text);
  CHECK(back.n_scans == 3);
  CHECK(*back.applied_power_w == 3.2e-17);
  CHECK(aggregated_trace_to_csv(back) == text);

  const fs::path dir = scratch("trace");
  write_text_file(dir / "raw.csv", raw_trace_to_csv(scans));
  write_text_file(dir / "agg.csv", text);
  CHECK(aggregated_trace_to_csv(load_trace(dir / "raw.csv")) == aggregated_trace_to_csv(fit::aggregate_scans(scans)));
  CHECK(load_trace(dir / "agg.csv").n_scans == 3);
  fs::remove_all(dir);
}

TEST_CASE("svg output is deterministic unless a timestamp is requested") {
  svg::PlotOptions po;
  po.title = "a < b";
  const auto bars = svg::bar_chart({"x", "y"}, {1e-6, 3e-6}, po);
  CHECK(bars == svg::bar_chart({"x", "y"}, {1e-6, 3e-6}, po));
  CHECK_THAT(bars, ContainsSubstring("<svg"));
  CHECK_THAT(bars, ContainsSubstring("a &lt; b"));
  CHECK_THAT(bars, !ContainsSubstring("generated"));
  po.timestamp = "2024-01-01T00:00:00Z";
  po.log_x = po.log_y = true;
  const auto lines = svg::line_chart({{"s", {1.0, 10.0, 100.0}, {1e5, 2e5, 3e5}}}, po);
  CHECK_THAT(lines, ContainsSubstring("<!-- generated 2024-01-01T00:00:00Z -->"));
  CHECK_THROWS_AS(svg::bar_chart({"x"}, {-1.0}), DomainError);
  CHECK_THROWS_AS(svg::line_chart({{"s", {-1.0}, {-1.0}}}, po), DomainError);
}
