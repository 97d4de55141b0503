// pkgloss: package loss budgets, field solves and resonator fits from the command line.
//
//   pkgloss gamma  [--config F] [-r R1 -r R2 ...] [-p Cu_solid ...]
//   pkgloss budget [--config F] [--gamma-source reference|computed] [--gamma FILE]
//   pkgloss fit    TRACE... [--power-dbm X] [--hold-delay] [--model-covariance]
//   pkgloss sweep  DIR        (DIR/powers.csv: file,power_dbm)
//   pkgloss synth  --f0 ... --ql ... --qc ... [--noise S --scans N --seed K]
//
// Output goes to --out, else $PKGLOSS_OUT, else the config's output_dir.
// Failures print one line "error: kind=<kind> message=<text>" on stderr.

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <thread>

#include <CLI11.hpp>

#include "pkgloss.hpp"

namespace fs = std::filesystem;
using namespace pkgloss;

namespace {

enum Exit { ok = 0, domain = 1, config = 2, solver = 3, integrity = 4, usage = 5, other = 6 };

struct Common {
  std::string out;
  std::string format;
  std::string data_dir;
  bool no_timestamp = false;
  int threads = 0;
};

std::string one_line(std::string s) {
  for (char& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

int fail(const char* kind, const std::string& msg, int code) {
  std::cerr << "error: kind=" << kind << " message=" << one_line(msg) << "\n";
  return code;
}

fs::path out_dir(const Common& c, const std::string& config_dir) {
  if (!c.out.empty()) return c.out;
  if (const char* env = std::getenv("PKGLOSS_OUT"); env && *env) return env;
  return config_dir;
}

std::string out_format(const Common& c, const std::string& config_format) {
  const std::string f = c.format.empty() ? config_format : c.format;
  if (f != "json" && f != "csv") throw ConfigError("format must be json or csv", "format");
  return f;
}

std::optional<std::string> stamp(const Common& c) {
  if (c.no_timestamp) return std::nullopt;
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return std::string(buf);
}

io::ReferenceDataset reference(const Common& c) {
  return c.data_dir.empty() ? io::load_reference() : io::load_reference(c.data_dir);
}

io::RunConfig config_from(const std::string& path, io::ReportMeta& meta) {
  if (path.empty()) return {};
  const std::string text = io::read_text_file(path);
  meta.input_sha256["config"] = io::sha256_hex(text);
  return io::parse_config_text(text, path);
}

std::vector<field::ResonatorDesign> pick_designs(const io::ReferenceDataset& ds, std::vector<std::string> ids) {
  if (ids.empty()) return ds.designs;
  std::vector<field::ResonatorDesign> out;
  for (const auto& id : ids) out.push_back(ds.design(id));
  return out;
}

std::vector<field::PackageVariant> pick_packages(const io::RunConfig& cfg, const std::vector<std::string>& ids) {
  if (ids.empty()) return cfg.packages;
  std::vector<field::PackageVariant> out;
  for (const auto& id : ids) {
    const auto v = field::parse_package(id);
    if (!v) throw ConfigError("unknown package '" + id + "'", "package");
    out.push_back(*v);
  }
  return out;
}

field::CrossSection cross_section(const io::ReferenceDataset& ds, const io::RunConfig& cfg, field::PackageVariant v,
                                  const field::ResonatorDesign& d) {
  const auto base = v == field::PackageVariant::custom ? field::package_geometry(v) : io::reference_geometry(ds, v);
  return field::make_cross_section(cfg.package_geometry(v, base), d, cfg.material_set(ds.material_set()));
}

// Runs job(k) for k in [0, n) on a few threads. The first exception is rethrown.
template <class F>
void parallel_for(std::size_t n, int threads, F job) {
  const std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t nt = std::min<std::size_t>(n, threads > 0 ? static_cast<std::size_t>(threads) : hw);
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex mu;
  auto worker = [&] {
    for (std::size_t k; (k = next++) < n;) {
      try {
        job(k);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!err) err = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < nt; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

std::string depth_tag(double d) {
  return io::format_double(std::round(d * 1e9) / 1e3) + "um";
}

// ---------------------------------------------------------------------------

struct GammaArgs {
  std::string config;
  std::vector<std::string> resonators, packages;
  double cells_per_gap = 0.0;
};

struct Computed {
  field::ResonatorDesign design;
  field::PackageVariant variant;
  field::PackageFields fields;
};

std::vector<Computed> solve_all(const io::ReferenceDataset& ds, const io::RunConfig& cfg,
                                const std::vector<field::ResonatorDesign>& designs,
                                const std::vector<field::PackageVariant>& packages, bool with_dielectric,
                                int threads) {
  std::vector<Computed> jobs;
  for (const auto& d : designs)
    for (auto v : packages) jobs.push_back({d, v, {}});
  parallel_for(jobs.size(), threads, [&](std::size_t k) {
    auto& j = jobs[k];
    const auto xs = cross_section(ds, cfg, j.variant, j.design);
    j.fields = field::solve_package(xs, cfg.grid_spec(j.design), with_dielectric, cfg.solver_options());
  });
  return jobs;
}

int cmd_gamma(const Common& c, const GammaArgs& a) {
  io::ReportMeta meta;
  const auto ds = reference(c);
  meta.input_sha256 = ds.file_sha256;
  auto cfg = config_from(a.config, meta);
  if (a.cells_per_gap > 0) cfg.resolution.cells_per_gap = a.cells_per_gap;
  const fs::path dir = out_dir(c, cfg.output_dir);
  const std::string fmt = out_format(c, cfg.format);

  const auto jobs = solve_all(ds, cfg, pick_designs(ds, a.resonators.empty() ? cfg.resonators : a.resonators),
                              pick_packages(cfg, a.packages), false, c.threads);
  GammaTable table;
  std::vector<io::SolveRecord> solves;
  for (const auto& j : jobs) {
    const std::string pkg(field::package_id(j.variant));
    for (const auto& [region, g] : j.fields.gamma) table.set(j.design.id, pkg, region, {g, false});
    const auto& st = j.fields.solution.air.stats;
    solves.push_back({j.design.id, pkg, j.fields.solution.grid->size(), st.iterations, st.relative_residual});

    for (double depth : cfg.output.profile_depths_m) {
      const auto p = field::field_profile_at_depth(j.fields.h, depth);
      std::ostringstream o;
      o << "# fwhm_m=" << io::format_double(field::fwhm(p)) << "\nx_m,h_abs_a_per_m\n";
      for (std::size_t k = 0; k < p.x.size(); ++k)
        o << io::format_double(p.x[k]) << "," << io::format_double(p.magnitude[k]) << "\n";
      io::write_text_file(dir / ("profile_" + j.design.id + "_" + pkg + "_" + depth_tag(depth) + ".csv"), o.str());
    }
    if (cfg.output.field_maps) {
      const auto& g = *j.fields.solution.grid;
      std::ostringstream o;
      o << "x_m,y_m,hx_a_per_m,hy_a_per_m\n";
      for (std::size_t jj = 0; jj < g.ny(); ++jj)
        for (std::size_t i = 0; i < g.nx(); ++i) {
          const auto n = g.index(i, jj);
          o << io::format_double(g.x[i]) << "," << io::format_double(g.y[jj]) << ","
            << io::format_double(j.fields.h.vx[n]) << "," << io::format_double(j.fields.h.vy[n]) << "\n";
        }
      io::write_text_file(dir / ("field_" + j.design.id + "_" + pkg + ".csv"), o.str());
    }
  }
  if (fmt == "json")
    io::write_text_file(dir / "gamma.json", io::gamma_to_json(table, meta, solves));
  else
    io::write_text_file(dir / "gamma.csv", io::gamma_to_csv(table, meta));
  std::cout << "wrote " << table.entries.size() << " gamma values to " << dir.string() << "\n";
  return ok;
}

// ---------------------------------------------------------------------------

struct BudgetArgs {
  std::string config;
  std::string gamma_source;
  std::string gamma_file;
  std::vector<std::string> resonators, packages;
  std::optional<double> fill;
};

int cmd_budget(const Common& c, const BudgetArgs& a) {
  io::ReportMeta meta;
  const auto ds = reference(c);
  meta.input_sha256 = ds.file_sha256;
  auto cfg = config_from(a.config, meta);
  if (!a.gamma_source.empty()) {
    if (a.gamma_source != "reference" && a.gamma_source != "computed")
      throw ConfigError("gamma source must be reference or computed", "gamma-source");
    cfg.budget.gamma_source = a.gamma_source;
  }
  if (a.fill) cfg.budget.fill_fraction = *a.fill;
  const fs::path dir = out_dir(c, cfg.output_dir);
  const std::string fmt = out_format(c, cfg.format);
  const auto designs = pick_designs(ds, a.resonators.empty() ? cfg.resonators : a.resonators);
  auto packages = pick_packages(cfg, a.packages);
  for (auto v : packages)
    if (v == field::PackageVariant::custom) throw ConfigError("budgets need one of the four standard packages", "packages");

  GammaTable gamma = ds.gamma;
  std::map<std::pair<std::string, std::string>, double> surface;
  const bool need_solve = cfg.budget.gamma_source == "computed" || cfg.budget.surface_layer_thickness_m;
  if (!a.gamma_file.empty()) {
    const std::string text = io::read_text_file(a.gamma_file);
    meta.input_sha256["gamma"] = io::sha256_hex(text);
    gamma = fs::path(a.gamma_file).extension() == ".json" ? io::gamma_from_json(text) : io::gamma_from_csv(text);
  } else if (need_solve) {
    const bool diel = cfg.budget.surface_layer_thickness_m.has_value();
    const auto jobs = solve_all(ds, cfg, designs, packages, diel, c.threads);
    if (cfg.budget.gamma_source == "computed") gamma = {};
    for (const auto& j : jobs) {
      const std::string pkg(field::package_id(j.variant));
      if (cfg.budget.gamma_source == "computed")
        for (const auto& [region, g] : j.fields.gamma) gamma.set(j.design.id, pkg, region, {g, false});
      if (diel)
        surface[{j.design.id, pkg}] =
            field::surface_dielectric_loss(*j.fields.solution.dielectric, *cfg.budget.surface_layer_thickness_m,
                                           cfg.budget.surface_layer_epsilon_r, cfg.budget.surface_tan_delta);
    }
  }

  const auto mats = cfg.material_set(ds.material_set());
  std::vector<budget::LossBudget> out;
  for (auto v : packages)
    for (const auto& d : designs) {
      const std::string pkg(field::package_id(v));
      budget::PackageBudgetOptions opt;
      opt.fill_fraction = cfg.budget.fill_fraction;
      opt.include_lid = cfg.budget.include_lid;
      opt.measured_q_i_m = cfg.budget.measured_q_i_m ? cfg.budget.measured_q_i_m : ds.measured(pkg, d.id);
      if (const auto it = surface.find({d.id, pkg}); it != surface.end()) opt.surface_dielectric_q_inverse = it->second;
      auto regions = gamma.regions(d.id, pkg);
      if (regions.empty()) throw DomainError("no gamma values for " + d.id + " in " + pkg);
      out.push_back(budget::package_budget(v, d, regions, mats, opt));
    }

  if (fmt == "json")
    io::write_text_file(dir / "budget.json", io::budgets_to_json(out, meta));
  else
    io::write_text_file(dir / "budget.csv", io::budgets_to_csv(out, meta));

  std::vector<std::string> labels;
  std::vector<double> values;
  for (const auto& b : out) {
    labels.push_back(b.resonator_id + " " + b.package_id + " est");
    values.push_back(b.total_q_inverse);
    if (b.measured_q_i_m) {
      labels.push_back(b.resonator_id + " " + b.package_id + " meas");
      values.push_back(1.0 / *b.measured_q_i_m);
    }
  }
  svg::PlotOptions po;
  po.title = "estimated vs measured loss";
  po.y_label = "1/Q";
  po.width = std::max(640, 60 * static_cast<int>(labels.size()));
  po.timestamp = stamp(c);
  io::write_text_file(dir / "budget.svg", svg::bar_chart(labels, values, po));

  for (const auto& b : out) {
    std::cout << b.resonator_id << " " << b.package_id << " Q=" << io::format_double(b.total_q());
    if (b.measured_q_i_m) std::cout << " measured=" << io::format_double(*b.measured_q_i_m);
    std::cout << "\n";
  }
  return ok;
}

// ---------------------------------------------------------------------------

struct FitArgs {
  std::vector<std::string> traces;
  std::optional<double> power_dbm;
  bool hold_delay = false;
  bool model_covariance = false;
};

fit::FitOptions fit_options(const FitArgs& a) {
  fit::FitOptions o;
  if (a.hold_delay) o.baseline = fit::BaselineMode::hold_delay;
  o.robust_covariance = !a.model_covariance;
  return o;
}

std::string overlay(const fit::ComplexTrace& t, const fit::FitResult& r, const std::string& name,
                    const Common& c) {
  svg::Series data{"data", t.frequencies, {}}, model{"fit", t.frequencies, {}};
  for (std::size_t k = 0; k < t.size(); ++k) {
    data.y.push_back(std::abs(t.s21_mean[k]));
    model.y.push_back(std::abs(fit::model_s21(r.params, t.frequencies[k])));
  }
  svg::PlotOptions po;
  po.title = name;
  po.x_label = "frequency (Hz)";
  po.y_label = "|S21|";
  po.timestamp = stamp(c);
  return svg::line_chart({data, model}, po);
}

int cmd_fit(const Common& c, const FitArgs& a) {
  const fs::path dir = out_dir(c, "out");
  const std::string fmt = out_format(c, "json");
  for (const auto& path : a.traces) {
    io::ReportMeta meta;
    meta.input_sha256["trace"] = io::sha256_file(path);
    auto trace = io::load_trace(path);
    if (a.power_dbm) trace.applied_power_w = fit::dbm_to_watts(*a.power_dbm);
    const auto r = fit::fit(trace, std::nullopt, fit_options(a));
    const std::string stem = fs::path(path).stem().string();
    if (fmt == "json")
      io::write_text_file(dir / ("fit_" + stem + ".json"), io::fit_to_json(r, meta));
    else
      io::write_text_file(dir / ("fit_" + stem + ".csv"), io::fit_to_csv(r, meta));
    io::write_text_file(dir / ("fit_" + stem + ".svg"), overlay(trace, r, stem, c));
    std::cout << stem << " Qi=" << io::format_double(r.q_internal) << " +- " << io::format_double(r.q_internal_stderr)
              << (r.converged ? "" : " (not converged)") << "\n";
  }
  return ok;
}

// ---------------------------------------------------------------------------

struct SweepArgs {
  std::string dir;
  double n_min = 0.0, n_max = INFINITY;
  FitArgs fit;
};

int cmd_sweep(const Common& c, const SweepArgs& a) {
  const fs::path dir = out_dir(c, "out");
  const std::string fmt = out_format(c, "json");
  const fs::path index = fs::path(a.dir) / "powers.csv";
  const std::string text = io::read_text_file(index);
  io::ReportMeta meta;
  meta.input_sha256["powers.csv"] = io::sha256_hex(text);
  const auto t = io::parse_csv(text, index.string());
  const auto cf = t.column("file");
  std::optional<std::size_t> cdbm, cw;
  for (std::size_t k = 0; k < t.header.size(); ++k) {
    if (t.header[k] == "power_dbm") cdbm = k;
    if (t.header[k] == "power_w") cw = k;
  }
  if (!cdbm && !cw) throw ConfigError("powers.csv needs a power_dbm or power_w column", "power_dbm");

  io::SweepReport rep;
  std::vector<fit::SweepPoint> pts;
  for (const auto& row : t.rows) {
    const fs::path trace_path = fs::path(a.dir) / row.cells[cf];
    meta.input_sha256[row.cells[cf]] = io::sha256_file(trace_path);
    auto trace = io::load_trace(trace_path);
    trace.applied_power_w = cw ? t.number(row, *cw) : fit::dbm_to_watts(t.number(row, *cdbm));
    const auto r = fit::fit(trace, std::nullopt, fit_options(a.fit));
    rep.rows.push_back({row.cells[cf], *trace.applied_power_w, *r.photon_number, r.q_internal, r.q_internal_stderr,
                        r.params.q_loaded, r.params.q_c_mag, r.params.f0_hz, r.converged});
    pts.push_back({*r.photon_number, r.q_internal});
  }
  std::sort(rep.rows.begin(), rep.rows.end(),
            [](const io::SweepRow& x, const io::SweepRow& y) { return x.photon_number < y.photon_number; });
  const auto an = fit::power_sweep_analysis(pts, a.n_min, a.n_max);
  rep.q_i_max = an.q_i_max;
  rep.power_law_exponent = an.power_law_exponent;
  rep.n_min = a.n_min;
  rep.n_max = a.n_max;
  if (fmt == "json")
    io::write_text_file(dir / "sweep.json", io::sweep_to_json(rep, meta));
  else
    io::write_text_file(dir / "sweep.csv", io::sweep_to_csv(rep, meta));

  svg::Series s{"Qi", {}, {}};
  for (const auto& r : rep.rows) {
    s.x.push_back(r.photon_number);
    s.y.push_back(r.q_internal);
  }
  svg::PlotOptions po;
  po.title = "internal Q vs photon number";
  po.x_label = "photon number";
  po.y_label = "Qi";
  po.log_x = po.log_y = true;
  po.timestamp = stamp(c);
  io::write_text_file(dir / "sweep.svg", svg::line_chart({s}, po));
  std::cout << "q_i_max=" << io::format_double(rep.q_i_max)
            << " exponent=" << io::format_double(rep.power_law_exponent) << "\n";
  return ok;
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  fit::ResonanceParams p;
  double noise = 0.0;
  int scans = 2;
  std::uint64_t seed = 1;
  std::size_t points = 1601;
  double half_span_lw = 10.0;
  bool aggregated = false;
  std::string name = "trace";
};

int cmd_synth(const Common& c, const SynthArgs& a) {
  const fs::path dir = out_dir(c, "out");
  const auto grid = fit::linewidth_grid(a.p, a.half_span_lw, a.points);
  const auto scans = fit::synth_trace(a.p, grid, a.noise, a.scans, a.seed);
  const fs::path path = dir / (a.name + ".csv");
  if (a.aggregated) {
    if (a.scans < 2) throw DomainError("an aggregated trace needs at least two scans");
    io::write_text_file(path, io::aggregated_trace_to_csv(fit::aggregate_scans(scans)));
  } else {
    io::write_text_file(path, io::raw_trace_to_csv(scans));
  }
  std::cout << "wrote " << path.string() << "\n";
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"package loss budgets and resonator fits"};
  app.set_version_flag("--version", std::string(pkgloss::version));
  app.require_subcommand(1);
  Common c;
  app.add_option("--out", c.out, "output directory");
  app.add_option("--format", c.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--data-dir", c.data_dir, "reference data directory");
  app.add_flag("--no-timestamp", c.no_timestamp, "omit timestamps from SVG output");
  app.add_option("--threads", c.threads, "worker threads for field solves (0: all cores)");

  GammaArgs ga;
  auto* g = app.add_subcommand("gamma", "solve fields and tabulate gamma per region");
  g->add_option("--config", ga.config)->check(CLI::ExistingFile);
  g->add_option("-r,--resonator", ga.resonators);
  g->add_option("-p,--package", ga.packages);
  g->add_option("--cells-per-gap", ga.cells_per_gap);

  BudgetArgs ba;
  auto* b = app.add_subcommand("budget", "loss budget per resonator and package");
  b->add_option("--config", ba.config)->check(CLI::ExistingFile);
  b->add_option("--gamma-source", ba.gamma_source);
  b->add_option("--gamma", ba.gamma_file, "gamma table from an earlier gamma run")->check(CLI::ExistingFile);
  b->add_option("-r,--resonator", ba.resonators);
  b->add_option("-p,--package", ba.packages);
  b->add_option("--fill", ba.fill, "glue fill fraction of a solid backing");

  FitArgs fa;
  auto* f = app.add_subcommand("fit", "fit resonator traces");
  f->add_option("traces", fa.traces)->required()->check(CLI::ExistingFile);
  f->add_option("--power-dbm", fa.power_dbm, "power at the device");
  f->add_flag("--hold-delay", fa.hold_delay, "keep the cable delay at its initial estimate");
  f->add_flag("--model-covariance", fa.model_covariance, "inverse-Hessian covariance instead of the sandwich form");

  SweepArgs sa;
  auto* s = app.add_subcommand("sweep", "fit a power sweep and extract Qi(n)");
  s->add_option("dir", sa.dir)->required()->check(CLI::ExistingDirectory);
  s->add_option("--n-min", sa.n_min);
  s->add_option("--n-max", sa.n_max);
  s->add_flag("--hold-delay", sa.fit.hold_delay);
  s->add_flag("--model-covariance", sa.fit.model_covariance);

  SynthArgs ya;
  auto* y = app.add_subcommand("synth", "write a synthetic scan set");
  y->add_option("--f0", ya.p.f0_hz)->required();
  y->add_option("--ql", ya.p.q_loaded)->required();
  y->add_option("--qc", ya.p.q_c_mag)->required();
  y->add_option("--phi", ya.p.phi);
  y->add_option("--amp", ya.p.amp);
  y->add_option("--alpha", ya.p.alpha);
  y->add_option("--tau", ya.p.tau_s);
  y->add_option("--noise", ya.noise, "noise sigma per quadrature per scan");
  y->add_option("--scans", ya.scans);
  y->add_option("--seed", ya.seed);
  y->add_option("--points", ya.points);
  y->add_option("--span", ya.half_span_lw, "half span in linewidths");
  y->add_option("--name", ya.name);
  y->add_flag("--aggregated", ya.aggregated, "write mean and sigma instead of raw scans");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), usage);
  }

  try {
    if (*g) return cmd_gamma(c, ga);
    if (*b) return cmd_budget(c, ba);
    if (*f) return cmd_fit(c, fa);
    if (*s) return cmd_sweep(c, sa);
    if (*y) return cmd_synth(c, ya);
  } catch (const DomainError& e) {
    return fail("domain", e.what(), domain);
  } catch (const ConfigError& e) {
    return fail("config", e.what(), config);
  } catch (const SolverError& e) {
    return fail("solver", e.what(), solver);
  } catch (const IntegrityError& e) {
    return fail("integrity", e.what(), integrity);
  } catch (const std::exception& e) {
    return fail("other", e.what(), other);
  }
  return usage;
}
