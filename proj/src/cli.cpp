#include "bbsense/cli.hpp"

#include "bbsense/config.hpp"
#include "bbsense/experiment_harness.hpp"
#include "bbsense/floquet_propagator.hpp"
#include "bbsense/persist.hpp"
#include "bbsense/seeding.hpp"
#include "bbsense/validation.hpp"
#include "bbsense/witness_stats.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>

namespace bbsense {

using nlohmann::json;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir{"."};
  std::vector<std::string> overrides;
  std::string units;
  int jobs{1};
  int verbosity{0};
};

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required) {
  auto* opt = cmd->add_option("-c,--config", args.config_path, "JSON run configuration")->check(CLI::ExistingFile);
  if (config_required) opt->required();
  cmd->add_option("-o,--out", args.out_dir, "output directory")->capture_default_str();
  cmd->add_option("--overrides", args.overrides, "dotted key=value overrides, applied after the file");
  cmd->add_option("--units", args.units, "unit convention for omega_min")->check(CLI::IsMember({"rad", "hz"}));
  cmd->add_option("-j,--jobs", args.jobs, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_flag("-v,--verbose", args.verbosity, "progress and diagnostics on stderr");
}

// File < BBSENSE_SEED < --units < --overrides.
AppConfig resolve_config(const CommonArgs& args) {
  json doc = args.config_path.empty() ? json::object() : load_json_file(args.config_path);
  apply_seed_environment(doc);
  if (!args.units.empty()) doc["units"] = args.units;
  for (const std::string& o : args.overrides) apply_override(doc, o);
  return parse_config(doc);
}

std::string output_path(const CommonArgs& args, const std::string& name) {
  std::filesystem::create_directories(args.out_dir);
  return (std::filesystem::path(args.out_dir) / name).string();
}

void print_kv(std::ostream& out, const std::string& key, const std::string& value) {
  out << key << ' ' << value << '\n';
}

int cmd_sweep(const CommonArgs& args, std::ostream& out, std::ostream& err) {
  const AppConfig cfg = resolve_config(args);
  SweepOptions options;
  options.jobs = args.jobs;
  options.log = [&](const std::string& msg) { err << "warning: " << msg << '\n'; };
  if (args.verbosity > 0)
    err << "sweep: " << cfg.sweep.cells.size() << " cells x " << cfg.sweep.n_samples << " samples, "
        << args.jobs << " jobs\n";
  const ScalingDataset data = run_sweep(cfg.sweep, options);

  const std::string csv = output_path(args, "scaling.csv");
  const std::string js = output_path(args, "scaling.json");
  write_text_file(csv, render_csv(scaling_table(data), run_metadata(cfg)));
  write_text_file(js, scaling_document(data, cfg).dump(2) + "\n");

  int valid = 0;
  for (const CellStats& c : data.cells) valid += c.n_valid;
  print_kv(out, "cells", std::to_string(data.cells.size()));
  print_kv(out, "samples", std::to_string(data.samples.size()));
  print_kv(out, "valid", std::to_string(valid));
  const Real nan = std::numeric_limits<Real>::quiet_NaN();
  const LogLogFit fit = data.fit.value_or(LogLogFit{nan, nan, nan, nan, nan, nan, 0});
  print_kv(out, "slope", format_real(fit.slope));
  print_kv(out, "slope_ci95", format_real(fit.ci95_low) + " " + format_real(fit.ci95_high));
  print_kv(out, "intercept", format_real(fit.intercept));
  print_kv(out, "residual_rms", format_real(fit.residual_rms));
  print_kv(out, "fit_points", std::to_string(fit.n_points));
  print_kv(out, "csv", csv);
  print_kv(out, "json", js);
  return 0;
}

int cmd_instance(const CommonArgs& args, std::ostream& out) {
  const AppConfig cfg = resolve_config(args);
  const InstanceSettings& in = cfg.instance;
  SweepConfig sweep = cfg.sweep;
  sweep.cells = {{in.m, in.r, in.b_min_fraction}};
  const Cell cell = canonical_cells(sweep).front();
  const BandSpec band = cell_band(sweep, cell);
  const StoppingResult result = run_instance(sweep, cell, in.sample_index);
  const ControlInstance instance = make_control_instance(band, derive_seed(result.seed, {1}));
  const GapSpectrum spectrum = gap_spectrum(instance);
  const Real floor = default_weight_floor(spectrum);
  const CoverageReport coverage = bucket_coverage(spectrum, band, floor);

  // Two-level estimate from the qualifying gap nearest to the sampled carrier.
  std::optional<Real> rabi;
  Real best = std::numeric_limits<Real>::infinity();
  for (const Gap& g : spectrum.gaps) {
    if (g.weight < floor || g.weight <= 0) continue;
    const Real det = std::abs(g.frequency - result.omega_sampled);
    if (det < best) {
      best = det;
      rabi = std::sqrt(band.r) / (band.m * band.b_min * std::sqrt(g.weight));
    }
  }

  json gaps = json::array();
  for (const Gap& g : spectrum.gaps)
    gaps.push_back({{"frequency", g.frequency}, {"weight", g.weight}, {"lower", g.lower}, {"upper", g.upper},
                    {"interband", g.interband}});
  json eig = json::array();
  for (Eigen::Index i = 0; i < instance.eigvals.size(); ++i) eig.push_back(instance.eigvals(i));
  const json doc = {
      {"metadata", run_metadata(cfg)},
      {"config", config_to_json(cfg)},
      {"instance",
       {{"d", instance.d},
        {"n", instance.n},
        {"seed", instance.seed},
        {"omega_min", band.omega_min},
        {"delta_omega", band.delta_omega},
        {"b_min", band.b_min},
        {"eigenvalues", eig},
        {"gaps", gaps}}},
      {"coverage",
       {{"n_buckets", coverage.n_buckets},
        {"covered_fraction", coverage.covered_fraction},
        {"max_detuning", coverage.max_detuning},
        {"weight_floor", coverage.weight_floor}}},
      {"stopping",
       {{"omega_sampled", result.omega_sampled},
        {"stop_time", result.stop_time ? json(*result.stop_time) : json(nullptr)},
        {"final_statistic", result.final_statistic},
        {"x_value", predicted_scale(band)},
        {"rabi_estimate", rabi ? json(*rabi) : json(nullptr)}}},
  };
  const std::string path = output_path(args, "instance.json");
  write_text_file(path, doc.dump(2) + "\n");

  print_kv(out, "d", std::to_string(instance.d));
  print_kv(out, "gaps", std::to_string(spectrum.gaps.size()));
  print_kv(out, "covered_fraction", format_real(coverage.covered_fraction));
  print_kv(out, "max_detuning", format_real(coverage.max_detuning));
  print_kv(out, "omega_sampled", format_real(result.omega_sampled));
  print_kv(out, "stop_time", result.stop_time ? format_real(*result.stop_time) : "nan");
  print_kv(out, "rabi_estimate", rabi ? format_real(*rabi) : "nan");
  print_kv(out, "json", path);
  return 0;
}

int cmd_flatness(const CommonArgs& args, std::ostream& out, std::ostream& err) {
  const AppConfig cfg = resolve_config(args);
  const FlatnessSettings& f = cfg.flatness;
  const Real omega_min = cfg.sweep.omega_min();
  const Real b_min = f.b_min_fraction * omega_min;
  const Real b = cfg.sweep.signal_scale * b_min;
  CsvTable table{{"ratio", "d", "min_ratio", "epsilon_t", "kfd", "degenerate", "flat"}, {}};
  for (Real ratio : f.ratios) {
    const BandSpec band = make_band_from_ratio(omega_min, ratio, b_min, f.m);
    const Seed seed = derive_seed(cfg.sweep.seed_root, {0x666c6174, bits_of(ratio), Seed(f.seed_index)});
    const ControlInstance instance = make_control_instance(band, seed);
    const FlatnessScan scan = flatness_scan(instance, band, b, f.t_eval_multiplier * predicted_scale(band),
                                            f.n_omega, cfg.sweep.max_drive_ratio);
    const FlatnessReport& r = scan.report;
    if (r.degenerate) err << "warning: ratio " << format_real(ratio) << ": degenerate report (mean s = 0)\n";
    table.rows.push_back({format_real(ratio), std::to_string(instance.d), format_real(r.min_ratio),
                          format_real(r.epsilon_t), format_real(r.kfd), r.degenerate ? "1" : "0",
                          r.flat ? "1" : "0"});
    if (args.verbosity > 0) err << "flatness: ratio " << format_real(ratio) << " done\n";
  }
  const std::string path = output_path(args, "inset.csv");
  write_text_file(path, render_csv(table, run_metadata(cfg)));
  for (const auto& row : table.rows) print_kv(out, "row", row[0] + " " + row[2] + " " + row[3]);
  print_kv(out, "csv", path);
  return 0;
}

int cmd_trotter(const CommonArgs& args, std::ostream& out) {
  const AppConfig cfg = resolve_config(args);
  const TrotterSettings& t = cfg.trotter;
  const Real omega_min = cfg.sweep.omega_min();
  const Real b = t.b_fraction * omega_min;
  const BandSpec band = make_band_from_ratio(omega_min, t.r, b, t.m);
  ControlInstance instance =
      make_control_instance(band, derive_seed(cfg.sweep.seed_root, {0x74726f74, Seed(t.seed_index)}));
  if (t.commuting) {
    const ComplexMatrix g = instance.eigvals.cast<Complex>().asDiagonal();
    instance = make_instance_from_hamiltonian(g, instance.z_diag, instance.seed);
  }
  const Real omega = band.omega_min + 0.5 * band.delta_omega;
  const Real period = kTwoPi / omega;
  std::vector<Real> dts;
  for (Real f : t.dt_periods) dts.push_back(f * period);
  const Real t_final = t.t_final_periods * period;
  const TrotterScan scan = trotter_error_scan(instance, {b, omega, 0}, t_final, dts);
  const TrotterScan doubled = trotter_error_scan(instance, {2 * b, omega, 0}, t_final, dts);

  CsvTable table{{"dt", "error_norm", "error_norm_2b", "ratio_2b"}, {}};
  for (std::size_t i = 0; i < dts.size(); ++i) {
    const Real ratio = scan.error_norm[i] > 0 ? doubled.error_norm[i] / scan.error_norm[i]
                                              : std::numeric_limits<Real>::quiet_NaN();
    table.rows.push_back({format_real(dts[i]), format_real(scan.error_norm[i]), format_real(doubled.error_norm[i]),
                          format_real(ratio)});
  }
  const std::string path = output_path(args, "trotter.csv");
  write_text_file(path, render_csv(table, run_metadata(cfg)));
  print_kv(out, "degenerate", scan.degenerate ? "1" : "0");
  print_kv(out, "slope", scan.slope ? format_real(*scan.slope) : "nan");
  print_kv(out, "slope_2b", doubled.slope ? format_real(*doubled.slope) : "nan");
  for (const auto& row : table.rows) print_kv(out, "row", row[0] + " " + row[1] + " " + row[3]);
  print_kv(out, "csv", path);
  return 0;
}

struct SlopeArgs {
  double k_t{};
  double k_qt{};
  double q{};
  long n_shots{1};
  double delta{};
  double c{1};
  bool as_json{false};
};

int cmd_slope(const SlopeArgs& a, std::ostream& out) {
  const SlopeTestResult r = two_time_test(a.k_t, a.k_qt, a.q, a.n_shots, a.c);
  std::optional<long> budget;
  if (a.delta > 0) budget = shot_budget(a.q, a.delta, a.c);
  const std::string decision = r.decision == Hypothesis::h1 ? "H1" : "H0";
  if (a.as_json) {
    json doc = {{"alpha_hat", r.alpha_hat}, {"decision", decision}, {"q", r.q},
                {"n_shots", r.n_shots},     {"error_bound", r.error_bound}};
    doc["shot_budget"] = budget ? json(*budget) : json(nullptr);
    out << doc.dump() << '\n';
    return 0;
  }
  print_kv(out, "alpha_hat", format_real(r.alpha_hat));
  print_kv(out, "decision", decision);
  print_kv(out, "error_bound", format_real(r.error_bound));
  if (budget) print_kv(out, "shot_budget", std::to_string(*budget));
  return 0;
}

int cmd_validate(bool fault, std::ostream& out) {
  ValidationOptions options;
  options.fault_ghz_exponent = fault;
  const std::vector<CheckResult> checks = run_validation_suite(options);
  bool ok = true;
  char line[256];
  std::snprintf(line, sizeof line, "%-30s %-14s %-10s %s\n", "check", "value", "tolerance", "status");
  out << line;
  for (const CheckResult& c : checks) {
    std::snprintf(line, sizeof line, "%-30s %-14.6g %-10.3g %s\n", c.name.c_str(), c.value, c.tolerance,
                  c.pass ? "PASS" : "FAIL");
    out << line;
    ok = ok && c.pass;
  }
  for (const CheckResult& c : checks) out << "# " << c.name << ": " << c.detail << '\n';
  return ok ? 0 : 1;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"bbsense: broadband AC detection simulator", "bbsense"};
  app.require_subcommand(1);

  CommonArgs sweep_args, instance_args, flatness_args, trotter_args;
  auto* sweep = app.add_subcommand("sweep", "stopping-time sweep and scaling fit");
  add_common(sweep, sweep_args, true);
  auto* instance = app.add_subcommand("instance", "one control instance and its stopping time");
  add_common(instance, instance_args, false);
  auto* flatness = app.add_subcommand("flatness", "minimum normalized witness density per band ratio");
  add_common(flatness, flatness_args, false);
  auto* trotter = app.add_subcommand("trotter-check", "product-formula error against step size");
  add_common(trotter, trotter_args, false);

  SlopeArgs slope_args;
  auto* slope = app.add_subcommand("slope-test", "two-time log-log slope test");
  slope->add_option("--k-t", slope_args.k_t, "IQFI estimate at T")->required();
  slope->add_option("--k-qt", slope_args.k_qt, "IQFI estimate at qT")->required();
  slope->add_option("--q", slope_args.q, "time ratio q > 1")->required();
  slope->add_option("--n-shots", slope_args.n_shots, "shots per time")->capture_default_str();
  slope->add_option("--delta", slope_args.delta, "target error probability for the shot budget");
  slope->add_option("--c", slope_args.c, "test constant C")->capture_default_str();
  slope->add_flag("--json", slope_args.as_json, "machine-readable output");

  std::string fault;
  auto* validate = app.add_subcommand("validate", "run the built-in oracle suite");
  validate->add_option("--inject-fault", fault, "mutation hook")->check(CLI::IsMember({"ghz-exponent"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*sweep) return cmd_sweep(sweep_args, out, err);
    if (*instance) return cmd_instance(instance_args, out);
    if (*flatness) return cmd_flatness(flatness_args, out, err);
    if (*trotter) return cmd_trotter(trotter_args, out);
    if (*slope) return cmd_slope(slope_args, out);
    if (*validate) return cmd_validate(!fault.empty(), out);
  } catch (const SchemaError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const PreconditionError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace bbsense
