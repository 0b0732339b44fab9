// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "bbsense/cli.hpp"
#include "bbsense/config.hpp"
#include "bbsense/control_hamiltonian.hpp"
#include "bbsense/experiment_harness.hpp"
#include "bbsense/floquet_propagator.hpp"
#include "bbsense/ghz_probe.hpp"
#include "bbsense/reference_integrator.hpp"
#include "bbsense/seeding.hpp"
#include "bbsense/witness_stats.hpp"

#include "oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace bbsense;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass{};
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// 1. Desk sweep: runtime and log-log slope.
Verdict scaling_law() {
  const AppConfig cfg = parse_config(load_json_file(BBSENSE_SOURCE_DIR "/configs/fig2_desk.json"));
  const auto t0 = std::chrono::steady_clock::now();
  const ScalingDataset data = run_sweep(cfg.sweep, {static_cast<int>(std::max(1u, std::thread::hardware_concurrency())), {}});
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  int valid = 0, d_max = 0;
  for (const CellStats& c : data.cells) valid += c.n_valid;
  for (const StoppingResult& s : data.samples) d_max = std::max(d_max, s.d);
  if (!data.fit) return {false, fmt("no fit; %d valid samples, %.1f s", valid, secs)};
  const LogLogFit& f = *data.fit;
  const bool pass = secs <= 900 && d_max <= 64 && f.slope >= 0.8 && f.slope <= 1.2;
  return {pass, fmt("slope %.4f (95%% CI %.3f..%.3f, need [0.8, 1.2]), %d/%zu valid, d <= %d, %.1f s", f.slope,
                    f.ci95_low, f.ci95_high, valid, data.samples.size(), d_max, secs)};
}

// 2. Fast GHZ amplitude against brute force.
Verdict ghz_equivalence() {
  Real worst = 0;
  for (int d : {2, 4, 8})
    for (int m : {1, 2, 3})
      for (int s = 0; s < 50; ++s) {
        const ComplexMatrix u = sample_haar_unitary(d, derive_seed(0xacce, {Seed(d), Seed(m), Seed(s)}));
        worst = std::max(worst, std::abs(ghz_amplitude_fast(u, m) - ghz_amplitude_bruteforce(u, m)));
      }
  return {worst <= 1e-10, fmt("max |fast - brute| %.3g (tol 1e-10), 450 unitaries", worst)};
}

// 3. Floquet against the dense-step integrator on the full stopping grid.
Verdict floquet_vs_dense() {
  Real worst = 0, worst_before_stop = 0;
  for (const auto& [r, seed] : {std::pair{4.0, Seed(31)}, std::pair{8.0, Seed(32)}}) {
    const BandSpec band = make_band_from_ratio(1.0, r, 1e-3, 1);
    const ControlInstance inst = make_control_instance(band, seed);
    const DriveParams drive{band.b_min, band.omega_min + 0.37 * band.delta_omega, 0};
    const std::vector<Real> grid = stopping_grid(GridPolicy{}, predicted_scale(band));
    const FloquetSolution sol = assemble_floquet(inst, drive);
    const DetectionTrace tr = detection_trace(sol, 1, grid, 0.1);
    const auto ref = reference_interaction_grid(inst, drive, grid);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const Real e = operator_norm(interaction_propagator(sol, grid[k]) - ref[k]);
      worst = std::max(worst, e);
      if (!tr.stop_time || grid[k] <= *tr.stop_time) worst_before_stop = std::max(worst_before_stop, e);
    }
  }
  return {worst <= 1e-3, fmt("max ||u_int - u_ref|| %.3g over t in [0.01, 20] X (tol 1e-3); %.3g up to the stopping time; "
                             "d in {4, 8}, b/omega = 1e-3",
                             worst, worst_before_stop)};
}

// 4. Null calibration.
Verdict null_calibration() {
  Real worst = 0;
  int traces = 0;
  for (Real r : {8.0, 64.0})
    for (int m : {1, 2, 3}) {
      const BandSpec band = make_band_from_ratio(1.0, r, 1e-3, m);
      const ControlInstance inst = make_control_instance(band, derive_seed(0x6e756c6c, {Seed(r), Seed(m)}));
      const FloquetSolution sol = assemble_floquet(inst, {0, band.omega_min + 0.5 * band.delta_omega, 0});
      const DetectionTrace tr = detection_trace(sol, m, stopping_grid(GridPolicy{}, predicted_scale(band)), 0.1);
      for (std::size_t k = 0; k < tr.t_grid.size(); ++k) worst = std::max({worst, tr.p_det_series[k], tr.l1_series[k]});
      ++traces;
    }
  return {worst <= 1e-10, fmt("max p_det and L1 at B = 0: %.3g (tol 1e-10), %d full-grid traces, d up to 64", worst, traces)};
}

// 5. Transversality variance.
Verdict transversality() {
  bool pass = true;
  std::string detail;
  for (int d : {8, 16, 64}) {
    const BandSpec band = make_band_from_ratio(1.0, d, 1e-3, 1);
    const ControlInstance inst = make_control_instance(band, derive_seed(0x7472, {Seed(d)}));
    const TransversalityStats st = transversality_stats(inst, 2000);
    const Real z = std::abs(st.sample_var - st.predicted_var) / st.var_std_error;
    pass = pass && z <= 3;
    detail += fmt("d=%d var %.4f vs %.4f (|z| %.2f); ", d, st.sample_var, st.predicted_var, z);
  }
  return {pass, detail + "2000 eigenvectors each, tol 3 sigma"};
}

// 6. Product-formula error.
Verdict trotter() {
  const BandSpec band = make_band_from_ratio(1.0, 8, 0.05, 1);
  const ControlInstance inst = make_control_instance(band, derive_seed(0x74726f74, {0}));
  const Real omega = band.omega_min + 0.5 * band.delta_omega;
  const Real period = 2 * std::numbers::pi / omega;
  std::vector<Real> dts;
  for (Real f : {1.0 / 256, 1.0 / 128, 1.0 / 64, 1.0 / 32}) dts.push_back(f * period);
  const TrotterScan base = trotter_error_scan(inst, {band.b_min, omega, 0}, 4 * period, dts);
  const TrotterScan doubled = trotter_error_scan(inst, {2 * band.b_min, omega, 0}, 4 * period, dts);
  if (!base.slope) return {false, "degenerate scan"};
  Real lo = std::numeric_limits<Real>::infinity(), hi = 0;
  for (std::size_t i = 0; i < dts.size(); ++i) {
    const Real ratio = doubled.error_norm[i] / base.error_norm[i];
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  const bool pass = *base.slope >= 0.7 && *base.slope <= 1.3 && lo >= 1.5 && hi <= 2.5;
  return {pass, fmt("slope %.3f (need [0.7, 1.3]); doubling-B ratio %.3f..%.3f (need [1.5, 2.5])", *base.slope, lo, hi)};
}

// 7. Lineshape on a resonant two-level reduction, and the crowding sum.
Verdict lineshape() {
  const Real b = 1e-3;
  ComplexMatrix g(2, 2);
  g << 0, 0.5, 0.5, 0;
  const ControlInstance inst = make_instance_from_hamiltonian(g, oracle::popcount_generator(2));
  std::mt19937_64 rng(0x6c696e65);
  std::uniform_real_distribution<Real> pick(std::numbers::pi / b, 3 * std::numbers::pi / b);
  std::vector<Real> times(20);
  for (Real& t : times) t = pick(rng);
  std::sort(times.begin(), times.end());
  auto mean_pdet = [&](Real detuning) {
    const DetectionTrace tr = detection_trace(assemble_floquet(inst, {b, 1 + detuning, 0}), 1, times, 1,
                                              {.statistic = StopStatistic::p_det});
    Real acc = 0;
    for (Real p : tr.p_det_series) acc += p;
    return acc / static_cast<Real>(times.size());
  };
  const Real p0 = mean_pdet(0);
  Real worst_factor = 1;
  for (Real k : {-5.0, -3.0, -2.0, -1.0, -0.5, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0}) {
    const Real ratio = mean_pdet(k * b) / p0;
    const Real eta = lorentzian_envelope(k * b, b);
    worst_factor = std::max({worst_factor, ratio / eta, eta / ratio});
  }
  const Real crowd = crowding_sum(1000000);
  const bool shape_ok = worst_factor <= 2;
  const bool crowd_ok = std::abs(crowd - 0.5767) <= 1e-3;
  return {shape_ok && crowd_ok,
          fmt("lineshape worst factor %.3f over |delta| <= 5 mB, 20 seeds (%s); crowding sum %.6f vs 0.5767 +- 1e-3 (%s)",
              worst_factor, shape_ok ? "ok" : "fail", crowd, crowd_ok ? "ok" : "fail")};
}

// 8. Two-time test error decay and shot budget.
Verdict two_time() {
  const SlopeNoiseModel noise;  // +-20%
  std::vector<Real> rates;
  for (long n : {4L, 16L, 64L})
    rates.push_back(std::max(slope_test_montecarlo(noise, Hypothesis::h0, n, 4, 2000, 0x7474),
                             slope_test_montecarlo(noise, Hypothesis::h1, n, 4, 2000, 0x7474)));
  const bool monotone = rates[1] <= rates[0] && rates[2] <= rates[1];
  const long budget = shot_budget(2, 1e-6, 1);
  const bool pass = monotone && rates[2] <= 0.05 && budget == 29;
  return {pass, fmt("error rates %.4f, %.4f, %.4f at n_shots 4, 16, 64 (q = 4, 2000 trials); shot_budget(q=2, 1e-6) = %ld",
                    rates[0], rates[1], rates[2], budget)};
}

// 9. Flatness machinery.
Verdict flatness() {
  const BandSpec unit_band = make_band(1, 0.5, 1e-3, 1);
  std::vector<WitnessPoint> flat;
  for (int i = 0; i < 16; ++i) flat.push_back(make_witness_point(1 + 0.5 * i / 15, 0.04));
  const FlatnessReport synth = flatness_report(flat, unit_band, 1e-3);
  const bool synth_ok = synth.epsilon_t <= 1e-12 && std::abs(synth.min_ratio - 1) <= 1e-12;

  int checked = 0, violations = 0, grids = 0;
  for (Real ratio : {4.0, 8.0, 16.0, 32.0})
    for (Real mult : {0.05, 0.25, 1.0}) {
      const BandSpec band = make_band_from_ratio(1.0, ratio, 1e-3, 1);
      const FlatnessScan scan = flatness_scan(band, derive_seed(0x666c, {Seed(ratio), bits_of(mult)}), band.b_min,
                                              mult * predicted_scale(band), 64);
      ++grids;
      Real s_total = 0;
      for (std::size_t i = 0; i + 1 < scan.points.size(); ++i)
        s_total += (scan.points[i + 1].omega - scan.points[i].omega) *
                   (scan.points[i + 1].s_density + scan.points[i].s_density) / 2;
      const Real mean = s_total / band.delta_omega;
      Real eps = 0;
      for (const WitnessPoint& p : scan.points) eps = std::max(eps, std::abs(p.s_density / mean - 1));
      if (eps >= 1) continue;
      ++checked;
      for (const WitnessPoint& p : scan.points) {
        const bool lower = band.delta_omega * p.s_density / (1 + eps) <= s_total * (1 + 1e-12);
        const bool upper = s_total <= band.delta_omega * p.s_density / (1 - eps) * (1 + 1e-12);
        if (!lower || !upper) ++violations;
      }
    }
  return {synth_ok && violations == 0 && checked > 0,
          fmt("synthetic flat: epsilon %.2g, min_ratio %.6f; transfer bounds checked on %d of %d grids with "
              "epsilon < 1, %d pointwise violations",
              synth.epsilon_t, synth.min_ratio, checked, grids, violations)};
}

// 10. Bitwise determinism of every subcommand, independent of --jobs.
struct CliRun {
  int code{};
  std::string out;
};

CliRun cli(std::vector<std::string> args) {
  args.insert(args.begin(), "bbsense");
  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Output lines that name the output directory differ by construction.
std::string strip_paths(const std::string& text) {
  std::istringstream in(text);
  std::string kept;
  for (std::string line; std::getline(in, line);)
    if (line.rfind("csv ", 0) != 0 && line.rfind("json ", 0) != 0) kept += line + '\n';
  return kept;
}

Verdict determinism() {
  const fs::path root = fs::temp_directory_path() / "bbsense_acceptance";
  fs::remove_all(root);
  fs::create_directories(root);
  const std::string config = (root / "cfg.json").string();
  std::ofstream(config) << R"({"omega_min": 1, "n_samples": 3,
    "grid": {"m": [1, 2], "r": [8, 16], "b_min_fraction": [0.001]},
    "flatness": {"ratios": [4, 8], "n_omega": 16}})";

  struct Case {
    std::string name;
    std::vector<std::string> args;
    std::vector<std::string> files;
  };
  const std::vector<Case> cases{
      {"sweep", {"sweep", "-c", config}, {"scaling.csv", "scaling.json"}},
      {"instance", {"instance", "-c", config}, {"instance.json"}},
      {"flatness", {"flatness", "-c", config}, {"inset.csv"}},
      {"trotter-check", {"trotter-check", "-c", config}, {"trotter.csv"}},
      {"slope-test", {"slope-test", "--k-t", "1.3", "--k-qt", "9.1", "--q", "4", "--delta", "1e-3"}, {}},
      {"validate", {"validate"}, {}},
  };
  std::vector<std::string> broken;
  for (const Case& c : cases) {
    std::vector<std::string> outputs;
    std::vector<std::vector<std::string>> contents;
    for (const char* jobs : {"1", "3", "1"}) {
      const fs::path dir = root / (c.name + "_" + std::to_string(outputs.size()));
      std::vector<std::string> args = c.args;
      if (!c.files.empty()) args.insert(args.end(), {"-o", dir.string(), "-j", jobs});
      const CliRun r = cli(args);
      if (r.code != 0) broken.push_back(c.name + " (exit " + std::to_string(r.code) + ")");
      outputs.push_back(strip_paths(r.out));
      std::vector<std::string> files;
      for (const std::string& f : c.files) files.push_back(slurp(dir / f));
      contents.push_back(files);
    }
    if (outputs[0] != outputs[1] || outputs[0] != outputs[2] || contents[0] != contents[1] || contents[0] != contents[2])
      broken.push_back(c.name);
  }
  fs::remove_all(root);
  std::string detail = "6 subcommands, 3 runs each with --jobs 1, 3, 1";
  for (const std::string& b : broken) detail += "; differs: " + b;
  return {broken.empty(), detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"scaling law", scaling_law},         {"GHZ oracle equivalence", ghz_equivalence},
      {"Floquet vs dense integrator", floquet_vs_dense}, {"null calibration", null_calibration},
      {"transversality", transversality},   {"Trotter error", trotter},
      {"lineshape and crowding", lineshape}, {"two-time test", two_time},
      {"flatness machinery", flatness},     {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    if (!v.pass) ++failed;
    std::cout << "criterion " << (i + 1) << ' ' << (v.pass ? "PASS" : "FAIL") << "  " << criteria[i].first << ": "
              << v.detail << std::endl;
  }
  std::cout << (criteria.size() - failed) << '/' << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
