#include "bbsense/validation.hpp"

#include "bbsense/control_hamiltonian.hpp"
#include "bbsense/experiment_harness.hpp"
#include "bbsense/floquet_propagator.hpp"
#include "bbsense/ghz_probe.hpp"
#include "bbsense/reference_integrator.hpp"
#include "bbsense/seeding.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace bbsense {

namespace {

std::string describe(const char* fmt, Real a, Real b = 0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, fmt, a, b);
  return buf;
}

CheckResult ghz_check(const ValidationOptions& options) {
  Real worst = 0;
  int worst_d = 0, worst_m = 0;
  for (int d : {2, 4, 8})
    for (int m : {1, 2, 3})
      for (int s = 0; s < 50; ++s) {
        const ComplexMatrix u = sample_haar_unitary(d, derive_seed(options.seed, {0x676877, Seed(d), Seed(m), Seed(s)}));
        const Complex fast = ghz_amplitude_fast(u, options.fault_ghz_exponent ? m + 1 : m);
        const Real diff = std::abs(fast - ghz_amplitude_bruteforce(u, m));
        if (diff > worst) {
          worst = diff;
          worst_d = d;
          worst_m = m;
        }
      }
  return {"ghz_fast_vs_bruteforce", worst, 1e-10, worst <= 1e-10,
          "max |fast - brute| over d in {2,4,8}, m in {1,2,3}, 50 unitaries each" +
              (worst > 0 ? describe("; worst at d=%g, m=%g", worst_d, worst_m) : std::string())};
}

struct DriveCase {
  ControlInstance instance;
  DriveParams drive;
  std::vector<Real> grid;
};

// d = 8 instance at the given b / omega in units where omega_min = 1.
DriveCase drive_case(Seed seed, Real b) {
  const BandSpec band = make_band_from_ratio(1.0, 8, b, 1);
  DriveCase c{make_control_instance(band, seed), {b, band.omega_min + 0.5 * band.delta_omega, 0}, {}};
  const Real t_max = 0.5 * predicted_scale(band);
  for (int k = 1; k <= 8; ++k) c.grid.push_back(t_max * k / 8);
  return c;
}

CheckResult floquet_check(const DriveCase& c) {
  const FloquetSolution sol = assemble_floquet(c.instance, c.drive);
  const std::vector<ComplexMatrix> ref = reference_interaction_grid(c.instance, c.drive, c.grid);
  Real worst = 0;
  for (std::size_t k = 0; k < c.grid.size(); ++k)
    worst = std::max(worst, operator_norm(interaction_propagator(sol, c.grid[k]) - ref[k]));
  return {"floquet_vs_dense_integrator", worst, 1e-3, worst <= 1e-3,
          "d=8, b/omega=1e-4, t up to X/2, exponential midpoint at 200 steps per period"};
}

CheckResult unitarity_check(const DriveCase& c) {
  const FloquetSolution sol = assemble_floquet(c.instance, c.drive);
  Real worst = 0;
  for (Real t : c.grid) worst = std::max(worst, unitarity_defect(interaction_propagator(sol, t)));
  return {"floquet_unitarity_defect", worst, 1e-4, worst <= 1e-4,
          "||U^dag U - I||, d=8, b/omega=1e-5, t up to X/2"};
}

CheckResult null_check(const DriveCase& c) {
  DriveParams null_drive = c.drive;
  null_drive.b_eff = 0;
  const FloquetSolution sol = assemble_floquet(c.instance, null_drive);
  Real worst = 0;
  for (Real t : c.grid)
    for (int m : {1, 2, 3}) {
      const GhzReadout r = ghz_readout(interaction_propagator(sol, t), m);
      worst = std::max({worst, r.p_det, r.l1_statistic});
    }
  return {"null_calibration", worst, 1e-10, worst <= 1e-10, "max p_det and L1 statistic at B = 0"};
}

CheckResult transversality_check(Seed seed) {
  const BandSpec band = make_band_from_ratio(1.0, 16, 1e-3, 1);
  const ControlInstance instance = make_control_instance(band, seed);
  const TransversalityStats st = transversality_stats(instance, 2000);
  const Real z = std::abs(st.sample_var - st.predicted_var) / st.var_std_error;
  return {"transversality_variance", z, 3, z <= 3,
          describe("d=16: sample variance %.5f vs n/(d+1) = %.5f, |z| reported", st.sample_var, st.predicted_var)};
}

}  // namespace

std::vector<CheckResult> run_validation_suite(const ValidationOptions& options) {
  std::vector<CheckResult> out;
  out.push_back(ghz_check(options));
  const Seed seed = derive_seed(options.seed, {0x666c6f71});
  const DriveCase c = drive_case(seed, 1e-4);
  out.push_back(floquet_check(c));
  out.push_back(unitarity_check(drive_case(seed, 1e-5)));
  out.push_back(null_check(c));
  out.push_back(transversality_check(derive_seed(options.seed, {0x7472})));
  return out;
}

}  // namespace bbsense
