#include "bbsense/control_hamiltonian.hpp"
#include "bbsense/floquet_propagator.hpp"
#include "bbsense/ghz_probe.hpp"
#include "bbsense/reference_integrator.hpp"
#include "bbsense/seeding.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

using namespace bbsense;

namespace {

ComplexMatrix pauli_x() {
  ComplexMatrix x(2, 2);
  x << 0, 1, 1, 0;
  return x;
}

ComplexMatrix pauli_z() {
  ComplexMatrix z(2, 2);
  z << 1, 0, 0, -1;
  return z;
}

// G = (w0/2) (cos t sigma_z + sin t sigma_x); Z is the one-qubit popcount generator.
ControlInstance tilted_qubit(Real w0, Real tilt) {
  const ComplexMatrix g = 0.5 * w0 * (std::cos(tilt) * pauli_z() + std::sin(tilt) * pauli_x());
  return make_instance_from_hamiltonian(g, oracle::popcount_generator(2));
}

Real oracle_l1(const ComplexMatrix& u, int m) {
  const RealVector p = ghz_diag_populations_bruteforce(u, m);
  return (p.array() - 1.0 / static_cast<Real>(u.rows())).abs().sum();
}

}  // namespace

TEST_CASE("fast amplitude hand examples") {
  ComplexMatrix flip = pauli_x();
  CHECK(std::abs(ghz_amplitude_fast(flip, 2) - Complex(1, 0)) < 1e-15);
  // The flip maps |0> + |1> to itself, so m = 1 also gives 1.
  CHECK(std::abs(ghz_amplitude_fast(flip, 1) - Complex(1, 0)) < 1e-15);
  ComplexMatrix phase_flip = pauli_z();
  CHECK(std::abs(ghz_amplitude_fast(phase_flip, 1)) < 1e-15);
  CHECK(std::abs(ghz_amplitude_fast(phase_flip, 2) - Complex(1, 0)) < 1e-15);
  for (int m : {1, 2, 5}) CHECK(std::abs(ghz_amplitude_fast(ComplexMatrix::Identity(4, 4), m) - Complex(1, 0)) < 1e-15);
  const RealVector p = ghz_diag_populations(flip, 1);
  CHECK(p(0) == doctest::Approx(0.5));
  CHECK(p(1) == doctest::Approx(0.5));
  CHECK_THROWS_AS(ghz_amplitude_fast(flip, 0), PreconditionError);
}

TEST_CASE("brute force against an explicit Kronecker product") {
  for (int d : {2, 4}) {
    for (int m : {1, 2, 3}) {
      const ComplexMatrix u = sample_haar_unitary(d, derive_seed(11, {Seed(d), Seed(m)}));
      const ComplexVector psi = oracle::ghz_state(d, m);
      const ComplexVector evolved = oracle::kron_power(u, m) * psi;
      const ComplexVector mine = ghz_state_bruteforce(u, m);
      CHECK((evolved - mine).norm() <= 1e-12);
      CHECK(std::abs(psi.dot(evolved) - ghz_amplitude_bruteforce(u, m)) <= 1e-12);
    }
  }
  const ComplexMatrix u = sample_haar_unitary(3, 4);
  CHECK(std::abs(ghz_amplitude_bruteforce(u, 1) - u.sum() / 3.0) < 1e-13);
  CHECK(std::abs(ghz_amplitude_bruteforce(ComplexMatrix::Identity(4, 4), 3) - Complex(1, 0)) < 1e-14);
}

TEST_CASE("fast path equals brute force") {
  Real worst = 0;
  for (int d : {2, 4, 8})
    for (int m : {1, 2, 3})
      for (int s = 0; s < 50; ++s) {
        const ComplexMatrix u = sample_haar_unitary(d, derive_seed(97, {Seed(d), Seed(m), Seed(s)}));
        worst = std::max(worst, std::abs(ghz_amplitude_fast(u, m) - ghz_amplitude_bruteforce(u, m)));
        if (s < 5)
          worst = std::max(worst, (ghz_diag_populations(u, m) - ghz_diag_populations_bruteforce(u, m)).cwiseAbs().maxCoeff());
      }
  MESSAGE("max fast/brute difference " << worst);
  CHECK(worst <= 1e-12);
}

TEST_CASE("brute force dimension guard") {
  CHECK_THROWS_AS(ghz_state_bruteforce(ComplexMatrix::Identity(16, 16), 5), PreconditionError);
  CHECK_NOTHROW(ghz_state_bruteforce(ComplexMatrix::Identity(16, 16), 4));
  // The fast path has no such limit.
  CHECK(std::abs(ghz_amplitude_fast(ComplexMatrix::Identity(16, 16), 12) - Complex(1, 0)) < 1e-14);
}

TEST_CASE("readout invariants") {
  const GhzReadout id = ghz_readout(ComplexMatrix::Identity(8, 8), 3);
  CHECK(id.p_det == 0);
  CHECK(id.l1_statistic == doctest::Approx(0).epsilon(1e-15));
  CHECK((id.diag_populations.array() - 0.125).abs().maxCoeff() < 1e-15);

  for (int s = 0; s < 20; ++s) {
    const ComplexMatrix u = sample_haar_unitary(8, derive_seed(5, {Seed(s)}));
    const int m = 1 + s % 3;
    const GhzReadout r = ghz_readout(u, m);
    CHECK(r.p_det >= 0);
    CHECK(r.p_det <= 1);
    CHECK(r.diag_populations.sum() <= 1 + 1e-10);
    // Global phase covariance.
    const GhzReadout rp = ghz_readout(std::polar(1.0, 0.37 * (s + 1)) * u, m);
    CHECK(std::abs(rp.p_det - r.p_det) <= 1e-12);
    CHECK((rp.diag_populations - r.diag_populations).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("null drive never crosses") {
  const BandSpec band = make_band_from_ratio(1.0, 8, 1e-3, 2);
  const ControlInstance inst = make_control_instance(band, 3);
  const FloquetSolution sol = assemble_floquet(inst, {0, band.omega_min + 0.5 * band.delta_omega, 0});
  const std::vector<Real> grid = geometric_grid(1, 1e5, 1.3);
  for (int m : {1, 2}) {
    const DetectionTrace tr = detection_trace(sol, m, grid, 0.1);
    CHECK_FALSE(tr.stop_time.has_value());
    CHECK(tr.l1_series.size() == grid.size());
    CHECK(*std::max_element(tr.l1_series.begin(), tr.l1_series.end()) <= 1e-10);
    CHECK(*std::max_element(tr.p_det_series.begin(), tr.p_det_series.end()) <= 1e-10);
  }
}

TEST_CASE("zero threshold stops at the first grid point") {
  const ControlInstance inst = tilted_qubit(1, 0.7);
  const FloquetSolution sol = assemble_floquet(inst, {1e-3, 1, 0});
  const std::vector<Real> grid{2, 4, 8};
  const DetectionTrace tr = detection_trace(sol, 1, grid, 0);
  REQUIRE(tr.stop_time.has_value());
  CHECK(*tr.stop_time == 2);
  CHECK_THROWS_AS(detection_trace(sol, 1, grid, -0.1), PreconditionError);
  const std::vector<Real> bad{2, 1};
  CHECK_THROWS_AS(detection_trace(sol, 1, bad, 0.1), PreconditionError);
}

TEST_CASE("on-resonance crossing matches the dense-step integrator") {
  const Real b = 1e-3;
  const ControlInstance inst = tilted_qubit(1, 0.9);
  const DriveParams drive{b, 1, 0};
  const FloquetSolution sol = assemble_floquet(inst, drive);
  const std::vector<Real> grid = geometric_grid(0.01 / b, 20 / b, 1.05);
  const DetectionTrace tr = detection_trace(sol, 1, grid, 0.1, {.statistic = StopStatistic::l1_diagonal, .stop_at_crossing = true});
  REQUIRE(tr.stop_time.has_value());
  const auto mine = static_cast<long>(std::find(grid.begin(), grid.end(), *tr.stop_time) - grid.begin());

  const std::vector<Real> head(grid.begin(), grid.begin() + std::min<long>(mine + 3, static_cast<long>(grid.size())));
  const auto ref = reference_interaction_grid(inst, drive, head);
  long ref_index = -1;
  for (std::size_t k = 0; k < head.size() && ref_index < 0; ++k)
    if (oracle_l1(ref[k], 1) >= 0.1) ref_index = static_cast<long>(k);
  MESSAGE("crossing at t = " << *tr.stop_time << " (index " << mine << "), reference index " << ref_index);
  REQUIRE(ref_index >= 0);
  CHECK(std::abs(ref_index - mine) <= 1);
}

TEST_CASE("Lorentzian envelope") {
  CHECK(lorentzian_envelope(0, 2.5) == 1);
  CHECK(lorentzian_envelope(2.5, 2.5) == doctest::Approx(0.5));
  CHECK(lorentzian_envelope(-7.5, 2.5) == doctest::Approx(0.1));
  CHECK_THROWS_AS(lorentzian_envelope(1, 0), PreconditionError);
}

TEST_CASE("crowding sum") {
  Real forward = 0;
  for (long n = 1; n <= 1000000; ++n) forward += 1.0 / (1.0 + static_cast<Real>(n) * n);
  const Real closed = 0.5 * (std::numbers::pi / std::tanh(std::numbers::pi) - 1);
  const Real s = crowding_sum(1000000);
  CHECK(s == doctest::Approx(forward).epsilon(1e-12));
  // The truncated tail is about 1/N.
  CHECK(std::abs(s - closed) <= 2e-6);
  CHECK(crowding_sum(0) == 0);
  CHECK(crowding_sum(1) == 0.5);
}

TEST_CASE("crowding sum against the quoted 0.5767" * doctest::may_fail()) {
  MESSAGE("direct sum " << crowding_sum(1000000));
  CHECK(std::abs(crowding_sum(1000000) - 0.5767) <= 1e-3);
}

TEST_CASE("lineshape follows the Lorentzian envelope") {
  // G = (w0/2) sigma_x, so the probe is a G eigenstate and p_det is the
  // Rabi transition probability with Rabi rate b.
  const Real b = 1e-3;
  const ControlInstance inst = tilted_qubit(1, std::numbers::pi / 2);
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<Real> pick(std::numbers::pi / b, 3 * std::numbers::pi / b);
  std::vector<Real> times(20);
  for (Real& t : times) t = pick(rng);
  std::sort(times.begin(), times.end());

  auto mean_pdet = [&](Real detuning) {
    const FloquetSolution sol = assemble_floquet(inst, {b, 1 + detuning, 0});
    const DetectionTrace tr = detection_trace(sol, 1, times, 1, {.statistic = StopStatistic::p_det});
    Real acc = 0;
    for (Real p : tr.p_det_series) acc += p;
    return acc / static_cast<Real>(times.size());
  };
  const Real p0 = mean_pdet(0);
  REQUIRE(p0 > 0.2);
  for (Real k : {-5.0, -2.0, -1.0, -0.5, 0.5, 1.0, 2.0, 3.0, 5.0}) {
    const Real ratio = mean_pdet(k * b) / p0;
    const Real eta = lorentzian_envelope(k * b, b);
    INFO("detuning " << k << " mB: ratio " << ratio << ", envelope " << eta);
    CHECK(ratio <= 2 * eta);
    CHECK(ratio >= 0.5 * eta);
  }
}

TEST_CASE("GHZ enhancement on a two-level reduction") {
  // On resonance U_I ~ exp(-i (b t / 2) sigma_z), so p_det = sin^2(m b t / 2).
  const Real b = 1e-3;
  const ControlInstance inst = tilted_qubit(1, std::numbers::pi / 2);
  const FloquetSolution sol = assemble_floquet(inst, {b, 1, 0});
  std::vector<Real> grid;
  for (int k = 1; k <= 4000; ++k) grid.push_back(k * 1.0);
  Real t1 = 0;
  for (int m : {1, 2, 4}) {
    const DetectionTrace tr = detection_trace(sol, m, grid, 0.5, {.statistic = StopStatistic::p_det, .stop_at_crossing = true});
    REQUIRE(tr.stop_time.has_value());
    if (m == 1) t1 = *tr.stop_time;
    const Real scaled = *tr.stop_time * m / t1;
    MESSAGE("m=" << m << ": t = " << *tr.stop_time << ", m t / t_1 = " << scaled);
    CHECK(scaled == doctest::Approx(1).epsilon(0.2));
    CHECK(*tr.stop_time == doctest::Approx(std::numbers::pi / (2 * m * b)).epsilon(0.05));
  }
}

TEST_CASE("geometric grid") {
  const std::vector<Real> g = geometric_grid(1, 10, 2);
  REQUIRE(g.size() == 4);
  CHECK(g.back() == 8);
  CHECK(geometric_grid(3, 3, 1.5).size() == 1);
  CHECK_THROWS_AS(geometric_grid(0, 1, 2), PreconditionError);
  CHECK_THROWS_AS(geometric_grid(1, 2, 1), PreconditionError);
}
