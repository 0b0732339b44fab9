#pragma once

// Randomized SSH control Hamiltonian for a single register.
//
// The band [omega_min, omega_min + delta_omega] is tiled by interband gaps of
// a periodic Su-Schrieffer-Heeger chain whose two bands sit at +-[A, B] with
// A = omega_min / 2 and B = (omega_min + delta_omega) / 2. The chain is then
// conjugated by a Haar unitary so that its eigenbasis is generic with respect
// to the signal generator D = sum_k Z_k.

#include "bbsense/types.hpp"

#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace bbsense {

/// Search band and problem parameters. Frequencies and amplitudes in rad/s.
struct BandSpec {
  Real omega_min{};
  Real delta_omega{};
  Real b_min{};
  int m{1};
  Real r{};             // delta_omega / (m * b_min)
  Real bucket_width{};  // m * b_min

  Real omega_max() const { return omega_min + delta_omega; }
};

BandSpec make_band(Real omega_min, Real delta_omega, Real b_min, int m);
/// Band with delta_omega = r * m * b_min.
BandSpec make_band_from_ratio(Real omega_min, Real r, Real b_min, int m);
void validate(const BandSpec& band);

/// ceil(r) with a relative guard so that r = 8 * (1 + ulp) still gives 8.
int bucket_count(Real r);

struct SSHParams {
  int cells{};  // L
  Real t1{};
  Real t2{};
  Real a_half{};
  Real b_half{};
  bool periodic{true};

  int dimension() const { return 2 * cells; }
};

/// Nearest power of two to r (linear distance, ties upward), at least 2.
int nearest_power_of_two(Real r);

SSHParams band_to_ssh_params(const BandSpec& band);

/// Single-particle hopping matrix on sites (cell, sublattice), sublattice A at
/// even index 2n and B at 2n + 1.
RealMatrix build_ssh_matrix(const SSHParams& params);

/// Haar unitary from a complex Ginibre matrix: Q of its QR decomposition with
/// the phases of diag(R) absorbed into the columns of Q.
ComplexMatrix sample_haar_unitary(int d, Seed seed);

/// Diagonal of D = sum_k Z_k on n = log2(d) qubits: n - 2 * popcount(i).
RealVector signal_generator_diagonal(int d);

struct ControlInstance {
  int d{};
  int n{};
  RealMatrix g_ssh;
  ComplexMatrix u_conj;
  ComplexMatrix g_single;
  RealVector eigvals;     // ascending
  ComplexMatrix eigvecs;  // columns are eigenvectors of g_single
  RealVector z_diag;      // diagonal of the signal generator
  Seed seed{};

  ComplexMatrix z_single() const { return z_diag.cast<Complex>().asDiagonal(); }
};

ControlInstance make_control_instance(const BandSpec& band, Seed seed);

/// Test hook: conjugate with a caller-supplied unitary instead of a Haar draw.
ControlInstance make_control_instance(const BandSpec& band, Seed seed,
                                      const ComplexMatrix& u_conj);

/// Instance from an arbitrary Hermitian control and diagonal generator. Used
/// for toy models (two-level resonances, commuting controls).
ControlInstance make_instance_from_hamiltonian(const ComplexMatrix& g_single,
                                               const RealVector& z_diag, Seed seed = 0);

struct TransversalityOptions {
  std::vector<Real> tail_thresholds;
  /// Replaces D by another diagonal observable (test hook).
  std::optional<RealVector> observable;
};

struct TransversalityStats {
  std::size_t samples{};
  Real sample_mean{};
  Real sample_var{};
  Real var_std_error{};  // standard error of sample_var
  Real predicted_var{};  // n / (d + 1)
  std::vector<std::pair<Real, Real>> tail_exceedances;  // (t, fraction with |X| >= t)
};

/// Statistics of X_i = <psi_i|D|psi_i> over eigenvectors of freshly conjugated
/// copies of the instance's SSH chain. Refuses fewer than 30 eigenvectors.
TransversalityStats transversality_stats(const ControlInstance& instance, std::size_t n_eigvecs,
                                         const TransversalityOptions& options = {});

/// Largest c with tail(t) <= 2 exp(-c d t^2 / n^2) at every recorded threshold
/// that has a nonzero tail. Returns nullopt when no tail was observed.
std::optional<Real> fit_levy_constant(const TransversalityStats& stats, int d, int n);

struct Gap {
  Real frequency{};
  Real weight{};
  int lower{};
  int upper{};
  bool interband{};
};

struct GapSpectrum {
  std::vector<Gap> gaps;  // ascending in frequency
};

/// All pairs i < j of the (ascending) spectrum with weight |<psi_j|D|psi_i>|^2.
GapSpectrum gap_spectrum(const ControlInstance& instance);

/// 0.1 x median interband weight (0 when there are no interband gaps).
Real default_weight_floor(const GapSpectrum& spectrum);

struct CoverageReport {
  int n_buckets{};
  Real covered_fraction{};
  Real max_detuning{};
  Real weight_floor{};
};

CoverageReport bucket_coverage(const GapSpectrum& spectrum, const BandSpec& band, Real weight_floor);

/// Same as above on bare frequencies (all treated as qualifying).
CoverageReport bucket_coverage(std::span<const Real> frequencies, const BandSpec& band);

}  // namespace bbsense
