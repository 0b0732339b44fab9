#pragma once

// Metrological witnesses: pure-state QFI, Bures angles, the finite-displacement
// IQFI witness and its ceiling, spectral flatness, and the two-time log-log
// slope test separating linear (no signal) from quadratic (signal) growth.

#include "bbsense/control_hamiltonian.hpp"
#include "bbsense/types.hpp"

#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace bbsense {

struct QfiEstimate {
  Real j{};            // central difference at step db
  Real j_half_step{};  // same at db / 2
  bool converged{};    // |j - j_half_step| <= 1% of j (or both ~0)
};

/// J = 4 (<dpsi|dpsi> - |<psi|dpsi>|^2) with dpsi by central differences.
QfiEstimate qfi_pure(const std::function<ComplexVector(Real)>& state_at, Real b, Real db);

/// Trapezoid rule over (omega, J) pairs; omega strictly ascending.
Real iqfi_quadrature(std::span<const std::pair<Real, Real>> points);

struct CeilingParams {
  Real c1{1};
  Real c2{1};
  Real c_ceiling{1};
};

struct CeilingResult {
  std::optional<Real> k_bound_at_dt;  // C1 T^2 / dt + C2 B^2 T^2 dt
  Real dt_star{};                     // sqrt(C1 / C2) / B
  Real k_ceiling{};                   // 2 sqrt(C1 C2) B T^2, the bound at dt_star
};

CeilingResult iqfi_ceiling(const CeilingParams& params, Real b, Real t_total,
                           std::optional<Real> dt = std::nullopt);

/// Upper bound (C/2) B T^2 on the finite-displacement witness.
Real kfd_upper_bound(const CeilingParams& params, Real b, Real t_total);

/// arcsin(sqrt(p_det)); refuses p outside [0, 1] by more than 1e-12.
Real bures_angle(Real p_det);

struct WitnessPoint {
  Real omega{};
  Real p_det{};
  Real theta{};
  Real s_density{};
};

WitnessPoint make_witness_point(Real omega, Real p_det);

struct FlatnessReport {
  Real band_integral_s{};
  Real mean_s{};
  Real epsilon_t{};
  Real min_ratio{};
  Real kfd{};
  bool degenerate{};       // B == 0 or mean_s == 0
  bool flat{};             // epsilon_t < 1
  bool transfer_bounds_hold{};
  std::optional<bool> kfd_lower_bound_holds;  // only when a floor p0 is supplied
};

/// Requires >= 8 points in ascending omega. With p0 supplied, also checks
/// K_FD >= (4 theta_0^2 / B^2) |delta_omega|, theta_0 = arcsin sqrt(p0).
FlatnessReport flatness_report(std::span<const WitnessPoint> points, const BandSpec& band, Real b,
                               std::optional<Real> p0 = std::nullopt);

/// Pointwise check of |dw| s / (1 + eps) <= S <= |dw| s / (1 - eps) on the grid.
bool transfer_bounds_hold(std::span<const WitnessPoint> points, const FlatnessReport& report,
                          Real delta_omega);

enum class Hypothesis { h0, h1 };

struct SlopeTestResult {
  Real alpha_hat{};
  Hypothesis decision{Hypothesis::h0};
  Real q{};
  long n_shots{};
  Real error_bound{};  // 2 exp(-C n_shots log^2 q)
};

/// alpha = log(K(qT) / K(T)) / log q; H1 iff alpha >= 3/2 (inclusive).
SlopeTestResult two_time_test(Real k_hat_t, Real k_hat_qt, Real q, long n_shots = 1,
                              Real c_test = 1);

/// ceil(log(1/delta) / (c log^2 q)), at least one shot.
long shot_budget(Real q, Real delta_err, Real c_test);

struct SlopeNoiseModel {
  Real relative_noise{0.2};  // per-shot estimate = K (1 + relative_noise * u), u ~ U[-1, 1]
  Real k_scale{1};
  Real base_time{1};
};

/// Surrogate for shot-based estimation of K: per-shot estimates scatter
/// uniformly around K(T) = k T (H0) or k T^2 (H1). Returns the fraction of
/// trials whose decision disagrees with `truth`.
Real slope_test_montecarlo(const SlopeNoiseModel& noise, Hypothesis truth, long n_shots, Real q,
                           long trials, Seed seed);

}  // namespace bbsense
