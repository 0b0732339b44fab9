#pragma once

// Single-register evolution under H(t) = G + b cos(omega t + phase) Z using a
// Floquet ladder truncated to the harmonics k in {-1, 0, +1}.
//
//        | G + omega   (b/2) Z      0         |
//   F =  | (b/2) Z     G            (b/2) Z   |
//        | 0           (b/2) Z      G - omega |
//
// e^{-iFt} applied to [0; I; 0] gives blocks Y_{+1}, Y_0, Y_{-1} and
//   U_phys(t) = e^{+i omega t} Y_{+1} + Y_0 + e^{-i omega t} Y_{-1},
//   U_int(t)  = e^{+i G t} U_phys(t).

#include "bbsense/control_hamiltonian.hpp"
#include "bbsense/types.hpp"

#include <optional>
#include <span>
#include <vector>

namespace bbsense {

struct DriveParams {
  Real b_eff{};
  Real omega{};
  Real phase{};
};

struct FloquetOptions {
  /// Largest accepted b_eff / omega; the three-harmonic ladder assumes b << omega.
  Real max_drive_ratio{0.05};
};

struct FloquetSolution {
  int d{};
  DriveParams drive;
  Seed instance_seed{};

  ComplexMatrix f_matrix;  // computational basis, (3d) x (3d)
  RealVector eigvals;      // ascending
  ComplexMatrix eigvecs;   // computational basis

  // The ladder is diagonalized in the eigenbasis of G; these members keep that
  // representation for accurate phase bookkeeping in propagate().
  RealVector g_eigvals;
  ComplexMatrix g_eigvecs;
  RealVector ladder_diagonal;   // diagonal of F in the G eigenbasis
  ComplexMatrix eigvecs_local;  // eigenvectors of F in the G eigenbasis
};

struct PropagatorSample {
  Real t{};
  ComplexMatrix y_plus;
  ComplexMatrix y_zero;
  ComplexMatrix y_minus;
  ComplexMatrix u_phys;
  ComplexMatrix u_int;
};

FloquetSolution assemble_floquet(const ControlInstance& instance, const DriveParams& drive,
                                 const FloquetOptions& options = {});

PropagatorSample propagate(const FloquetSolution& sol, Real t);

/// U_int(t) only; the cheap path used by detection traces.
ComplexMatrix interaction_propagator(const FloquetSolution& sol, Real t);

/// propagate() on every grid point, reusing the stored diagonalization.
std::vector<PropagatorSample> propagate_grid(const FloquetSolution& sol, std::span<const Real> t_grid);

/// First-order product formula prod_k exp(-i G dt_k) exp(-i b cos(omega t_k + phase) Z dt_k),
/// t_k = k dt, later factors on the left. A non-integer t_final / dt ends with
/// one shortened step so the total time is exactly t_final.
ComplexMatrix trotter_propagator(const ControlInstance& instance, const DriveParams& drive,
                                 Real t_final, Real dt);

struct TrotterScan {
  Real t_final{};
  Real reference_dt{};
  std::vector<Real> dt;
  std::vector<Real> error_norm;
  std::optional<Real> slope;  // absent when all errors are at round-off level
  bool degenerate{};
};

/// Operator-norm error of trotter_propagator(dt) against a reference with
/// step min(dt_list) / 32, plus the log-log slope of error against dt.
TrotterScan trotter_error_scan(const ControlInstance& instance, const DriveParams& drive,
                               Real t_final, std::span<const Real> dt_list);

}  // namespace bbsense
