#pragma once

#include "bbsense/control_hamiltonian.hpp"
#include "bbsense/floquet_propagator.hpp"

#include <span>
#include <vector>

namespace bbsense {

/// Dense-step integrator of the interaction-picture Schroedinger equation,
///   i dU_I/dt = b cos(omega t + phase) e^{iGt} Z e^{-iGt} U_I,
/// with the exponential midpoint rule at a fixed step of one
/// `steps_per_period`-th of the drive period. Shares nothing with the Floquet
/// ladder; used as the oracle for it. Returns U_I at each grid time.
std::vector<ComplexMatrix> reference_interaction_grid(const ControlInstance& instance,
                                                      const DriveParams& drive,
                                                      std::span<const Real> t_grid,
                                                      int steps_per_period = 200);

}  // namespace bbsense
