#pragma once

// Readout of the m-register GHZ probe |psi0> = d^{-1/2} sum_i |i>^{(x)m} after
// each register evolves by the same interaction-picture unitary U.
//
// Because the probe only populates the diagonal strings |i...i>,
//   <psi0| U^{(x)m} |psi0> = (1/d) sum_{ij} U_ij^m
//   |<i...i| U^{(x)m} |psi0>|^2 = (1/d) |sum_j U_ij^m|^2
// so the fast path costs O(d^2) regardless of m.

#include "bbsense/floquet_propagator.hpp"
#include "bbsense/types.hpp"

#include <cmath>
#include <optional>
#include <span>
#include <vector>

namespace bbsense {

template <typename T>
std::complex<T> integer_power(std::complex<T> base, int exponent) {
  std::complex<T> result(1, 0);
  while (exponent > 0) {
    if (exponent & 1) result *= base;
    base *= base;
    exponent >>= 1;
  }
  return result;
}

template <typename Derived>
std::complex<typename Derived::RealScalar> ghz_amplitude_fast(const Eigen::MatrixBase<Derived>& u, int m) {
  require(m >= 1, "ghz_amplitude_fast: m must be >= 1");
  require(u.rows() == u.cols() && u.rows() > 0, "ghz_amplitude_fast: U must be square");
  using R = typename Derived::RealScalar;
  std::complex<R> sum(0, 0);
  for (Eigen::Index j = 0; j < u.cols(); ++j)
    for (Eigen::Index i = 0; i < u.rows(); ++i) sum += integer_power(std::complex<R>(u(i, j)), m);
  return sum / static_cast<R>(u.rows());
}

/// p_i = (1/d) |sum_j U_ij^m|^2.
template <typename Derived>
Eigen::Matrix<typename Derived::RealScalar, Eigen::Dynamic, 1> ghz_diag_populations(
    const Eigen::MatrixBase<Derived>& u, int m) {
  require(m >= 1, "ghz_diag_populations: m must be >= 1");
  require(u.rows() == u.cols() && u.rows() > 0, "ghz_diag_populations: U must be square");
  using R = typename Derived::RealScalar;
  const auto d = u.rows();
  Eigen::Matrix<R, Eigen::Dynamic, 1> p(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    std::complex<R> row(0, 0);
    for (Eigen::Index j = 0; j < d; ++j) row += integer_power(std::complex<R>(u(i, j)), m);
    p(i) = std::norm(row) / static_cast<R>(d);
  }
  return p;
}

inline constexpr long kBruteForceDimLimit = 1L << 16;

/// U^{(x)m} |psi0> built explicitly in the d^m-dimensional space.
ComplexVector ghz_state_bruteforce(const ComplexMatrix& u, int m);

Complex ghz_amplitude_bruteforce(const ComplexMatrix& u, int m);

/// Populations of |i>^{(x)m} read off the brute-force state.
RealVector ghz_diag_populations_bruteforce(const ComplexMatrix& u, int m);

struct GhzReadout {
  Complex amplitude;
  Real p_det{};
  RealVector diag_populations;
  Real l1_statistic{};
  bool clamped{};  // p_det needed clamping by more than 1e-9
};

/// Amplitude, detection probability, diagonal populations and their L1
/// distance from the uniform B = 0 reference.
GhzReadout ghz_readout(const ComplexMatrix& u_int, int m);

enum class StopStatistic {
  l1_diagonal,  // sum_i |p_i - 1/d|
  p_det,        // 1 - |<psi0|U^{(x)m}|psi0>|^2
};

struct DetectionTrace {
  std::vector<Real> t_grid;
  std::vector<Real> p_det_series;
  std::vector<Real> l1_series;
  std::optional<Real> stop_time;
  Real threshold{};
  StopStatistic statistic{StopStatistic::l1_diagonal};
  int clamp_events{};
};

struct TraceOptions {
  StopStatistic statistic{StopStatistic::l1_diagonal};
  /// Stop evaluating after the first crossing; the stored grid is truncated there.
  bool stop_at_crossing{false};
};

DetectionTrace detection_trace(const FloquetSolution& sol, int m, std::span<const Real> t_grid,
                               Real threshold, const TraceOptions& options = {});

/// t_min * factor^k for k = 0, 1, ... while <= t_max.
std::vector<Real> geometric_grid(Real t_min, Real t_max, Real factor);

/// (mB)^2 / ((mB)^2 + detuning^2).
inline Real lorentzian_envelope(Real detuning, Real collective_rate) {
  require(collective_rate > 0, "lorentzian_envelope: mB must be positive");
  const Real w2 = collective_rate * collective_rate;
  return w2 / (w2 + detuning * detuning);
}

/// sum_{n=1}^{terms} eta(n mB) / eta(0) = sum 1 / (1 + n^2).
Real crowding_sum(long terms);

}  // namespace bbsense
