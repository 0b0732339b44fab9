#include "bbsense/ghz_probe.hpp"

#include <algorithm>

namespace bbsense {

namespace {

long checked_dimension(long d, int m) {
  require(m >= 1, "ghz brute force: m must be >= 1");
  long total = 1;
  for (int k = 0; k < m; ++k) {
    total *= d;
    require(total <= kBruteForceDimLimit,
            "ghz brute force: d^m exceeds 2^16; use ghz_amplitude_fast instead");
  }
  return total;
}

}  // namespace

ComplexVector ghz_state_bruteforce(const ComplexMatrix& u, int m) {
  require(u.rows() == u.cols() && u.rows() > 0, "ghz brute force: U must be square");
  const long d = u.rows();
  const long total = checked_dimension(d, m);

  // Index of |i i ... i> is i * (1 + d + ... + d^{m-1}).
  long stride = 0;
  for (long p = 1, k = 0; k < m; ++k, p *= d) stride += p;
  ComplexVector state = ComplexVector::Zero(total);
  const Real amp = 1.0 / std::sqrt(static_cast<Real>(d));
  for (long i = 0; i < d; ++i) state(i * stride) = amp;

  // Apply U to tensor factor k, viewing the state as (left, d, right) row-major.
  using RowMajor = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  long right = total / d;
  for (int k = 0; k < m; ++k) {
    const long left = total / (d * right);
    for (long l = 0; l < left; ++l) {
      Eigen::Map<RowMajor> slab(state.data() + l * d * right, d, right);
      slab = (u * slab).eval();
    }
    right /= d;
  }
  return state;
}

Complex ghz_amplitude_bruteforce(const ComplexMatrix& u, int m) {
  const ComplexVector state = ghz_state_bruteforce(u, m);
  const long d = u.rows();
  long stride = 0;
  for (long p = 1, k = 0; k < m; ++k, p *= d) stride += p;
  Complex overlap(0, 0);
  for (long i = 0; i < d; ++i) overlap += state(i * stride);
  return overlap / std::sqrt(static_cast<Real>(d));
}

RealVector ghz_diag_populations_bruteforce(const ComplexMatrix& u, int m) {
  const ComplexVector state = ghz_state_bruteforce(u, m);
  const long d = u.rows();
  long stride = 0;
  for (long p = 1, k = 0; k < m; ++k, p *= d) stride += p;
  RealVector p(d);
  for (long i = 0; i < d; ++i) p(i) = std::norm(state(i * stride));
  return p;
}

GhzReadout ghz_readout(const ComplexMatrix& u_int, int m) {
  GhzReadout out;
  out.amplitude = ghz_amplitude_fast(u_int, m);
  const Real raw = 1.0 - std::norm(out.amplitude);
  out.p_det = std::clamp<Real>(raw, 0, 1);
  out.clamped = std::abs(raw - out.p_det) > 1e-9;
  out.diag_populations = ghz_diag_populations(u_int, m);
  const Real uniform = 1.0 / static_cast<Real>(u_int.rows());
  out.l1_statistic = (out.diag_populations.array() - uniform).abs().sum();
  return out;
}

DetectionTrace detection_trace(const FloquetSolution& sol, int m, std::span<const Real> t_grid,
                               Real threshold, const TraceOptions& options) {
  require(threshold >= 0, "detection_trace: threshold must be non-negative");
  require(m >= 1, "detection_trace: m must be >= 1");
  DetectionTrace trace;
  trace.threshold = threshold;
  trace.statistic = options.statistic;
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    require(t_grid[i] >= 0 && (i == 0 || t_grid[i] > t_grid[i - 1]),
            "detection_trace: grid must be ascending and non-negative");
    const GhzReadout r = ghz_readout(interaction_propagator(sol, t_grid[i]), m);
    trace.t_grid.push_back(t_grid[i]);
    trace.p_det_series.push_back(r.p_det);
    trace.l1_series.push_back(r.l1_statistic);
    if (r.clamped) ++trace.clamp_events;
    const Real stat = options.statistic == StopStatistic::l1_diagonal ? r.l1_statistic : r.p_det;
    if (!trace.stop_time && stat >= threshold) {
      trace.stop_time = t_grid[i];
      if (options.stop_at_crossing) break;
    }
  }
  return trace;
}

std::vector<Real> geometric_grid(Real t_min, Real t_max, Real factor) {
  require(t_min > 0 && t_max >= t_min, "geometric_grid: need 0 < t_min <= t_max");
  require(factor > 1, "geometric_grid: growth factor must exceed 1");
  std::vector<Real> grid;
  for (int k = 0;; ++k) {
    const Real t = t_min * std::pow(factor, k);
    if (t > t_max * (1 + 1e-12)) break;
    grid.push_back(t);
  }
  return grid;
}

Real crowding_sum(long terms) {
  require(terms >= 0, "crowding_sum: terms must be non-negative");
  // Summed from the small tail upward to limit round-off.
  Real sum = 0;
  for (long n = terms; n >= 1; --n) {
    const auto x = static_cast<Real>(n);
    sum += 1.0 / (1.0 + x * x);
  }
  return sum;
}

}  // namespace bbsense
