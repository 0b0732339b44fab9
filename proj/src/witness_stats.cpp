#include "bbsense/witness_stats.hpp"

#include "bbsense/seeding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace bbsense {

namespace {

Real qfi_central(const std::function<ComplexVector(Real)>& state_at, Real b, Real db) {
  const ComplexVector psi = state_at(b);
  const ComplexVector up = state_at(b + db);
  const ComplexVector down = state_at(b - db);
  for (const ComplexVector* v : {&psi, &up, &down})
    require(std::abs(v->squaredNorm() - 1.0) <= 1e-8, "qfi_pure: state is not normalized");
  require(up.size() == psi.size() && down.size() == psi.size(), "qfi_pure: dimension changed");
  const ComplexVector deriv = (up - down) / (2 * db);
  return 4.0 * (deriv.squaredNorm() - std::norm(psi.dot(deriv)));
}

}  // namespace

QfiEstimate qfi_pure(const std::function<ComplexVector(Real)>& state_at, Real b, Real db) {
  require(db > 0, "qfi_pure: db must be positive");
  QfiEstimate out;
  out.j = qfi_central(state_at, b, db);
  out.j_half_step = qfi_central(state_at, b, db / 2);
  out.converged = std::abs(out.j - out.j_half_step) <= 0.01 * std::abs(out.j) + 1e-9;
  return out;
}

Real iqfi_quadrature(std::span<const std::pair<Real, Real>> points) {
  require(points.size() >= 2, "iqfi_quadrature: need at least two points");
  Real sum = 0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    require(points[i].first > points[i - 1].first, "iqfi_quadrature: omega grid must be ascending");
    sum += 0.5 * (points[i].second + points[i - 1].second) * (points[i].first - points[i - 1].first);
  }
  return sum;
}

CeilingResult iqfi_ceiling(const CeilingParams& params, Real b, Real t_total, std::optional<Real> dt) {
  require(params.c1 > 0 && params.c2 > 0 && params.c_ceiling > 0, "iqfi_ceiling: constants must be positive");
  require(b > 0 && t_total > 0, "iqfi_ceiling: B and T must be positive");
  CeilingResult out;
  const Real t2 = t_total * t_total;
  if (dt) {
    require(*dt > 0, "iqfi_ceiling: dt must be positive");
    out.k_bound_at_dt = params.c1 * t2 / *dt + params.c2 * b * b * t2 * *dt;
  }
  out.dt_star = std::sqrt(params.c1 / params.c2) / b;
  out.k_ceiling = 2 * std::sqrt(params.c1 * params.c2) * b * t2;
  return out;
}

Real kfd_upper_bound(const CeilingParams& params, Real b, Real t_total) {
  require(params.c_ceiling > 0, "kfd_upper_bound: C must be positive");
  return 0.5 * params.c_ceiling * b * t_total * t_total;
}

Real bures_angle(Real p_det) {
  require(p_det >= -1e-12 && p_det <= 1 + 1e-12, "bures_angle: p_det outside [0, 1]");
  return std::asin(std::sqrt(std::clamp<Real>(p_det, 0, 1)));
}

WitnessPoint make_witness_point(Real omega, Real p_det) {
  WitnessPoint w;
  w.omega = omega;
  w.p_det = std::clamp<Real>(p_det, 0, 1);
  w.theta = bures_angle(p_det);
  w.s_density = w.theta * w.theta;
  return w;
}

bool transfer_bounds_hold(std::span<const WitnessPoint> points, const FlatnessReport& report,
                          Real delta_omega) {
  if (report.degenerate || !report.flat) return false;
  const Real eps = report.epsilon_t;
  const Real s_total = report.band_integral_s;
  const Real slack = 1e-12 * std::max<Real>(s_total, std::numeric_limits<Real>::min());
  return std::all_of(points.begin(), points.end(), [&](const WitnessPoint& p) {
    const Real lower = delta_omega * p.s_density / (1 + eps);
    const Real upper = delta_omega * p.s_density / (1 - eps);
    return lower <= s_total + slack && s_total <= upper + slack;
  });
}

FlatnessReport flatness_report(std::span<const WitnessPoint> points, const BandSpec& band, Real b,
                               std::optional<Real> p0) {
  require(points.size() >= 8, "flatness_report: need at least 8 grid points");
  require(b >= 0, "flatness_report: B must be non-negative");
  std::vector<std::pair<Real, Real>> s_curve;
  s_curve.reserve(points.size());
  for (const WitnessPoint& p : points) s_curve.emplace_back(p.omega, p.s_density);

  FlatnessReport out;
  out.band_integral_s = iqfi_quadrature(s_curve);
  out.mean_s = out.band_integral_s / band.delta_omega;
  out.kfd = (b > 0 && out.band_integral_s > 0) ? 4 * out.band_integral_s / (b * b) : 0;
  // With B = 0 only round-off survives in s.
  out.degenerate = !(b > 0) || !(out.mean_s > 0);
  if (out.degenerate) {
    out.epsilon_t = std::numeric_limits<Real>::infinity();
    out.min_ratio = 0;
    return out;
  }
  Real eps = 0;
  Real min_ratio = std::numeric_limits<Real>::infinity();
  for (const WitnessPoint& p : points) {
    const Real ratio = p.s_density / out.mean_s;
    eps = std::max(eps, std::abs(ratio - 1));
    min_ratio = std::min(min_ratio, ratio);
  }
  out.epsilon_t = eps;
  out.min_ratio = min_ratio;
  out.flat = eps < 1;
  out.transfer_bounds_hold = transfer_bounds_hold(points, out, band.delta_omega);
  if (p0) {
    require(b > 0, "flatness_report: the K_FD floor check needs B > 0");
    const Real theta0 = bures_angle(*p0);
    out.kfd_lower_bound_holds = out.kfd >= 4 * theta0 * theta0 / (b * b) * band.delta_omega;
  }
  return out;
}

SlopeTestResult two_time_test(Real k_hat_t, Real k_hat_qt, Real q, long n_shots, Real c_test) {
  require(q > 1, "two_time_test: q must exceed 1");
  require(k_hat_t > 0 && k_hat_qt > 0, "two_time_test: IQFI estimates must be positive");
  require(n_shots >= 1 && c_test > 0, "two_time_test: need n_shots >= 1 and C > 0");
  SlopeTestResult out;
  out.q = q;
  out.n_shots = n_shots;
  out.alpha_hat = std::log2(k_hat_qt / k_hat_t) / std::log2(q);
  out.decision = out.alpha_hat >= 1.5 ? Hypothesis::h1 : Hypothesis::h0;
  const Real lq = std::log(q);
  out.error_bound = 2 * std::exp(-c_test * static_cast<Real>(n_shots) * lq * lq);
  return out;
}

long shot_budget(Real q, Real delta_err, Real c_test) {
  require(q > 1, "shot_budget: q must exceed 1");
  require(delta_err > 0 && delta_err < 1, "shot_budget: delta must lie in (0, 1)");
  require(c_test > 0, "shot_budget: C must be positive");
  const Real lq = std::log(q);
  const Real x = -std::log(delta_err) / (c_test * lq * lq);
  return std::max(1L, static_cast<long>(std::ceil(x - 1e-9 * std::max<Real>(1, x))));
}

Real slope_test_montecarlo(const SlopeNoiseModel& noise, Hypothesis truth, long n_shots, Real q,
                           long trials, Seed seed) {
  require(trials >= 100, "slope_test_montecarlo: need at least 100 trials");
  require(n_shots >= 1, "slope_test_montecarlo: need at least one shot");
  require(noise.relative_noise >= 0 && noise.relative_noise < 1,
          "slope_test_montecarlo: relative noise must lie in [0, 1)");
  const Real power = truth == Hypothesis::h0 ? 1 : 2;
  auto k_true = [&](Real t) { return noise.k_scale * std::pow(t, power); };
  const Real t0 = noise.base_time;
  long errors = 0;
  for (long trial = 0; trial < trials; ++trial) {
    std::mt19937_64 rng(derive_seed(seed, {static_cast<Seed>(trial)}));
    std::uniform_real_distribution<Real> u(-1, 1);
    auto estimate = [&](Real t) {
      Real sum = 0;
      for (long s = 0; s < n_shots; ++s) sum += k_true(t) * (1 + noise.relative_noise * u(rng));
      return sum / static_cast<Real>(n_shots);
    };
    const Real k_t = estimate(t0);
    const Real k_qt = estimate(q * t0);
    if (two_time_test(k_t, k_qt, q, n_shots).decision != truth) ++errors;
  }
  return static_cast<Real>(errors) / static_cast<Real>(trials);
}

}  // namespace bbsense
