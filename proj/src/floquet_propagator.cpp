#include "bbsense/floquet_propagator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace bbsense {

namespace {

// Blocks are ordered k = +1, 0, -1 from the top.
constexpr int kHarmonic[3] = {+1, 0, -1};

ComplexMatrix ladder(const ComplexMatrix& g, const ComplexMatrix& z, const DriveParams& drive) {
  const auto d = g.rows();
  const ComplexMatrix id = ComplexMatrix::Identity(d, d);
  const Complex raise = 0.5 * drive.b_eff * std::polar(1.0, drive.phase);  // couples k <- k - 1
  const Complex lower = std::conj(raise);                                 // couples k <- k + 1
  ComplexMatrix f = ComplexMatrix::Zero(3 * d, 3 * d);
  for (int s = 0; s < 3; ++s) f.block(s * d, s * d, d, d) = g + (kHarmonic[s] * drive.omega) * id;
  f.block(0, d, d, d) = raise * z;
  f.block(d, 0, d, d) = lower * z;
  f.block(d, 2 * d, d, d) = raise * z;
  f.block(2 * d, d, d, d) = lower * z;
  return f;
}

}  // namespace

FloquetSolution assemble_floquet(const ControlInstance& instance, const DriveParams& drive,
                                 const FloquetOptions& options) {
  require(drive.b_eff >= 0, "assemble_floquet: b_eff must be non-negative");
  require(drive.omega > 0, "assemble_floquet: omega must be positive");
  require(drive.b_eff <= options.max_drive_ratio * drive.omega,
          "assemble_floquet: b_eff / omega exceeds the three-harmonic validity limit");
  const int d = instance.d;

  FloquetSolution sol;
  sol.d = d;
  sol.drive = drive;
  sol.instance_seed = instance.seed;
  sol.g_eigvals = instance.eigvals;
  sol.g_eigvecs = instance.eigvecs;
  sol.f_matrix = ladder(instance.g_single, instance.z_single(), drive);

  const ComplexMatrix z_local = instance.eigvecs.adjoint() * instance.z_single() * instance.eigvecs;
  const ComplexMatrix g_local = instance.eigvals.cast<Complex>().asDiagonal();
  ComplexMatrix f_local = ladder(g_local, (z_local + z_local.adjoint()) / 2.0, drive);
  sol.ladder_diagonal = f_local.diagonal().real();

  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(f_local);
  if (es.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "assemble_floquet: eigensolver failed (dim " << 3 * d << ", ||F||_F = " << f_local.norm()
        << ", b_eff = " << drive.b_eff << ", omega = " << drive.omega << ")";
    throw NumericalError(msg.str());
  }
  sol.eigvals = es.eigenvalues();
  sol.eigvecs_local = es.eigenvectors();
  sol.eigvecs.resize(3 * d, 3 * d);
  for (int s = 0; s < 3; ++s)
    sol.eigvecs.middleRows(s * d, d) = instance.eigvecs * sol.eigvecs_local.middleRows(s * d, d);
  return sol;
}

ComplexMatrix interaction_propagator(const FloquetSolution& sol, Real t) {
  const int d = sol.d;
  const int dim = 3 * d;
  const ComplexMatrix mid_adj = sol.eigvecs_local.middleRows(d, d).adjoint();
  ComplexMatrix phased(dim, dim);
  for (int k = 0; k < dim; ++k)
    for (int row = 0; row < dim; ++row)
      phased(row, k) = sol.eigvecs_local(row, k) *
                       std::polar(1.0, (sol.ladder_diagonal(row) - sol.eigvals(k)) * t);
  ComplexMatrix local = ComplexMatrix::Zero(d, d);
  for (int s = 0; s < 3; ++s) local.noalias() += phased.middleRows(s * d, d) * mid_adj;
  return sol.g_eigvecs * local * sol.g_eigvecs.adjoint();
}

PropagatorSample propagate(const FloquetSolution& sol, Real t) {
  require(t >= 0, "propagate: t must be non-negative");
  const int d = sol.d;
  const ComplexVector evolve =
      (sol.eigvals * Complex(0, -t)).array().exp().matrix();  // e^{-i lambda t}
  const ComplexMatrix right = evolve.asDiagonal() * sol.eigvecs_local.middleRows(d, d).adjoint();

  PropagatorSample out;
  out.t = t;
  ComplexMatrix* blocks[3] = {&out.y_plus, &out.y_zero, &out.y_minus};
  for (int s = 0; s < 3; ++s)
    *blocks[s] = sol.g_eigvecs * (sol.eigvecs_local.middleRows(s * d, d) * right) *
                 sol.g_eigvecs.adjoint();
  out.u_phys = std::polar(1.0, sol.drive.omega * t) * out.y_plus + out.y_zero +
               std::polar(1.0, -sol.drive.omega * t) * out.y_minus;
  out.u_int = interaction_propagator(sol, t);
  return out;
}

std::vector<PropagatorSample> propagate_grid(const FloquetSolution& sol, std::span<const Real> t_grid) {
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    require(t_grid[i] >= 0, "propagate_grid: times must be non-negative");
    require(i == 0 || t_grid[i] > t_grid[i - 1], "propagate_grid: times must be strictly ascending");
  }
  std::vector<PropagatorSample> out;
  out.reserve(t_grid.size());
  for (Real t : t_grid) out.push_back(propagate(sol, t));
  return out;
}

ComplexMatrix trotter_propagator(const ControlInstance& instance, const DriveParams& drive,
                                 Real t_final, Real dt) {
  require(dt > 0, "trotter_propagator: dt must be positive");
  require(t_final >= dt, "trotter_propagator: t_final must be at least one step");
  const auto& w = instance.eigvecs;
  auto free_step = [&](Real h) -> ComplexMatrix {
    const ComplexVector phases = (instance.eigvals * Complex(0, -h)).array().exp().matrix();
    return w * phases.asDiagonal() * w.adjoint();
  };

  const auto full_steps = static_cast<long>(std::floor(t_final / dt * (1 + 1e-12)));
  const Real remainder = t_final - static_cast<Real>(full_steps) * dt;
  const ComplexMatrix step_g = free_step(dt);
  const int d = instance.d;

  ComplexMatrix u = ComplexMatrix::Identity(d, d);
  auto apply = [&](Real tk, Real h, const ComplexMatrix& g_factor) {
    const Real amp = drive.b_eff * std::cos(drive.omega * tk + drive.phase) * h;
    for (int i = 0; i < d; ++i) u.row(i) *= std::polar(1.0, -amp * instance.z_diag(i));
    u = g_factor * u;
  };
  for (long k = 0; k < full_steps; ++k) apply(static_cast<Real>(k) * dt, dt, step_g);
  if (remainder > 1e-12 * dt) apply(static_cast<Real>(full_steps) * dt, remainder, free_step(remainder));
  return u;
}

TrotterScan trotter_error_scan(const ControlInstance& instance, const DriveParams& drive,
                               Real t_final, std::span<const Real> dt_list) {
  require(dt_list.size() >= 3, "trotter_error_scan: need at least three step sizes to fit a slope");
  for (std::size_t i = 1; i < dt_list.size(); ++i)
    require(dt_list[i] > dt_list[i - 1], "trotter_error_scan: dt_list must be ascending");
  TrotterScan scan;
  scan.t_final = t_final;
  scan.reference_dt = dt_list.front() / 32;
  const ComplexMatrix reference = trotter_propagator(instance, drive, t_final, scan.reference_dt);
  for (Real dt : dt_list) {
    scan.dt.push_back(dt);
    scan.error_norm.push_back(operator_norm(trotter_propagator(instance, drive, t_final, dt) - reference));
  }

  constexpr Real kRoundOff = 1e-10;
  std::vector<Real> xs, ys;
  for (std::size_t i = 0; i < scan.dt.size(); ++i)
    if (scan.error_norm[i] > kRoundOff) {
      xs.push_back(std::log(scan.dt[i]));
      ys.push_back(std::log(scan.error_norm[i]));
    }
  if (xs.size() < 2) {
    scan.degenerate = true;
    return scan;
  }
  const auto n = static_cast<Real>(xs.size());
  Real mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  Real sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  scan.slope = sxy / sxx;
  return scan;
}

}  // namespace bbsense
