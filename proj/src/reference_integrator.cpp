#include "bbsense/reference_integrator.hpp"

#include <cmath>

namespace bbsense {

namespace {

// exp(-i A) for small Hermitian A: Taylor to fifth order when ||A|| is small,
// otherwise through the eigendecomposition.
ComplexMatrix expm_minus_i(const ComplexMatrix& a) {
  const Real size = a.cwiseAbs().rowwise().sum().maxCoeff();  // induced inf-norm bound
  const auto d = a.rows();
  if (size < 1e-2) {
    const ComplexMatrix x = Complex(0, -1) * a;
    ComplexMatrix term = ComplexMatrix::Identity(d, d);
    ComplexMatrix sum = term;
    for (int k = 1; k <= 5; ++k) {
      term = (term * x) / static_cast<Real>(k);
      sum += term;
    }
    return sum;
  }
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(a);
  const ComplexVector ph = (es.eigenvalues() * Complex(0, -1)).array().exp().matrix();
  return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace

std::vector<ComplexMatrix> reference_interaction_grid(const ControlInstance& instance,
                                                      const DriveParams& drive,
                                                      std::span<const Real> t_grid,
                                                      int steps_per_period) {
  require(drive.omega > 0, "reference integrator: omega must be positive");
  require(steps_per_period >= 8, "reference integrator: steps_per_period too small");
  const int d = instance.d;
  const ComplexMatrix& w = instance.eigvecs;
  const RealVector& e = instance.eigvals;
  const ComplexMatrix z_local = w.adjoint() * instance.z_single() * w;
  const Real max_step = kTwoPi / drive.omega / steps_per_period;

  std::vector<ComplexMatrix> out;
  out.reserve(t_grid.size());
  ComplexMatrix u = ComplexMatrix::Identity(d, d);  // G eigenbasis
  ComplexMatrix gen(d, d);
  Real now = 0;
  for (Real target : t_grid) {
    require(target >= now, "reference integrator: grid must be ascending and non-negative");
    const auto steps = static_cast<long>(std::ceil((target - now) / max_step));
    const Real h = steps > 0 ? (target - now) / static_cast<Real>(steps) : 0;
    for (long k = 0; k < steps; ++k) {
      const Real tm = now + (static_cast<Real>(k) + 0.5) * h;
      const Real amp = drive.b_eff * std::cos(drive.omega * tm + drive.phase) * h;
      const ComplexVector rot = (e * Complex(0, tm)).array().exp().matrix();
      for (int j = 0; j < d; ++j)
        for (int i = 0; i < d; ++i) gen(i, j) = amp * rot(i) * z_local(i, j) * std::conj(rot(j));
      u = expm_minus_i(gen) * u;
    }
    now = target;
    out.push_back(w * u * w.adjoint());
  }
  return out;
}

}  // namespace bbsense
