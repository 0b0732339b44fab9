#include "bbsense/control_hamiltonian.hpp"

#include "bbsense/seeding.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <random>

namespace bbsense {

void validate(const BandSpec& band) {
  require(band.omega_min > 0, "band: omega_min must be positive");
  require(band.delta_omega > 0, "band: delta_omega must be positive");
  require(band.b_min > 0, "band: b_min must be positive");
  require(band.m >= 1, "band: register count m must be >= 1");
  require(band.omega_min >= band.b_min,
          "band: omega_min < b_min is the quasi-static regime, not supported");
}

BandSpec make_band(Real omega_min, Real delta_omega, Real b_min, int m) {
  BandSpec band;
  band.omega_min = omega_min;
  band.delta_omega = delta_omega;
  band.b_min = b_min;
  band.m = m;
  validate(band);
  band.bucket_width = m * b_min;
  band.r = delta_omega / band.bucket_width;
  return band;
}

BandSpec make_band_from_ratio(Real omega_min, Real r, Real b_min, int m) {
  require(r > 0, "band: ratio r must be positive");
  return make_band(omega_min, r * m * b_min, b_min, m);
}

int bucket_count(Real r) {
  require(r > 0, "bucket_count: r must be positive");
  return std::max(1, static_cast<int>(std::ceil(r * (1.0 - 1e-12))));
}

int nearest_power_of_two(Real r) {
  require(r > 0, "nearest_power_of_two: r must be positive");
  if (r <= 2) return 2;
  Real lo = 1;
  while (lo * 2 <= r) lo *= 2;
  const Real hi = 2 * lo;
  const Real pick = (r - lo >= hi - r) ? hi : lo;
  return std::max(2, static_cast<int>(pick));
}

SSHParams band_to_ssh_params(const BandSpec& band) {
  validate(band);
  require(band.r >= 1.0 - 1e-12,
          "band_to_ssh_params: r < 1 (band narrower than one bucket) degenerates to a "
          "single Rabi resonance");
  SSHParams p;
  const int d = nearest_power_of_two(band.r);
  p.cells = d / 2;
  p.a_half = band.omega_min / 2;
  p.b_half = (band.omega_min + band.delta_omega) / 2;
  p.t1 = (p.a_half + p.b_half) / 2;
  p.t2 = (p.b_half - p.a_half) / 2;
  p.periodic = true;
  return p;
}

RealMatrix build_ssh_matrix(const SSHParams& params) {
  require(params.cells >= 1, "build_ssh_matrix: need at least one unit cell");
  const int d = params.dimension();
  RealMatrix h = RealMatrix::Zero(d, d);
  for (int cell = 0; cell < params.cells; ++cell) {
    const int a = 2 * cell;
    const int b = a + 1;
    h(a, b) += params.t1;
    h(b, a) += params.t1;
    if (cell + 1 < params.cells || params.periodic) {
      const int next_a = (a + 2) % d;
      h(b, next_a) += params.t2;
      h(next_a, b) += params.t2;
    }
  }
  return h;
}

ComplexMatrix sample_haar_unitary(int d, Seed seed) {
  require(d >= 2, "sample_haar_unitary: d must be >= 2");
  std::mt19937_64 rng(seed);
  std::normal_distribution<Real> normal(0.0, std::sqrt(0.5));
  ComplexMatrix ginibre(d, d);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) {
      const Real re = normal(rng);
      const Real im = normal(rng);
      ginibre(i, j) = Complex(re, im);
    }
  Eigen::HouseholderQR<ComplexMatrix> qr(ginibre);
  ComplexMatrix q = qr.householderQ();
  const ComplexMatrix& packed = qr.matrixQR();
  for (int i = 0; i < d; ++i) {
    const Complex rii = packed(i, i);
    const Real mag = std::abs(rii);
    if (mag > 0) q.col(i) *= rii / mag;
  }
  return q;
}

RealVector signal_generator_diagonal(int d) {
  require(d >= 1 && std::has_single_bit(static_cast<unsigned>(d)),
          "signal_generator_diagonal: d must be a power of two");
  const int n = std::countr_zero(static_cast<unsigned>(d));
  RealVector z(d);
  for (int i = 0; i < d; ++i) z(i) = n - 2 * std::popcount(static_cast<unsigned>(i));
  return z;
}

namespace {

ControlInstance conjugated_instance(const SSHParams& params, Seed seed, ComplexMatrix u) {
  ControlInstance inst;
  inst.d = params.dimension();
  inst.n = std::countr_zero(static_cast<unsigned>(inst.d));
  inst.seed = seed;
  inst.g_ssh = build_ssh_matrix(params);
  require(u.rows() == inst.d && u.cols() == inst.d, "conjugating unitary has the wrong shape");

  Eigen::SelfAdjointEigenSolver<RealMatrix> ssh(inst.g_ssh);
  if (ssh.info() != Eigen::Success) throw NumericalError("SSH eigensolver failed");

  ComplexMatrix g = u * inst.g_ssh.cast<Complex>() * u.adjoint();
  inst.g_single = (g + g.adjoint()) / 2.0;
  inst.eigvals = ssh.eigenvalues();
  inst.eigvecs = u * ssh.eigenvectors().cast<Complex>();
  inst.u_conj = std::move(u);
  inst.z_diag = signal_generator_diagonal(inst.d);
  return inst;
}

}  // namespace

ControlInstance make_control_instance(const BandSpec& band, Seed seed) {
  const SSHParams params = band_to_ssh_params(band);
  return conjugated_instance(params, seed, sample_haar_unitary(params.dimension(), seed));
}

ControlInstance make_control_instance(const BandSpec& band, Seed seed, const ComplexMatrix& u_conj) {
  return conjugated_instance(band_to_ssh_params(band), seed, u_conj);
}

ControlInstance make_instance_from_hamiltonian(const ComplexMatrix& g_single,
                                               const RealVector& z_diag, Seed seed) {
  const auto d = g_single.rows();
  require(d >= 1 && g_single.cols() == d, "make_instance_from_hamiltonian: G must be square");
  require(z_diag.size() == d, "make_instance_from_hamiltonian: generator size mismatch");
  require((g_single - g_single.adjoint()).norm() <= 1e-12 * std::max<Real>(1, g_single.norm()),
          "make_instance_from_hamiltonian: G must be Hermitian");
  ControlInstance inst;
  inst.d = static_cast<int>(d);
  inst.n = std::has_single_bit(static_cast<unsigned>(d))
               ? std::countr_zero(static_cast<unsigned>(d))
               : 0;
  inst.seed = seed;
  inst.u_conj = ComplexMatrix::Identity(d, d);
  inst.g_single = (g_single + g_single.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(inst.g_single);
  if (es.info() != Eigen::Success) throw NumericalError("control eigensolver failed");
  inst.eigvals = es.eigenvalues();
  inst.eigvecs = es.eigenvectors();
  inst.z_diag = z_diag;
  return inst;
}

TransversalityStats transversality_stats(const ControlInstance& instance, std::size_t n_eigvecs,
                                         const TransversalityOptions& options) {
  require(n_eigvecs >= 30, "transversality_stats: need at least 30 eigenvectors");
  require(instance.g_ssh.rows() == instance.d,
          "transversality_stats: instance has no SSH chain to re-conjugate");
  const RealVector observable = options.observable.value_or(instance.z_diag);
  require(observable.size() == instance.d, "transversality_stats: observable size mismatch");

  Eigen::SelfAdjointEigenSolver<RealMatrix> ssh(instance.g_ssh);
  if (ssh.info() != Eigen::Success) throw NumericalError("SSH eigensolver failed");
  const ComplexMatrix phi = ssh.eigenvectors().cast<Complex>();

  std::vector<Real> xs;
  xs.reserve(n_eigvecs);
  for (Seed k = 0; xs.size() < n_eigvecs; ++k) {
    const ComplexMatrix v =
        sample_haar_unitary(instance.d, derive_seed(instance.seed, {0x7472616e73ULL, k})) * phi;
    for (int col = 0; col < instance.d && xs.size() < n_eigvecs; ++col)
      xs.push_back(v.col(col).cwiseAbs2().dot(observable));
  }

  TransversalityStats out;
  const auto count = static_cast<Real>(xs.size());
  out.samples = xs.size();
  Real mean = 0;
  for (Real x : xs) mean += x;
  mean /= count;
  Real m2 = 0, m4 = 0;
  for (Real x : xs) {
    const Real dx2 = (x - mean) * (x - mean);
    m2 += dx2;
    m4 += dx2 * dx2;
  }
  out.sample_mean = mean;
  out.sample_var = m2 / (count - 1);
  const Real pop_var = m2 / count;
  const Real mu4 = m4 / count;
  out.var_std_error =
      std::sqrt(std::max<Real>(0, (mu4 - pop_var * pop_var * (count - 3) / (count - 1)) / count));
  out.predicted_var = static_cast<Real>(instance.n) / (instance.d + 1);
  for (Real t : options.tail_thresholds) {
    const auto hits = std::count_if(xs.begin(), xs.end(), [t](Real x) { return std::abs(x) >= t; });
    out.tail_exceedances.emplace_back(t, static_cast<Real>(hits) / count);
  }
  return out;
}

std::optional<Real> fit_levy_constant(const TransversalityStats& stats, int d, int n) {
  std::optional<Real> best;
  for (const auto& [t, fraction] : stats.tail_exceedances) {
    if (fraction <= 0 || t <= 0) continue;
    const Real c = -std::log(fraction / 2) * n * n / (d * t * t);
    if (!best || c < *best) best = c;
  }
  return best;
}

GapSpectrum gap_spectrum(const ControlInstance& instance) {
  const ComplexMatrix z_eig = instance.eigvecs.adjoint() * instance.z_single() * instance.eigvecs;
  GapSpectrum out;
  const int d = instance.d;
  out.gaps.reserve(static_cast<std::size_t>(d) * (d - 1) / 2);
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      Gap g;
      g.frequency = std::max<Real>(0, instance.eigvals(j) - instance.eigvals(i));
      g.weight = std::norm(z_eig(j, i));
      g.lower = i;
      g.upper = j;
      g.interband = instance.eigvals(i) < 0 && instance.eigvals(j) > 0;
      out.gaps.push_back(g);
    }
  std::stable_sort(out.gaps.begin(), out.gaps.end(),
                   [](const Gap& a, const Gap& b) { return a.frequency < b.frequency; });
  return out;
}

Real default_weight_floor(const GapSpectrum& spectrum) {
  std::vector<Real> w;
  for (const Gap& g : spectrum.gaps)
    if (g.interband) w.push_back(g.weight);
  if (w.empty()) return 0;
  const auto mid = w.begin() + static_cast<std::ptrdiff_t>(w.size() / 2);
  std::nth_element(w.begin(), mid, w.end());
  Real median = *mid;
  if (w.size() % 2 == 0) median = (median + *std::max_element(w.begin(), mid)) / 2;
  return 0.1 * median;
}

namespace {

CoverageReport coverage_of(std::vector<Real> freqs, const BandSpec& band, Real floor) {
  CoverageReport out;
  out.weight_floor = floor;
  out.n_buckets = bucket_count(band.r);
  const Real lo = band.omega_min;
  const Real hi = band.omega_max();
  if (freqs.empty()) {
    out.covered_fraction = 0;
    out.max_detuning = band.delta_omega;
    return out;
  }
  std::sort(freqs.begin(), freqs.end());

  const Real width = band.delta_omega / out.n_buckets;
  std::vector<bool> hit(static_cast<std::size_t>(out.n_buckets), false);
  for (Real f : freqs) {
    if (f < lo || f > hi) continue;
    auto k = static_cast<int>(std::floor((f - lo) / width));
    k = std::clamp(k, 0, out.n_buckets - 1);
    hit[static_cast<std::size_t>(k)] = true;
  }
  out.covered_fraction =
      static_cast<Real>(std::count(hit.begin(), hit.end(), true)) / out.n_buckets;

  auto distance = [&](Real w) {
    auto it = std::lower_bound(freqs.begin(), freqs.end(), w);
    Real best = std::numeric_limits<Real>::infinity();
    if (it != freqs.end()) best = *it - w;
    if (it != freqs.begin()) best = std::min(best, w - *std::prev(it));
    return best;
  };
  Real worst = std::max(distance(lo), distance(hi));
  for (std::size_t j = 0; j + 1 < freqs.size(); ++j) {
    const Real mid = 0.5 * (freqs[j] + freqs[j + 1]);
    if (mid > lo && mid < hi) worst = std::max(worst, distance(mid));
  }
  out.max_detuning = worst;
  return out;
}

}  // namespace

CoverageReport bucket_coverage(const GapSpectrum& spectrum, const BandSpec& band, Real weight_floor) {
  require(weight_floor >= 0, "bucket_coverage: weight_floor must be non-negative");
  std::vector<Real> freqs;
  for (const Gap& g : spectrum.gaps)
    if (g.weight >= weight_floor) freqs.push_back(g.frequency);
  return coverage_of(std::move(freqs), band, weight_floor);
}

CoverageReport bucket_coverage(std::span<const Real> frequencies, const BandSpec& band) {
  return coverage_of(std::vector<Real>(frequencies.begin(), frequencies.end()), band, 0);
}

}  // namespace bbsense
