#include "bbsense/experiment_harness.hpp"

#include "bbsense/floquet_propagator.hpp"
#include "bbsense/seeding.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <thread>
#include <tuple>

namespace bbsense {

namespace {

std::string format_cell(const Cell& c) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "cell %d (m=%d, r=%.6g, b_min=%.6g)", c.id, c.m, c.r, c.b_min);
  return buf;
}

// Two-sided 95% Student t quantiles for 1..30 degrees of freedom.
Real t_quantile_95(int dof) {
  static constexpr Real table[] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228,
                                   2.201,  2.179, 2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086,
                                   2.080,  2.074, 2.069, 2.064, 2.060, 2.056, 2.052, 2.048, 2.045, 2.042};
  if (dof < 1) return std::numeric_limits<Real>::infinity();
  if (dof <= 30) return table[dof - 1];
  return 1.960;
}

// Uniform in [0, 1) from the top 53 bits, identical on every standard library.
Real unit_uniform(std::mt19937_64& rng) { return static_cast<Real>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

void validate(const SweepConfig& config) {
  require(!config.cells.empty(), "sweep config: no cells");
  require(config.n_samples >= 1, "sweep config: n_samples must be >= 1");
  require(config.omega_min() > 0, "sweep config: omega_min must be positive");
  require(config.threshold >= 0, "sweep config: threshold must be non-negative");
  require(config.grid.t_min_factor > 0 && config.grid.growth > 1 &&
              config.grid.t_max_multiplier >= config.grid.t_min_factor,
          "sweep config: invalid time-grid policy");
  require(config.max_drive_ratio > 0, "sweep config: max_drive_ratio must be positive");
  require(config.signal_scale >= 0, "sweep config: signal_scale must be non-negative");
  for (const CellSpec& c : config.cells) {
    require(c.m >= 1, "sweep config: m must be >= 1");
    require(c.r >= 4, "sweep config: r must be >= 4 (band much wider than one bucket)");
    require(c.b_min_fraction > 0 && c.b_min_fraction <= 1,
            "sweep config: b_min_fraction must lie in (0, 1]");
  }
}

std::vector<Cell> canonical_cells(const SweepConfig& config) {
  validate(config);
  std::vector<Cell> cells;
  for (const CellSpec& c : config.cells)
    cells.push_back({0, c.m, c.b_min_fraction * config.omega_min(), c.r});
  std::sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
    return std::tie(a.m, a.b_min, a.r) < std::tie(b.m, b.b_min, b.r);
  });
  for (std::size_t i = 1; i < cells.size(); ++i)
    require(std::tie(cells[i].m, cells[i].b_min, cells[i].r) !=
                std::tie(cells[i - 1].m, cells[i - 1].b_min, cells[i - 1].r),
            "sweep config: duplicate cell");
  for (std::size_t i = 0; i < cells.size(); ++i) cells[i].id = static_cast<int>(i);
  return cells;
}

BandSpec cell_band(const SweepConfig& config, const Cell& cell) {
  return make_band_from_ratio(config.omega_min(), cell.r, cell.b_min, cell.m);
}

Real predicted_scale(const BandSpec& band) {
  const Real mb = band.m * band.b_min;
  return std::sqrt(band.delta_omega) / (mb * std::sqrt(mb));
}

Seed sample_seed(const SweepConfig& config, const Cell& cell, int sample_index) {
  return derive_seed(config.seed_root, {static_cast<Seed>(cell.m), bits_of(cell.r), bits_of(cell.b_min),
                                        static_cast<Seed>(sample_index)});
}

std::vector<Real> stopping_grid(const GridPolicy& policy, Real x_value) {
  return geometric_grid(policy.t_min_factor * x_value, policy.t_max_multiplier * x_value, policy.growth);
}

StoppingResult run_instance(const SweepConfig& config, const Cell& cell, int sample_index) {
  require(sample_index >= 0, "run_instance: sample index must be non-negative");
  const BandSpec band = cell_band(config, cell);
  StoppingResult out;
  out.cell_id = cell.id;
  out.sample_index = sample_index;
  out.seed = sample_seed(config, cell, sample_index);

  std::mt19937_64 rng(derive_seed(out.seed, {2}));
  out.omega_sampled = band.omega_min + band.delta_omega * unit_uniform(rng);

  const ControlInstance instance = make_control_instance(band, derive_seed(out.seed, {1}));
  out.d = instance.d;
  const DriveParams drive{config.signal_scale * cell.b_min, out.omega_sampled, 0};
  const FloquetSolution sol = assemble_floquet(instance, drive, {config.max_drive_ratio});

  const std::vector<Real> grid = stopping_grid(config.grid, predicted_scale(band));
  const DetectionTrace trace =
      detection_trace(sol, cell.m, grid, config.threshold, {config.statistic, true});
  out.stop_time = trace.stop_time;
  out.grid_exhausted = !trace.stop_time;
  out.clamp_events = trace.clamp_events;
  const auto& series =
      config.statistic == StopStatistic::l1_diagonal ? trace.l1_series : trace.p_det_series;
  out.final_statistic = series.empty() ? 0 : series.back();
  return out;
}

LogLogFit fit_loglog(const std::vector<Real>& x, const std::vector<Real>& y) {
  require(x.size() == y.size(), "fit_loglog: size mismatch");
  require(x.size() >= 2, "fit_loglog: need at least two points");
  const auto n = static_cast<Real>(x.size());
  std::vector<Real> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    require(x[i] > 0 && y[i] > 0, "fit_loglog: values must be positive");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  const Real mx = std::accumulate(lx.begin(), lx.end(), Real{0}) / n;
  const Real my = std::accumulate(ly.begin(), ly.end(), Real{0}) / n;
  Real sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  require(sxx > 0, "fit_loglog: x values are all equal");
  LogLogFit fit;
  fit.n_points = static_cast<int>(x.size());
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  Real ssr = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const Real e = ly[i] - (fit.intercept + fit.slope * lx[i]);
    ssr += e * e;
  }
  fit.residual_rms = std::sqrt(ssr / n);
  const int dof = fit.n_points - 2;
  fit.slope_stderr = dof > 0 ? std::sqrt(ssr / dof / sxx) : 0;
  const Real half = dof > 0 ? t_quantile_95(dof) * fit.slope_stderr : 0;
  fit.ci95_low = fit.slope - half;
  fit.ci95_high = fit.slope + half;
  return fit;
}

ScalingDataset aggregate(const SweepConfig& config, const std::vector<Cell>& cells,
                         std::vector<StoppingResult> samples) {
  ScalingDataset data;
  std::vector<Real> fit_x, fit_y;
  for (const Cell& cell : cells) {
    const BandSpec band = cell_band(config, cell);
    CellStats s;
    s.cell_id = cell.id;
    s.m = cell.m;
    s.b_min = cell.b_min;
    s.r = cell.r;
    s.delta_omega = band.delta_omega;
    s.x_value = predicted_scale(band);
    std::vector<Real> times;
    for (const StoppingResult& r : samples) {
      if (r.cell_id != cell.id) continue;
      ++s.n_samples;
      if (r.stop_time) times.push_back(*r.stop_time);
    }
    s.n_valid = static_cast<int>(times.size());
    if (!times.empty()) {
      const Real mean = std::accumulate(times.begin(), times.end(), Real{0}) / times.size();
      Real var = 0;
      for (Real t : times) var += (t - mean) * (t - mean);
      s.t_mean = mean;
      s.t_std = times.size() > 1 ? std::sqrt(var / (times.size() - 1)) : 0;
    }
    if (s.n_valid == 0)
      data.warnings.push_back(format_cell(cell) + ": all samples exhausted the grid; excluded from fit");
    else if (s.n_valid < s.n_samples)
      data.warnings.push_back(format_cell(cell) + ": " + std::to_string(s.n_samples - s.n_valid) +
                              " of " + std::to_string(s.n_samples) + " samples exhausted the grid");
    if (s.n_valid >= 3) {
      fit_x.push_back(s.x_value);
      fit_y.push_back(*s.t_mean);
    }
    data.cells.push_back(s);
  }
  const bool distinct_x =
      fit_x.size() >= 2 && std::adjacent_find(fit_x.begin(), fit_x.end(), std::not_equal_to<>()) != fit_x.end();
  if (distinct_x)
    data.fit = fit_loglog(fit_x, fit_y);
  else
    data.warnings.push_back("fit skipped: fewer than two cells with n_valid >= 3 and distinct X");
  data.samples = std::move(samples);
  return data;
}

ScalingDataset run_sweep(const SweepConfig& config, const SweepOptions& options) {
  const std::vector<Cell> cells = canonical_cells(config);
  const std::size_t n_tasks = cells.size() * static_cast<std::size_t>(config.n_samples);
  std::vector<StoppingResult> results(n_tasks);
  std::vector<std::exception_ptr> errors(n_tasks);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t k = next++; k < n_tasks; k = next++) {
      const Cell& cell = cells[k / config.n_samples];
      const int sample = static_cast<int>(k % config.n_samples);
      try {
        results[k] = run_instance(config, cell, sample);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const int jobs = std::max(1, std::min<int>(options.jobs, static_cast<int>(n_tasks)));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  ScalingDataset data = aggregate(config, cells, std::move(results));
  if (options.log)
    for (const std::string& w : data.warnings) options.log(w);
  return data;
}

FlatnessScan flatness_scan(const ControlInstance& instance, const BandSpec& band, Real b, Real t_eval,
                           int n_omega, Real max_drive_ratio) {
  require(n_omega >= 8, "flatness_scan: need at least 8 carrier frequencies");
  require(t_eval >= 0, "flatness_scan: t_eval must be non-negative");
  FlatnessScan out;
  for (int k = 0; k < n_omega; ++k) {
    const Real omega = band.omega_min + band.delta_omega * k / (n_omega - 1);
    const FloquetSolution sol = assemble_floquet(instance, {b, omega, 0}, {max_drive_ratio});
    const GhzReadout r = ghz_readout(interaction_propagator(sol, t_eval), band.m);
    out.points.push_back(make_witness_point(omega, r.p_det));
  }
  out.report = flatness_report(out.points, band, b);
  return out;
}

FlatnessScan flatness_scan(const BandSpec& band, Seed seed, Real b, Real t_eval, int n_omega,
                           Real max_drive_ratio) {
  return flatness_scan(make_control_instance(band, seed), band, b, t_eval, n_omega, max_drive_ratio);
}

}  // namespace bbsense
