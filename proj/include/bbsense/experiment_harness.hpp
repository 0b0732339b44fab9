#pragma once

// Stopping-time experiments over (m, b_min, r) cells: one sample draws a
// carrier frequency and a fresh control instance, evolves the GHZ probe on a
// geometric time grid and records the first crossing of the stopping
// statistic. Sweeps aggregate samples per cell and fit log T against log X
// with X = sqrt(delta_omega) / (m b_min)^{3/2}.

#include "bbsense/control_hamiltonian.hpp"
#include "bbsense/ghz_probe.hpp"
#include "bbsense/types.hpp"
#include "bbsense/witness_stats.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace bbsense {

inline constexpr const char* kVersion = "0.1.0";

struct GridPolicy {
  Real t_min_factor{0.01};     // t_min = factor * X
  Real growth{1.05};           // geometric ratio between grid points
  Real t_max_multiplier{20};   // t_max = multiplier * X
};

/// One sweep cell; b_min_fraction is relative to omega_min.
struct CellSpec {
  int m{1};
  Real r{8};
  Real b_min_fraction{1e-3};

  bool operator==(const CellSpec&) const = default;
};

struct Constants {
  Real c1{1};
  Real c2{1};
  Real c_ceiling{1};
  Real c_test{1};

  bool operator==(const Constants&) const = default;
};

enum class Units { rad, hz };

struct SweepConfig {
  std::vector<CellSpec> cells;
  Units units{Units::rad};
  Real omega_min_input{kTwoPi * 1e8};  // in `units`
  int n_samples{8};
  Real threshold{0.1};
  StopStatistic statistic{StopStatistic::l1_diagonal};
  GridPolicy grid;
  Seed seed_root{20240601};
  Real max_drive_ratio{0.05};
  Real signal_scale{1};  // B = signal_scale * b_min; 0 injects the null
  Constants constants;

  Real omega_min() const { return units == Units::hz ? kTwoPi * omega_min_input : omega_min_input; }
};

void validate(const SweepConfig& config);

/// Cell with absolute amplitude; the canonical sort key is (m, b_min, r).
struct Cell {
  int id{};
  int m{1};
  Real b_min{};
  Real r{};
};

/// Cells of the config in canonical order with ids 0, 1, ...; duplicates rejected.
std::vector<Cell> canonical_cells(const SweepConfig& config);

BandSpec cell_band(const SweepConfig& config, const Cell& cell);

/// X = sqrt(delta_omega) / (m b_min)^{3/2}.
Real predicted_scale(const BandSpec& band);

/// Seed of one sample, derived from the cell contents rather than its position.
Seed sample_seed(const SweepConfig& config, const Cell& cell, int sample_index);

std::vector<Real> stopping_grid(const GridPolicy& policy, Real x_value);

struct StoppingResult {
  int cell_id{};
  int sample_index{};
  Seed seed{};
  Real omega_sampled{};
  int d{};
  std::optional<Real> stop_time;
  Real final_statistic{};
  bool grid_exhausted{};
  int clamp_events{};

  bool operator==(const StoppingResult&) const = default;
};

StoppingResult run_instance(const SweepConfig& config, const Cell& cell, int sample_index);

struct CellStats {
  int cell_id{};
  int m{};
  Real b_min{};
  Real r{};
  Real delta_omega{};
  Real x_value{};
  std::optional<Real> t_mean;
  std::optional<Real> t_std;  // sample standard deviation, 0 for a single valid sample
  int n_valid{};
  int n_samples{};

  bool operator==(const CellStats&) const = default;
};

struct LogLogFit {
  Real slope{};
  Real intercept{};
  Real residual_rms{};
  Real slope_stderr{};
  Real ci95_low{};
  Real ci95_high{};
  int n_points{};

  bool operator==(const LogLogFit&) const = default;
};

/// OLS of log y on log x. Needs at least two distinct x values.
LogLogFit fit_loglog(const std::vector<Real>& x, const std::vector<Real>& y);

struct ScalingDataset {
  std::vector<CellStats> cells;
  std::optional<LogLogFit> fit;
  std::vector<StoppingResult> samples;
  std::vector<std::string> warnings;

  bool operator==(const ScalingDataset&) const = default;
};

struct SweepOptions {
  int jobs{1};
  std::function<void(const std::string&)> log;
};

ScalingDataset run_sweep(const SweepConfig& config, const SweepOptions& options = {});

/// Per-cell statistics and the fit from samples already in canonical order.
ScalingDataset aggregate(const SweepConfig& config, const std::vector<Cell>& cells,
                         std::vector<StoppingResult> samples);

struct FlatnessScan {
  std::vector<WitnessPoint> points;
  FlatnessReport report;
};

/// p_det of the m-register probe at t_eval on n_omega uniformly spaced
/// carriers spanning the band, with drive amplitude b.
FlatnessScan flatness_scan(const ControlInstance& instance, const BandSpec& band, Real b,
                           Real t_eval, int n_omega, Real max_drive_ratio = 0.05);

/// Same on a fresh control instance drawn for the band from `seed`.
FlatnessScan flatness_scan(const BandSpec& band, Seed seed, Real b, Real t_eval, int n_omega,
                           Real max_drive_ratio = 0.05);

}  // namespace bbsense
