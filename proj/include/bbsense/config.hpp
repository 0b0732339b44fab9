#pragma once

// JSON run configuration. Every field is optional and defaulted; unknown keys
// are rejected with their dotted path. See README for the schema.

#include "bbsense/experiment_harness.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace bbsense {

/// Schema violation; `path` is the dotted location of the offending field.
class SchemaError : public PreconditionError {
 public:
  SchemaError(std::string path, const std::string& message)
      : PreconditionError(path.empty() ? message : path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct FlatnessSettings {
  int m{1};
  Real b_min_fraction{1e-3};
  std::vector<Real> ratios{4, 8, 16, 32, 64};  // delta_omega / (m b)
  int n_omega{64};
  Real t_eval_multiplier{1};  // t_eval = multiplier * X
  int seed_index{0};

  bool operator==(const FlatnessSettings&) const = default;
};

struct TrotterSettings {
  int m{1};
  Real r{8};
  Real b_fraction{0.05};  // drive amplitude relative to omega_min
  Real t_final_periods{4};
  std::vector<Real> dt_periods{1.0 / 256, 1.0 / 128, 1.0 / 64, 1.0 / 32};
  bool commuting{false};  // replace G by its diagonal eigenvalue matrix
  int seed_index{0};

  bool operator==(const TrotterSettings&) const = default;
};

struct InstanceSettings {
  int m{1};
  Real r{8};
  Real b_min_fraction{1e-3};
  int sample_index{0};

  bool operator==(const InstanceSettings&) const = default;
};

struct AppConfig {
  SweepConfig sweep;
  FlatnessSettings flatness;
  TrotterSettings trotter;
  InstanceSettings instance;
};

/// Default desk grid: m in {1, 2}, r in {8, 16, 32, 64}, b_min_fraction in {1e-3, 3e-3}.
std::vector<CellSpec> default_cells();

AppConfig parse_config(const nlohmann::json& doc);
nlohmann::json config_to_json(const AppConfig& config);

nlohmann::json load_json_file(const std::string& path);

/// Applies "dotted.key=value"; value is parsed as JSON, falling back to a string.
void apply_override(nlohmann::json& doc, const std::string& assignment);

/// Replaces seed_root by BBSENSE_SEED when that variable is set.
void apply_seed_environment(nlohmann::json& doc);

std::string to_string(Units units);
std::string to_string(StopStatistic statistic);

}  // namespace bbsense
